#pragma once

#include <Eigen/Core>

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "planstitch/geom.hpp"
#include "planstitch/qp.hpp"

namespace planstitch {

enum class JointKind { Parallel, Perpendicular };
enum class ConstraintKind { ParallelEquality, ParallelNonOverlap, PerpendicularOrder };

// coeffs . (y_i, z_i, y_j, z_j) + constant  (== 0 or <= 0), where i and j
// are the slots of the previous and next fragment at the joint.
struct JointConstraint {
  ConstraintKind kind = ConstraintKind::ParallelEquality;
  int slotI = 0;
  int slotJ = 0;
  Eigen::Vector4d coeffs = Eigen::Vector4d::Zero();
  double constant = 0.0;
  bool equality = true;

  double evaluate(const Vec2& ti, const Vec2& tj) const {
    return coeffs.dot(Eigen::Vector4d(ti.x(), ti.y(), tj.x(), tj.y())) + constant;
  }
};

struct Joint {
  int slotI = 0;  // contributes its target q_i
  int slotJ = 0;  // contributes its source p_j
};

// Placed keypoints per slot; every path has at least two keypoints.
using PlacedPaths = std::vector<std::vector<Vec2>>;

JointKind classify_joint(std::span<const Vec2> prev, std::span<const Vec2> next);

std::vector<Joint> chain_joints(int slots, bool includeWrapAround);

struct ConstraintBuild {
  std::vector<JointConstraint> constraints;
  int droppedNonOverlap = 0;  // joints where a path has a single segment
};

ConstraintBuild build_constraints(const PlacedPaths& placed, std::span<const Joint> joints, double eps = 1e-4);

// Joint distance objective sum ||(q_i + t_i) - (p_j + t_j)||^2.
double joint_objective(const PlacedPaths& placed, std::span<const Joint> joints, std::span<const Vec2> t);

// Assembles the QP over all slots except `gauge`.
QuadraticProgram refinement_qp(const PlacedPaths& placed, std::span<const Joint> joints,
                               std::span<const JointConstraint> constraints, int gauge = 0);

struct RefinementResult {
  std::vector<Vec2> translations;  // per slot, added to the placement
  double objective = 0.0;
  double initialObjective = 0.0;
  double maxEqualityResidual = 0.0;
  double maxInequalityViolation = 0.0;
  bool refined = false;           // false: fallback to the unrefined placement
  bool wrapIncluded = false;      // wrap-around pair in the objective
  bool wrapConstrained = false;   // and in the constraint set
  int droppedNonOverlap = 0;
  std::vector<int> conflicting;   // indices into `constraints` on failure
  std::vector<JointConstraint> constraints;
};

// Throws RefinementError with the conflicting subset when infeasible.
RefinementResult solve_refinement(const PlacedPaths& placed, std::span<const Joint> joints,
                                  std::span<const JointConstraint> constraints, int gauge = 0);

struct RefineConfig {
  double closureGate = 1.0;
  double eps = 1e-4;
};

// Gates the wrap-around pair on `closure`; if the system is infeasible,
// retries without wrap-around constraints and finally returns the
// unrefined placement with `refined == false`.
RefinementResult refine_placement(const PlacedPaths& placed, double closure, const RefineConfig& config = {});

struct GlobalLayout {
  RectilinearPolygon polygon;
  bool closed = false;
  bool snapped = false;
  double residualGap = 0.0;  // Manhattan gap before snapping
};

// Joins the translated paths at their joints and closes the loop by snapping
// when the gap is at most snapTol.
GlobalLayout finalize_layout(const PlacedPaths& placed, std::span<const Vec2> translations, double snapTol = 0.3);

std::string format_obj(const GlobalLayout& layout, double wallHeight = 2.6);

}  // namespace planstitch
