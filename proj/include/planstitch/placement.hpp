#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "planstitch/geom.hpp"

namespace planstitch {

// Boundary points in a fragment's aligned frame, x measured from the floor.
// Each set is shifted in plan so the wall end it describes lies on its
// keypoint (lateral median and along-wall extremity).
struct BoundarySet {
  std::vector<Point3> head;  // near the source
  std::vector<Point3> rear;  // near the target
};

struct BoundaryParams {
  double band = 0.10;    // distance to the cutting plane
  double radius = 1.0;   // plan distance to the keypoint
  int maxPoints = 500;   // deterministic stride subsample above this
};

BoundarySet extract_boundary_sets(std::span<const Point3> points, const LayoutPath& path,
                                  const BoundaryParams& params = {});

// Per-point mismatch erf(d / (sigma sqrt 2)), d capped at 4 sigma, averaged
// over both sets; 0.5 when either set has fewer than 50 points.
double boundary_mismatch_pair(std::span<const Point3> rear, std::span<const Point3> head, double sigma = 0.05);
double point_mismatch(double d, double sigma);

struct Concatenation {
  std::vector<Vec2> path;
  std::vector<Vec2> translations;  // per slot
  // Index in `path` where each slot's keypoints begin.
  std::vector<std::size_t> slotStart;
};

// Each entry is (layout, rotIndex), in slot order. Slot 1 keeps translation 0
// and every following source is moved onto the previous target.
Concatenation concatenate(std::span<const std::pair<const LayoutPath*, int>> layouts);

struct EnergyTolerances {
  double jog = 0.0;    // shorter segments are ignored when counting corners
  double hull = 0.0;   // hull vertices this close to a chord are dropped
  double cross = 0.0;  // contact allowance for the crossing check
  // Each joint can shift the chain by up to a cell of quantization error, so
  // the jog and hull allowances grow with the number of joined fragments.
  static EnergyTolerances for_cell(double cellSize, int fragments = 1) {
    const double grow = 1.5 * cellSize + 0.5 * cellSize * std::max(0, fragments - 1);
    return {grow, grow, 1.5 * cellSize};
  }
};

// Closes the open chain with the cheaper Manhattan L between its ends.
std::vector<Vec2> close_with_manhattan_gap(std::span<const Vec2> chain, double jogTol);

int energy_layout_complexity(std::span<const Vec2> chain, const EnergyTolerances& tol = {});
double energy_closure(std::span<const Vec2> chain);

struct PlacementEnergy {
  int layoutComplexity = 0;
  double closure = 0.0;
  double boundaryMismatch = 0.0;
  double total = 0.0;
};

struct PlacementWeights {
  double layout = 1.0;
  double closure = 1.0;
  double boundary = 1.0;
};

struct SlotChoice {
  int fragment = 0;
  int rotIndex = 1;
  auto operator<=>(const SlotChoice&) const = default;
};

struct PlacementProblem {
  std::vector<LayoutPath> layouts;
  // pairScore[k][l][r-1]: rear of k against head of l when l is rotated by
  // r relative to k and joined to it. Diagonal entries unused.
  std::vector<std::vector<std::array<double, 4>>> pairScore;
  EnergyTolerances tol;
  PlacementWeights weights;
};

std::vector<std::vector<std::array<double, 4>>> build_pair_table(std::span<const LayoutPath> layouts,
                                                                 std::span<const BoundarySet> boundaries,
                                                                 double sigma = 0.05);

int relative_rot_index(int from, int to);

// Energy of one full slot sequence, or nullopt when the chain crosses itself.
std::optional<PlacementEnergy> evaluate_placement(const PlacementProblem& prob, std::span<const SlotChoice> slots);

enum class Solver { Dfs, Brute };

struct Placement {
  std::vector<SlotChoice> slots;   // slot order
  std::vector<int> slotOf;         // per fragment, 0-based
  std::vector<int> rotIndexOf;     // per fragment
  std::vector<Vec2> translationOf; // per fragment
  std::vector<Vec2> path;          // concatenated chain
  PlacementEnergy energy;
  std::uint64_t leavesEvaluated = 0;
  std::uint64_t nodesExpanded = 0;
};

inline constexpr int kBruteForceLimit = 6;

// Global minimizer over all bijective (rotation, slot) assignments; ties go to
// the lexicographically smallest slot sequence. Throws CapacityError for
// brute force beyond kBruteForceLimit fragments and PlacementError when no
// assignment is free of crossings.
Placement solve_placement(const PlacementProblem& prob, Solver solver = Solver::Dfs);

}  // namespace planstitch
