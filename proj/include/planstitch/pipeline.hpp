#pragma once

#include <Eigen/Core>

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "planstitch/config.hpp"
#include "planstitch/fragment.hpp"
#include "planstitch/local_layout.hpp"
#include "planstitch/placement.hpp"
#include "planstitch/premerge.hpp"
#include "planstitch/refine.hpp"

namespace planstitch {

// A fragment after up-alignment, in-plane squaring, floor removal and the
// floor shift to x = 0.
struct PreparedFragment {
  Fragment fragment;
  Eigen::Matrix3d upAlign = Eigen::Matrix3d::Identity();
  double floorOffset = 0.0;  // added to aligned x
  bool floorFound = false;
  std::optional<Vec2> interiorHint;
  std::vector<Vec2> floorSamples;
  int planeCount = 0;

  // Original file coordinates to prepared coordinates.
  Eigen::Matrix4d transform() const;
};

// Throws PreconditionError below cfg.minFragmentPoints and
// FrameEstimationError when no Manhattan frame is found.
PreparedFragment prepare_fragment(Fragment f, const PipelineConfig& cfg);

// One placement unit: a prepared fragment, or several merged ones.
struct PlacedUnit {
  std::string id;
  std::vector<PremergeMember> members;
  PreparedFragment prepared;
  LocalLayoutResult local;
  BoundarySet boundary;
};

struct StageTimings {
  double prepareMs = 0.0;
  double premergeMs = 0.0;
  double localMs = 0.0;
  double placementMs = 0.0;
  double refineMs = 0.0;
};

struct AlignResult {
  std::vector<PlacedUnit> units;
  std::vector<std::string> warnings;
  std::vector<std::string> failed;  // input ids left out
  Placement placement;
  RefinementResult refinement;
  GlobalLayout layout;
  std::vector<FragmentPose> unitPoses;  // parallel to units
  // World transform of every usable input fragment, in input order.
  std::vector<std::pair<std::string, Eigen::Matrix4d>> transforms;
  std::vector<std::string> inputOrder;
  std::map<std::string, Eigen::Matrix4d> prepTransforms;  // file -> prepared frame
  StageTimings timings;
};

// Throws EstimationError when no fragment yields a local layout, and
// PlacementError or CapacityError from the placement stage.
AlignResult run_pipeline(std::vector<Fragment> inputs, const PipelineConfig& cfg);

PlacementProblem placement_problem(std::span<const PlacedUnit> units, const PipelineConfig& cfg);

// Each slot's keypoints rotated and translated by the placement.
PlacedPaths placed_paths(std::span<const LayoutPath> layouts, const Placement& placement);

// Placement, refinement, final layout and transforms for res.units; the
// stages after local estimation, rerunnable with different weights.
void place_and_refine(AlignResult& res, const PipelineConfig& cfg);

// Prepare plus local layout for one fragment (no placement).
struct LocalRun {
  PreparedFragment prepared;
  LocalLayoutResult local;
};
LocalRun run_local(Fragment f, const PipelineConfig& cfg);

}  // namespace planstitch
