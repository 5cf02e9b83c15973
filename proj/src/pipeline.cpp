#include "planstitch/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <map>

#include "planstitch/error.hpp"
#include "planstitch/planes.hpp"

namespace planstitch {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

Eigen::Matrix4d in_plane_pose(int rotIndex, const Vec2& t) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rot_index_matrix3(rotIndex);
  m(1, 3) = t.x();
  m(2, 3) = t.y();
  return m;
}

constexpr double kHorizontalCos = 0.9659;  // 15 degrees

// Fragments that see little floor (a short straight wall) fall below the
// RANSAC support threshold, which leaves the tilt about the wall normal
// unobserved. Retry on the leftover points with a tenth of the support and
// keep horizontal planes only.
void add_weak_floor(Fragment& f, const PipelineConfig& cfg) {
  const Eigen::Vector3d up = up_prior(f).normalized();
  for (const auto& p : f.planes) {
    if (std::abs(p.normal.dot(up)) >= kHorizontalCos) return;
  }
  std::vector<bool> used(f.points.size(), false);
  for (const auto& p : f.planes) {
    for (int i : p.inliers) used[i] = true;
  }
  Fragment rest;
  rest.id = f.id + "#floor";
  std::vector<int> back;
  for (std::size_t i = 0; i < f.points.size(); ++i) {
    if (used[i]) continue;
    rest.points.push_back(f.points[i]);
    back.push_back(static_cast<int>(i));
  }
  RansacParams rp = cfg.ransac();
  rp.minInliers = std::max(30, rp.minInliers / 10);
  rp.maxPlanes = 5;
  if (static_cast<int>(rest.points.size()) < rp.minInliers) return;
  for (auto& p : extract_planes(rest, rp)) {
    if (std::abs(p.normal.dot(up)) < kHorizontalCos) continue;
    for (int& i : p.inliers) i = back[i];
    f.planes.push_back(std::move(p));
  }
}

}  // namespace

Eigen::Matrix4d PreparedFragment::transform() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = upAlign;
  m(0, 3) = floorOffset;
  return m;
}

PreparedFragment prepare_fragment(Fragment f, const PipelineConfig& cfg) {
  if (static_cast<int>(f.points.size()) < cfg.minFragmentPoints) {
    throw PreconditionError("fragment " + f.id + " has " + std::to_string(f.points.size()) +
                            " points, fewer than " + std::to_string(cfg.minFragmentPoints));
  }
  PreparedFragment out;
  f.planes = extract_planes(f, cfg.ransac());
  add_weak_floor(f, cfg);
  out.planeCount = static_cast<int>(f.planes.size());
  f.frame = estimate_mw_frame(f.planes, up_prior(f));
  align_up(f);
  square_in_plane(f);
  const FloorInfo floor = remove_horizontal(f);
  double floorX = 0.0;
  if (floor.floorHeight) {
    floorX = *floor.floorHeight;
    out.floorFound = true;
  } else {
    floorX = std::numeric_limits<double>::infinity();
    for (const auto& p : f.points) floorX = std::min(floorX, p.x());
    if (f.points.empty()) floorX = 0.0;
  }
  for (auto& p : f.points) p.x() -= floorX;
  if (f.cameraPose) (*f.cameraPose)(0, 3) -= floorX;
  f.planes.clear();
  out.upAlign = f.alignment;
  out.floorOffset = -floorX;
  out.interiorHint = floor.interiorHint;
  out.floorSamples = floor.floorSamples;
  out.fragment = std::move(f);
  return out;
}

LocalRun run_local(Fragment f, const PipelineConfig& cfg) {
  cfg.validate();
  LocalRun out;
  out.prepared = prepare_fragment(std::move(f), cfg);
  out.local = estimate_local_layout(out.prepared.fragment, cfg.local(), out.prepared.interiorHint, out.prepared.floorSamples);
  return out;
}

PlacementProblem placement_problem(std::span<const PlacedUnit> units, const PipelineConfig& cfg) {
  PlacementProblem prob;
  std::vector<BoundarySet> boundaries;
  for (const auto& u : units) {
    prob.layouts.push_back(u.local.path);
    boundaries.push_back(u.boundary);
  }
  prob.pairScore = build_pair_table(prob.layouts, boundaries, cfg.sigma);
  prob.tol = EnergyTolerances::for_cell(cfg.cellSize, static_cast<int>(units.size()));
  prob.weights = cfg.weights();
  return prob;
}

PlacedPaths placed_paths(std::span<const LayoutPath> layouts, const Placement& placement) {
  PlacedPaths placed;
  for (const auto& s : placement.slots) {
    const Vec2 t = placement.translationOf[s.fragment];
    std::vector<Vec2> kp;
    for (const auto& v : layouts[s.fragment].keypoints) kp.push_back(rotate_quarter(v, s.rotIndex) + t);
    placed.push_back(std::move(kp));
  }
  return placed;
}

void place_and_refine(AlignResult& res, const PipelineConfig& cfg) {
  auto t0 = Clock::now();
  const PlacementProblem prob = placement_problem(res.units, cfg);
  if (cfg.solver == Solver::Brute && static_cast<int>(res.units.size()) > cfg.bruteLimit) {
    throw CapacityError("brute-force placement is limited to " + std::to_string(cfg.bruteLimit) + " fragments");
  }
  res.placement = solve_placement(prob, cfg.solver);
  res.timings.placementMs = ms_since(t0);

  t0 = Clock::now();
  const PlacedPaths placed = placed_paths(prob.layouts, res.placement);
  res.refinement = refine_placement(placed, res.placement.energy.closure, cfg.refine());
  if (!res.refinement.refined) res.warnings.push_back("refinement infeasible; kept the unrefined placement");
  res.layout = finalize_layout(placed, res.refinement.translations, cfg.snapTol);
  if (!res.layout.closed) res.warnings.push_back("global layout is not a closed rectilinear polygon");
  res.timings.refineMs = ms_since(t0);

  std::map<std::string, Eigen::Matrix4d> world;
  res.unitPoses.clear();
  res.transforms.clear();
  for (std::size_t f = 0; f < res.units.size(); ++f) {
    const auto& u = res.units[f];
    const int slot = res.placement.slotOf[f];
    FragmentPose pose;
    pose.upAlign = u.prepared.upAlign;
    pose.rotIndex = res.placement.rotIndexOf[f];
    pose.translation = res.placement.translationOf[f] + res.refinement.translations[slot];
    pose.floorOffset = u.prepared.floorOffset;
    res.unitPoses.push_back(pose);
    const Eigen::Matrix4d P = in_plane_pose(pose.rotIndex, pose.translation);
    for (const auto& m : u.members) world.emplace(m.id, P * m.toMerged * res.prepTransforms.at(m.id));
  }
  for (const auto& id : res.inputOrder) {
    auto it = world.find(id);
    if (it != world.end()) res.transforms.emplace_back(id, it->second);
  }
}

AlignResult run_pipeline(std::vector<Fragment> inputs, const PipelineConfig& cfg) {
  cfg.validate();
  AlignResult res;

  auto t0 = Clock::now();
  std::vector<PreparedFragment> prepared;
  for (auto& f : inputs) {
    const std::string id = f.id;
    res.inputOrder.push_back(id);
    try {
      prepared.push_back(prepare_fragment(std::move(f), cfg));
      res.prepTransforms.emplace(id, prepared.back().transform());
    } catch (const Error& e) {
      res.warnings.push_back(id + ": " + e.what());
      res.failed.push_back(id);
    }
  }
  res.timings.prepareMs = ms_since(t0);

  t0 = Clock::now();
  std::vector<PlacedUnit> candidates;
  if (cfg.premerge && prepared.size() > 1) {
    std::vector<Fragment> frags;
    for (const auto& p : prepared) frags.push_back(p.fragment);
    auto merged = premerge_overlapping(std::move(frags), cfg.premergeParams());
    for (std::size_t i = 0; i < merged.fragments.size(); ++i) {
      const std::string& seedId = merged.members[i].front().id;
      auto seed = std::find_if(prepared.begin(), prepared.end(),
                               [&](const PreparedFragment& p) { return p.fragment.id == seedId; });
      PlacedUnit u;
      u.prepared = *seed;
      u.prepared.fragment = std::move(merged.fragments[i]);
      u.id = u.prepared.fragment.id;
      u.members = merged.members[i];
      if (u.members.size() > 1) res.warnings.push_back("premerged " + u.id);
      candidates.push_back(std::move(u));
    }
  } else {
    for (auto& p : prepared) {
      PlacedUnit u;
      u.id = p.fragment.id;
      u.members = {PremergeMember{u.id, Eigen::Matrix4d::Identity()}};
      u.prepared = std::move(p);
      candidates.push_back(std::move(u));
    }
  }
  res.timings.premergeMs = ms_since(t0);

  t0 = Clock::now();
  for (auto& u : candidates) {
    try {
      u.local = estimate_local_layout(u.prepared.fragment, cfg.local(), u.prepared.interiorHint, u.prepared.floorSamples);
      u.boundary = extract_boundary_sets(u.prepared.fragment.points, u.local.path, cfg.boundary());
      res.units.push_back(std::move(u));
    } catch (const Error& e) {
      res.warnings.push_back(u.id + ": " + e.what());
      for (const auto& m : u.members) res.failed.push_back(m.id);
    }
  }
  res.timings.localMs = ms_since(t0);
  if (res.units.empty()) throw EstimationError("no fragment produced a local layout");

  place_and_refine(res, cfg);
  return res;
}

}  // namespace planstitch
