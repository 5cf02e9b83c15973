#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "planstitch/fragment.hpp"

namespace planstitch {

struct RansacParams {
  double distThresh = 0.02;
  int minInliers = 500;
  int maxPlanes = 20;
  int iterations = 1000;
  // Hypotheses are scored on a random subset of this size; the winner is
  // then re-scored and refit on all remaining points.
  int scoreSample = 4000;
};

std::uint64_t fnv1a(std::string_view s);

// Greedy sequential RANSAC. Seeded from the fragment id, so the result is a
// pure function of (points, id, params).
std::vector<PlaneModel> extract_planes(const Fragment& f, const RansacParams& params = {});

// `up` is the prior up direction in fragment coordinates.
ManhattanFrame estimate_mw_frame(const std::vector<PlaneModel>& planes,
                                 const Eigen::Vector3d& up = Eigen::Vector3d::UnitX(),
                                 double angleThreshDeg = 10.0);

// Camera up (its +X axis) when posed, world +X otherwise.
Eigen::Vector3d up_prior(const Fragment& f);

// Applies the minimal rotation taking frame.axisX onto +X and returns it.
Eigen::Matrix3d align_up(Fragment& f);

// Rotates about +X by at most 45 degrees so that frame.axisY lands on a
// coordinate axis. Returns the rotation applied.
Eigen::Matrix3d square_in_plane(Fragment& f);

struct FloorInfo {
  std::optional<double> floorHeight;  // x of the lowest horizontal plane
  std::optional<Vec2> interiorHint;   // (y, z) centroid of floor inliers
  std::vector<Vec2> floorSamples;     // (y, z) of floor inliers, stride subsampled
  int removed = 0;
};

// Drops points within `band` of every plane whose normal lies within
// `angleDeg` of +X. Plane inlier lists are cleared since indices change.
FloorInfo remove_horizontal(Fragment& f, double band = 0.10, double angleDeg = 15.0);

}  // namespace planstitch
