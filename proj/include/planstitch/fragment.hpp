#pragma once

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

#include "planstitch/geom.hpp"

namespace planstitch {

// Plane n.p = offset; `inliers` index into the owning fragment's points.
struct PlaneModel {
  Eigen::Vector3d normal = Eigen::Vector3d::UnitX();
  double offset = 0.0;
  int inlierCount = 0;
  std::vector<int> inliers;
};

struct Fragment {
  std::string id;
  std::vector<Point3> points;
  // Camera-to-fragment rigid transform, when the scan came with a pose.
  std::optional<Eigen::Matrix4d> cameraPose;
  std::optional<ManhattanFrame> frame;
  std::vector<PlaneModel> planes;
  // Rotation applied to the original file coordinates so far.
  Eigen::Matrix3d alignment = Eigen::Matrix3d::Identity();
};

// Rotates points, planes, frame and camera pose in place and composes the
// rotation into `alignment`.
void apply_rotation(Fragment& f, const Eigen::Matrix3d& rotation);

}  // namespace planstitch
