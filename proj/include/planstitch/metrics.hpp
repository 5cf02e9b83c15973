#pragma once

#include <Eigen/Core>

#include <optional>
#include <span>
#include <vector>

#include "planstitch/geom.hpp"

namespace planstitch {

// Minimum-cost perfect assignment on a square cost matrix; result[row] = col.
std::vector<int> hungarian(const Eigen::MatrixXd& cost);

struct KeypointMatch {
  double meanError = 0.0;  // meters
  bool correct = false;
};

// One-to-one matching padded to max(n, m); every unmatched keypoint costs
// 0.1 * diag. Correct when the mean is at most 0.05 * diag.
KeypointMatch metric_layout_correct(std::span<const Vec2> estimated, std::span<const Vec2> truth, double diag);

struct PoseError {
  double rotErrorDeg = 180.0;
  double transErrorPct = 100.0;
};

// Both lists map fragment frames to world. The estimate is first moved by
// truth[gauge] * estimated[gauge]^-1; missing estimates score worst case.
std::vector<PoseError> metric_pose_errors(std::span<const std::optional<Eigen::Matrix4d>> estimated,
                                          std::span<const Eigen::Matrix4d> truth, double diag, int gauge = 0);

double rotation_angle_deg(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b);

struct LayoutError {
  double avgPct = 0.0;
  double maxPct = 0.0;
  bool flagged = false;  // estimate was not closed
};

// Samples truth walls and floor on a regular lattice and measures the
// distance to the nearest estimated face.
LayoutError metric_layout_error(const RectilinearPolygon& estimated, bool estimatedClosed,
                                const RectilinearPolygon& truth, double wallHeight, double samplesPerM2, double diag);

}  // namespace planstitch
