#include "planstitch/metrics.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "planstitch/error.hpp"
#include "planstitch/synth.hpp"

namespace planstitch {

std::vector<int> hungarian(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw PreconditionError("assignment cost matrix must be square");
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials formulation
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> result(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] > 0) result[p[j] - 1] = j - 1;
  }
  return result;
}

KeypointMatch metric_layout_correct(std::span<const Vec2> estimated, std::span<const Vec2> truth, double diag) {
  const int n = static_cast<int>(estimated.size());
  const int m = static_cast<int>(truth.size());
  const int k = std::max(n, m);
  KeypointMatch out;
  if (k == 0) {
    out.correct = true;
    return out;
  }
  const double penalty = 0.1 * diag;
  Eigen::MatrixXd cost = Eigen::MatrixXd::Constant(k, k, penalty);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) cost(i, j) = (estimated[i] - truth[j]).norm();
  }
  const auto match = hungarian(cost);
  double total = 0.0;
  for (int i = 0; i < k; ++i) total += cost(i, match[i]);
  out.meanError = total / k;
  out.correct = out.meanError <= 0.05 * diag;
  return out;
}

double rotation_angle_deg(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  const Eigen::Matrix3d r = a.transpose() * b;
  const double c = std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

std::vector<PoseError> metric_pose_errors(std::span<const std::optional<Eigen::Matrix4d>> estimated,
                                          std::span<const Eigen::Matrix4d> truth, double diag, int gauge) {
  const std::size_t n = truth.size();
  std::vector<PoseError> out(n);
  if (gauge < 0 || static_cast<std::size_t>(gauge) >= n || gauge >= static_cast<int>(estimated.size()) ||
      !estimated[gauge]) {
    gauge = -1;
    for (std::size_t i = 0; i < std::min(n, estimated.size()); ++i) {
      if (estimated[i]) {
        gauge = static_cast<int>(i);
        break;
      }
    }
  }
  if (gauge < 0) return out;
  const Eigen::Matrix4d G = truth[gauge] * estimated[gauge]->inverse();
  for (std::size_t i = 0; i < n; ++i) {
    if (i >= estimated.size() || !estimated[i]) continue;
    const Eigen::Matrix4d e = G * (*estimated[i]);
    out[i].rotErrorDeg = rotation_angle_deg(e.topLeftCorner<3, 3>(), truth[i].topLeftCorner<3, 3>());
    out[i].transErrorPct =
        100.0 * (e.topRightCorner<3, 1>() - truth[i].topRightCorner<3, 1>()).norm() / diag;
  }
  return out;
}

namespace {

double distance_to_faces(const Eigen::Vector3d& s, const std::vector<Vec2>& est, bool closed, double wallHeight) {
  const Vec2 q(s.y(), s.z());
  const double dh = std::max({0.0, s.x() - wallHeight, -s.x()});
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = est.size();
  const std::size_t edges = closed ? n : (n == 0 ? 0 : n - 1);
  double planNearest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < edges; ++i) {
    const double d = point_segment_distance(q, est[i], est[(i + 1) % n]);
    planNearest = std::min(planNearest, d);
    best = std::min(best, std::hypot(d, dh));
  }
  if (closed && n >= 3) {
    const double d = point_in_polygon(q, est) ? std::abs(s.x()) : std::hypot(s.x(), planNearest);
    best = std::min(best, d);
  }
  return best;
}

}  // namespace

LayoutError metric_layout_error(const RectilinearPolygon& estimated, bool estimatedClosed,
                                const RectilinearPolygon& truth, double wallHeight, double samplesPerM2, double diag) {
  LayoutError out;
  out.flagged = !estimatedClosed;
  const double h = 1.0 / std::sqrt(samplesPerM2);
  std::vector<Eigen::Vector3d> samples;
  const auto& tv = truth.vertices;
  const std::size_t n = tv.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = tv[i];
    const Vec2 b = tv[(i + 1) % n];
    const double len = (b - a).norm();
    const int na = std::max(1, static_cast<int>(std::floor(len / h)));
    const int nh = std::max(1, static_cast<int>(std::floor(wallHeight / h)));
    for (int s = 0; s < na; ++s) {
      const Vec2 p = a + (b - a) * ((s + 0.5) / na);
      for (int t = 0; t < nh; ++t) samples.emplace_back(wallHeight * (t + 0.5) / nh, p.x(), p.y());
    }
  }
  Vec2 lo = tv.front(), hi = lo;
  for (const auto& v : tv) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  for (double y = lo.x() + 0.5 * h; y < hi.x(); y += h) {
    for (double z = lo.y() + 0.5 * h; z < hi.y(); z += h) {
      if (point_in_polygon(Vec2(y, z), tv)) samples.emplace_back(0.0, y, z);
    }
  }
  if (samples.empty() || estimated.vertices.empty()) {
    out.avgPct = out.maxPct = 100.0;
    out.flagged = true;
    return out;
  }
  double sum = 0.0, mx = 0.0;
  for (const auto& s : samples) {
    const double d = distance_to_faces(s, estimated.vertices, estimatedClosed, wallHeight);
    sum += d;
    mx = std::max(mx, d);
  }
  out.avgPct = 100.0 * sum / static_cast<double>(samples.size()) / diag;
  out.maxPct = 100.0 * mx / diag;
  return out;
}

}  // namespace planstitch
