#include "planstitch/planes.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "planstitch/error.hpp"

namespace planstitch {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

struct Plane {
  Eigen::Vector3d n;
  double d;
};

// Least-squares plane through the given points (smallest PCA direction).
std::optional<Plane> fit_plane(const std::vector<Point3>& pts, const std::vector<int>& idx) {
  if (idx.size() < 3) return std::nullopt;
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (int i : idx) c += pts[i];
  c /= static_cast<double>(idx.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (int i : idx) {
    const Eigen::Vector3d d = pts[i] - c;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  Eigen::Vector3d n = es.eigenvectors().col(0).normalized();
  if (!n.allFinite()) return std::nullopt;
  return Plane{n, n.dot(c)};
}

// Deterministic sign: largest-magnitude component positive.
void canonicalize(Plane& p) {
  int k = 0;
  p.n.cwiseAbs().maxCoeff(&k);
  if (p.n[k] < 0) {
    p.n = -p.n;
    p.d = -p.d;
  }
}

std::vector<int> inliers_of(const Plane& p, const std::vector<Point3>& pts, const std::vector<int>& pool,
                            double thresh) {
  std::vector<int> out;
  for (int i : pool) {
    if (std::abs(p.n.dot(pts[i]) - p.d) <= thresh) out.push_back(i);
  }
  return out;
}

}  // namespace

std::vector<PlaneModel> extract_planes(const Fragment& f, const RansacParams& params) {
  std::vector<PlaneModel> planes;
  const auto& pts = f.points;
  std::vector<int> remaining(pts.size());
  std::iota(remaining.begin(), remaining.end(), 0);
  std::mt19937_64 rng(fnv1a(f.id));

  while (static_cast<int>(planes.size()) < params.maxPlanes &&
         static_cast<int>(remaining.size()) >= params.minInliers) {
    std::vector<int> sample = remaining;
    if (static_cast<int>(sample.size()) > params.scoreSample) {
      for (int i = 0; i < params.scoreSample; ++i) {
        std::uniform_int_distribution<std::size_t> d(i, sample.size() - 1);
        std::swap(sample[i], sample[d(rng)]);
      }
      sample.resize(params.scoreSample);
    }
    std::uniform_int_distribution<std::size_t> pick(0, sample.size() - 1);
    std::optional<Plane> best;
    int bestCount = -1;
    for (int it = 0; it < params.iterations; ++it) {
      const Point3& a = pts[sample[pick(rng)]];
      const Point3& b = pts[sample[pick(rng)]];
      const Point3& c = pts[sample[pick(rng)]];
      const Eigen::Vector3d n = (b - a).cross(c - a);
      const double len = n.norm();
      if (len < 1e-9) continue;
      Plane h{n / len, 0.0};
      h.d = h.n.dot(a);
      int count = 0;
      for (int i : sample) {
        if (std::abs(h.n.dot(pts[i]) - h.d) <= params.distThresh) ++count;
      }
      if (count > bestCount) {
        bestCount = count;
        best = h;
      }
    }
    if (!best) break;

    std::vector<int> inl = inliers_of(*best, pts, remaining, params.distThresh);
    for (int refine = 0; refine < 2; ++refine) {
      auto refit = fit_plane(pts, inl);
      if (!refit) break;
      auto next = inliers_of(*refit, pts, remaining, params.distThresh);
      if (next.size() < inl.size()) break;
      best = refit;
      inl = std::move(next);
    }
    if (static_cast<int>(inl.size()) < params.minInliers) break;

    Plane p = *best;
    canonicalize(p);
    PlaneModel pm;
    pm.normal = p.n;
    pm.offset = p.d;
    pm.inlierCount = static_cast<int>(inl.size());
    pm.inliers = inl;
    planes.push_back(std::move(pm));

    // inl is a sorted subsequence of remaining
    std::vector<int> rest;
    rest.reserve(remaining.size() - inl.size());
    std::set_difference(remaining.begin(), remaining.end(), inl.begin(), inl.end(), std::back_inserter(rest));
    remaining = std::move(rest);
  }
  return planes;
}

ManhattanFrame estimate_mw_frame(const std::vector<PlaneModel>& planes, const Eigen::Vector3d& up,
                                 double angleThreshDeg) {
  const double th = angleThreshDeg * std::numbers::pi / 180.0;
  const double cosTh = std::cos(th);
  const double sinTh = std::sin(th);

  struct Cluster {
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    Eigen::Vector3d dir = Eigen::Vector3d::Zero();
    double weight = 0.0;
  };
  std::vector<int> order(planes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return planes[a].inlierCount > planes[b].inlierCount; });

  std::vector<Cluster> clusters;
  for (int i : order) {
    const Eigen::Vector3d n = planes[i].normal.normalized();
    const double w = std::max(1, planes[i].inlierCount);
    bool placed = false;
    for (auto& c : clusters) {
      const double dot = c.dir.dot(n);
      if (std::abs(dot) >= cosTh) {
        c.sum += (dot >= 0 ? 1.0 : -1.0) * w * n;
        c.dir = c.sum.normalized();
        c.weight += w;
        placed = true;
        break;
      }
    }
    if (!placed) clusters.push_back({w * n, n, w});
  }

  const auto perp = [&](int a, int b) { return std::abs(clusters[a].dir.dot(clusters[b].dir)) <= sinTh; };
  double bestW = -1.0;
  int bi = -1, bj = -1, bk = -1;
  const int nc = static_cast<int>(clusters.size());
  for (int i = 0; i < nc; ++i) {
    for (int j = i + 1; j < nc; ++j) {
      if (!perp(i, j)) continue;
      const double wPair = clusters[i].weight + clusters[j].weight;
      if (wPair > bestW) {
        bestW = wPair;
        bi = i;
        bj = j;
        bk = -1;
      }
      for (int k = j + 1; k < nc; ++k) {
        if (!perp(i, k) || !perp(j, k)) continue;
        const double w = wPair + clusters[k].weight;
        if (w > bestW) {
          bestW = w;
          bi = i;
          bj = j;
          bk = k;
        }
      }
    }
  }
  if (bi < 0) {
    // A lone wall direction: complete the frame with the up prior projected
    // onto the wall plane.
    const Eigen::Vector3d upN = up.normalized();
    for (int i = 0; i < nc; ++i) {
      if (std::abs(clusters[i].dir.dot(upN)) > sinTh) continue;
      if (bi < 0 || clusters[i].weight > clusters[bi].weight) bi = i;
    }
    if (bi < 0) throw FrameEstimationError("no near-orthogonal pair of plane directions");
    const Eigen::Vector3d d = clusters[bi].dir;
    clusters.push_back({Eigen::Vector3d::Zero(), (upN - upN.dot(d) * d).normalized(), 0.0});
    bj = static_cast<int>(clusters.size()) - 1;
  }

  Eigen::Matrix3d m;
  m.col(0) = clusters[bi].dir;
  m.col(1) = clusters[bj].dir;
  m.col(2) = bk >= 0 ? clusters[bk].dir : clusters[bi].dir.cross(clusters[bj].dir).normalized();
  if (m.determinant() < 0) m.col(2) = -m.col(2);
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d r = svd.matrixU() * svd.matrixV().transpose();

  const Eigen::Vector3d upN = up.normalized();
  int ix = 0;
  for (int c = 1; c < 3; ++c) {
    if (std::abs(r.col(c).dot(upN)) > std::abs(r.col(ix).dot(upN))) ix = c;
  }
  ManhattanFrame frame;
  frame.axisX = r.col(ix) * (r.col(ix).dot(upN) < 0 ? -1.0 : 1.0);
  int iy = -1;
  for (int c = 0; c < 3; ++c) {
    if (c == ix) continue;
    if (iy < 0 || std::abs(r.col(c).y()) > std::abs(r.col(iy).y())) iy = c;
  }
  frame.axisY = r.col(iy) * (r.col(iy).y() < 0 ? -1.0 : 1.0);
  frame.axisZ = frame.axisX.cross(frame.axisY);
  return frame;
}

Eigen::Vector3d up_prior(const Fragment& f) {
  if (f.cameraPose) return f.cameraPose->block<3, 1>(0, 0).normalized();
  return Eigen::Vector3d::UnitX();
}

Eigen::Matrix3d align_up(Fragment& f) {
  if (!f.frame) throw PreconditionError("align_up requires an estimated frame");
  const Eigen::Matrix3d r =
      Eigen::Quaterniond::FromTwoVectors(f.frame->axisX, Eigen::Vector3d::UnitX()).toRotationMatrix();
  apply_rotation(f, r);
  // Frame axes may drift off exact by rounding; pin axisX to the target.
  f.frame->axisX = Eigen::Vector3d::UnitX();
  return r;
}

Eigen::Matrix3d square_in_plane(Fragment& f) {
  if (!f.frame) throw PreconditionError("square_in_plane requires an estimated frame");
  const double quarter = std::numbers::pi / 2.0;
  const double theta = std::atan2(f.frame->axisY.z(), f.frame->axisY.y());
  const double delta = theta - std::round(theta / quarter) * quarter;
  const Eigen::Matrix3d r = Eigen::AngleAxisd(-delta, Eigen::Vector3d::UnitX()).toRotationMatrix();
  apply_rotation(f, r);
  return r;
}

namespace {
constexpr std::size_t kMaxFloorSamples = 4000;
}  // namespace

FloorInfo remove_horizontal(Fragment& f, double band, double angleDeg) {
  FloorInfo info;
  const double cosTh = std::cos(angleDeg * std::numbers::pi / 180.0);
  std::vector<const PlaneModel*> horiz;
  for (const auto& p : f.planes) {
    if (std::abs(p.normal.x()) >= cosTh) horiz.push_back(&p);
  }
  if (horiz.empty()) return info;

  const PlaneModel* floor = nullptr;
  double floorX = 0.0;
  for (const auto* p : horiz) {
    const double x = p->offset / p->normal.x();
    if (!floor || x < floorX) {
      floor = p;
      floorX = x;
    }
  }
  info.floorHeight = floorX;
  if (!floor->inliers.empty()) {
    Vec2 c = Vec2::Zero();
    for (int i : floor->inliers) c += Vec2(f.points[i].y(), f.points[i].z());
    info.interiorHint = c / static_cast<double>(floor->inliers.size());
    const std::size_t stride = floor->inliers.size() / kMaxFloorSamples + 1;
    for (std::size_t i = 0; i < floor->inliers.size(); i += stride) {
      const auto& q = f.points[floor->inliers[i]];
      info.floorSamples.emplace_back(q.y(), q.z());
    }
  }

  std::vector<Point3> kept;
  kept.reserve(f.points.size());
  for (const auto& pt : f.points) {
    bool drop = false;
    for (const auto* p : horiz) {
      if (std::abs(p->normal.dot(pt) - p->offset) <= band) {
        drop = true;
        break;
      }
    }
    if (!drop) kept.push_back(pt);
  }
  info.removed = static_cast<int>(f.points.size() - kept.size());
  f.points = std::move(kept);
  for (auto& p : f.planes) p.inliers.clear();
  return info;
}

}  // namespace planstitch
