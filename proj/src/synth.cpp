#include "planstitch/synth.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "planstitch/error.hpp"

namespace planstitch {

bool point_in_polygon(const Vec2& p, std::span<const Vec2> poly) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 <= 0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

namespace {

double orient(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

bool segments_touch(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
  if (((o1 > 0 && o2 < 0) || (o1 < 0 && o2 > 0)) && ((o3 > 0 && o4 < 0) || (o3 < 0 && o4 > 0))) return true;
  auto on = [](const Vec2& p, const Vec2& q, const Vec2& r) {
    return std::min(p.x(), q.x()) <= r.x() && r.x() <= std::max(p.x(), q.x()) && std::min(p.y(), q.y()) <= r.y() &&
           r.y() <= std::max(p.y(), q.y());
  };
  return (o1 == 0 && on(a, b, c)) || (o2 == 0 && on(a, b, d)) || (o3 == 0 && on(c, d, a)) ||
         (o4 == 0 && on(c, d, b));
}

}  // namespace

double segment_distance(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  if (segments_touch(a, b, c, d)) return 0.0;
  return std::min({point_segment_distance(a, c, d), point_segment_distance(b, c, d), point_segment_distance(c, a, b),
                   point_segment_distance(d, a, b)});
}

double scene_diagonal(const RectilinearPolygon& layout, double wallHeight) {
  Vec2 lo = layout.vertices.front(), hi = lo;
  for (const auto& v : layout.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const Vec2 span = hi - lo;
  return std::sqrt(span.squaredNorm() + wallHeight * wallHeight);
}

namespace {

constexpr double kLattice = 0.5;
constexpr double kMinEdge = 1.0;

bool acceptable(const std::vector<Vec2>& v, int corners, double extent) {
  if (static_cast<int>(v.size()) != corners) return false;
  RectilinearPolygon poly{v};
  if (!is_valid_rectilinear(poly)) return false;
  if (signed_area(v) >= 0) return false;
  if (corner_count(v, true) != corners) return false;
  const std::size_t n = v.size();
  Vec2 lo = v[0], hi = v[0];
  for (const auto& p : v) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  if ((hi - lo).maxCoeff() > extent + 1e-9) return false;
  for (std::size_t i = 0; i < n; ++i) {
    if ((v[(i + 1) % n] - v[i]).norm() < kMinEdge - 1e-9) return false;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      if (segment_distance(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) < kMinEdge - 1e-9) return false;
    }
  }
  return true;
}

// Random lattice length in [lo, hi]; returns a negative value when empty.
double lattice_in(std::mt19937_64& rng, double lo, double hi) {
  const int a = static_cast<int>(std::ceil(lo / kLattice - 1e-9));
  const int b = static_cast<int>(std::floor(hi / kLattice + 1e-9));
  if (b < a) return -1.0;
  std::uniform_int_distribution<int> d(a, b);
  return d(rng) * kLattice;
}

std::vector<Vec2> notch(const std::vector<Vec2>& v, std::mt19937_64& rng) {
  const std::size_t n = v.size();
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  const std::size_t i = pick(rng);
  const Vec2& prev = v[(i + n - 1) % n];
  const Vec2& cur = v[i];
  const Vec2& next = v[(i + 1) % n];
  const double l1 = (prev - cur).norm();
  const double l2 = (next - cur).norm();
  const double d1 = lattice_in(rng, kMinEdge, l1 - kMinEdge);
  const double d2 = lattice_in(rng, kMinEdge, l2 - kMinEdge);
  if (d1 < 0 || d2 < 0) return {};
  const Vec2 u1 = (prev - cur) / l1;
  const Vec2 u2 = (next - cur) / l2;
  std::vector<Vec2> out;
  for (std::size_t k = 0; k < n; ++k) {
    if (k != i) {
      out.push_back(v[k]);
      continue;
    }
    out.push_back(cur + u1 * d1);
    out.push_back(cur + u1 * d1 + u2 * d2);
    out.push_back(cur + u2 * d2);
  }
  return out;
}

std::vector<Vec2> dent(const std::vector<Vec2>& v, std::mt19937_64& rng, double extent) {
  const std::size_t n = v.size();
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  const std::size_t i = pick(rng);
  const Vec2& a = v[i];
  const Vec2& b = v[(i + 1) % n];
  const double len = (b - a).norm();
  const double s = lattice_in(rng, kMinEdge, len - 2 * kMinEdge);
  if (s < 0) return {};
  const double w = lattice_in(rng, kMinEdge, len - s - kMinEdge);
  const double depth = lattice_in(rng, kMinEdge, std::max(kMinEdge, 0.4 * extent));
  if (w < 0 || depth < 0) return {};
  const Vec2 u = (b - a) / len;
  Vec2 nrm(-u.y(), u.x());
  if (std::bernoulli_distribution(0.5)(rng)) nrm = -nrm;
  std::vector<Vec2> out;
  for (std::size_t k = 0; k < n; ++k) {
    out.push_back(v[k]);
    if (k != i) continue;
    out.push_back(a + u * s);
    out.push_back(a + u * s + nrm * depth);
    out.push_back(a + u * (s + w) + nrm * depth);
    out.push_back(a + u * (s + w));
  }
  return out;
}

}  // namespace

RectilinearPolygon gen_scene(std::uint64_t seed, int cornerCount, double extent) {
  if (cornerCount < 4 || cornerCount % 2 != 0) {
    throw PreconditionError("corner count must be even and at least 4, got " + std::to_string(cornerCount));
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> frac(0.5, 1.0);
  for (int attempt = 0; attempt < 200; ++attempt) {
    const double w = std::max(2 * kMinEdge, std::round(frac(rng) * extent / kLattice) * kLattice);
    const double h = std::max(2 * kMinEdge, std::round(frac(rng) * extent / kLattice) * kLattice);
    std::vector<Vec2> poly{{0, 0}, {0, h}, {w, h}, {w, 0}};
    bool ok = acceptable(poly, 4, extent);
    while (ok && static_cast<int>(poly.size()) < cornerCount) {
      const int need = cornerCount - static_cast<int>(poly.size());
      bool grown = false;
      for (int tries = 0; tries < 100 && !grown; ++tries) {
        const bool useDent = need >= 4 && std::bernoulli_distribution(0.5)(rng);
        auto cand = useDent ? dent(poly, rng, extent) : notch(poly, rng);
        if (cand.empty()) continue;
        if (acceptable(cand, static_cast<int>(poly.size()) + (useDent ? 4 : 2), extent)) {
          poly = std::move(cand);
          grown = true;
        }
      }
      ok = grown;
    }
    if (ok) return RectilinearPolygon{poly};
  }
  throw GenerationError("could not generate a " + std::to_string(cornerCount) + "-corner layout within extent " +
                        std::to_string(extent));
}

namespace {

struct Perimeter {
  const std::vector<Vec2>& v;
  std::vector<double> cum;  // arc length at each vertex, cum[n] = total
  double total = 0.0;

  explicit Perimeter(const std::vector<Vec2>& verts) : v(verts) {
    cum.push_back(0.0);
    for (std::size_t i = 0; i < v.size(); ++i) cum.push_back(cum.back() + (v[(i + 1) % v.size()] - v[i]).norm());
    total = cum.back();
  }

  double wrap(double u) const {
    u = std::fmod(u, total);
    return u < 0 ? u + total : u;
  }

  Vec2 at(double u) const {
    u = wrap(u);
    const std::size_t n = v.size();
    std::size_t i = std::upper_bound(cum.begin(), cum.end(), u) - cum.begin() - 1;
    i = std::min(i, n - 1);
    const Vec2& a = v[i];
    const Vec2& b = v[(i + 1) % n];
    const double len = cum[i + 1] - cum[i];
    return a + (b - a) * ((u - cum[i]) / len);
  }

  // Polyline from u0 to u1 (u1 > u0, may exceed total).
  std::vector<Vec2> polyline(double u0, double u1) const {
    std::vector<Vec2> out{at(u0)};
    const std::size_t n = v.size();
    for (int lap = 0; lap < 3; ++lap) {
      for (std::size_t i = 0; i < n; ++i) {
        const double c = cum[i] + lap * total;
        if (c > u0 + 1e-9 && c < u1 - 1e-9) out.push_back(v[i]);
      }
    }
    out.push_back(at(u1));
    return out;
  }

  double corner_clearance(double u) const {
    double best = total;
    u = wrap(u);
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double d = std::abs(u - cum[i]);
      best = std::min({best, d, total - d});
    }
    return best;
  }
};

}  // namespace

GroundTruthScene fragment_scene(const RectilinearPolygon& layout, const FragmentParams& params) {
  if (params.k < 1) throw PreconditionError("fragment count must be at least 1");
  if (params.overlapFrac < 0 || params.overlapFrac > 0.3) throw PreconditionError("overlap fraction must be in [0, 0.3]");
  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Perimeter per(layout.vertices);
  const double total = per.total;

  // split positions
  std::vector<double> splits;
  bool found = false;
  for (int attempt = 0; attempt < 1000 && !found; ++attempt) {
    splits.clear();
    for (int i = 0; i < params.k; ++i) splits.push_back(unit(rng) * total);
    std::sort(splits.begin(), splits.end());
    found = true;
    for (int i = 0; i < params.k && found; ++i) {
      if (per.corner_clearance(splits[i]) < 0.5) found = false;
      const double next = i + 1 < params.k ? splits[i + 1] : splits[0] + total;
      if (params.k > 1 && next - splits[i] < 1.0) found = false;
    }
  }
  if (!found) throw GenerationError("could not split the perimeter into " + std::to_string(params.k) + " arcs");

  GroundTruthScene scene;
  scene.layout = layout;
  scene.diag = scene_diagonal(layout, params.wallHeight);
  std::normal_distribution<double> noise(0.0, params.noiseSigma > 0 ? params.noiseSigma : 1.0);
  auto jitter = [&]() { return params.noiseSigma > 0 ? noise(rng) : 0.0; };

  for (int f = 0; f < params.k; ++f) {
    double u0 = splits[f];
    double u1 = params.k == 1 ? splits[0] + total : (f + 1 < params.k ? splits[f + 1] : splits[0] + total);
    if (params.k > 1 && params.overlapFrac > 0) {
      const double len = u1 - u0;
      const int prev = (f + params.k - 1) % params.k;
      const int next = (f + 1) % params.k;
      auto arc_len = [&](int i) {
        const double a = splits[i];
        const double b = i + 1 < params.k ? splits[i + 1] : splits[0] + total;
        return b - a;
      };
      u0 -= 0.5 * params.overlapFrac * std::min(len, arc_len(prev));
      u1 += 0.5 * params.overlapFrac * std::min(len, arc_len(next));
    }
    const double arcLen = u1 - u0;
    const bool closed = params.k == 1;
    std::vector<Vec2> arc = per.polyline(u0, u1);
    if (closed) arc.back() = arc.front();

    // occlusion intervals, in arc parameter
    std::vector<std::pair<double, double>> occl;
    const double occTotal = params.occlusionFrac * arcLen;
    if (occTotal > 0) {
      const double lo = 0.3, hi = arcLen - 0.3;
      const int pieces = occTotal > 0.6 ? 2 : 1;
      const double piece = occTotal / pieces;
      for (int p = 0; p < pieces; ++p) {
        for (int tries = 0; tries < 100; ++tries) {
          if (hi - lo < piece) break;
          const double s = lo + unit(rng) * (hi - lo - piece);
          const bool clash = std::any_of(occl.begin(), occl.end(), [&](const auto& iv) {
            return s < iv.second && s + piece > iv.first;
          });
          if (!clash) {
            occl.emplace_back(s, s + piece);
            break;
          }
        }
      }
    }
    auto occluded = [&](double u) {
      return std::any_of(occl.begin(), occl.end(), [&](const auto& iv) { return u >= iv.first && u <= iv.second; });
    };

    std::vector<Point3> world;
    const double density = params.pointsPerMeter * params.pointsPerMeter;
    double uAcc = 0.0;
    for (std::size_t s = 0; s + 1 < arc.size(); ++s) {
      const Vec2 a = arc[s];
      const Vec2 b = arc[s + 1];
      const double len = (b - a).norm();
      if (len <= 0) continue;
      const Vec2 dir = (b - a) / len;
      const long count = std::lround(len * params.wallHeight * density);
      for (long c = 0; c < count; ++c) {
        const double t = unit(rng) * len;
        const double h = unit(rng) * params.wallHeight;
        if (occluded(uAcc + t)) continue;
        const Vec2 q = a + dir * t;
        world.emplace_back(h + jitter(), q.x() + jitter(), q.y() + jitter());
      }
      uAcc += len;
    }
    const std::size_t wallCount = world.size();

    Vec2 lo = arc.front(), hi = lo;
    for (const auto& p : arc) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    lo -= Vec2::Constant(params.floorReach);
    hi += Vec2::Constant(params.floorReach);
    const Vec2 span = hi - lo;
    const long floorCount = std::lround(span.x() * span.y() * params.floorDensity);
    for (long c = 0; c < floorCount; ++c) {
      const Vec2 q = lo + Vec2(unit(rng) * span.x(), unit(rng) * span.y());
      if (!point_in_polygon(q, layout.vertices)) continue;
      double d = std::numeric_limits<double>::infinity();
      for (std::size_t s = 0; s + 1 < arc.size(); ++s) d = std::min(d, point_segment_distance(q, arc[s], arc[s + 1]));
      if (d > params.floorReach) continue;
      world.emplace_back(jitter(), q.x(), q.y());
    }
    const long clutter = std::lround(params.clutterRate * static_cast<double>(wallCount));
    for (long c = 0; c < clutter; ++c) {
      world.emplace_back(unit(rng) * params.wallHeight, lo.x() + unit(rng) * span.x(), lo.y() + unit(rng) * span.y());
    }

    // true pose: tilt * quarter yaw, plus translation
    std::uniform_int_distribution<int> quarter(1, 4);
    const Eigen::Matrix3d yaw = rot_index_matrix3(quarter(rng));
    const double phi = unit(rng) * 2.0 * std::numbers::pi;
    const double tilt = unit(rng) * params.maxTiltDeg * std::numbers::pi / 180.0;
    const Eigen::Matrix3d tiltR =
        Eigen::AngleAxisd(tilt, Eigen::Vector3d(0.0, std::cos(phi), std::sin(phi))).toRotationMatrix();
    const Eigen::Matrix3d R = tiltR * yaw;
    const Eigen::Vector3d t((unit(rng) - 0.5), (unit(rng) - 0.5) * 10.0, (unit(rng) - 0.5) * 10.0);

    Fragment frag;
    frag.id = "frag" + std::to_string(f);
    frag.points.reserve(world.size());
    for (const auto& p : world) frag.points.push_back(R.transpose() * (p - t));
    Eigen::Matrix4d T = Eigen::Matrix4d::Identity();
    T.topLeftCorner<3, 3>() = R;
    T.topRightCorner<3, 1>() = t;

    scene.fragments.push_back(std::move(frag));
    scene.truePoses.push_back(T);
    if (closed) arc = layout.vertices;
    scene.arcs.push_back(arc);
    scene.arcClosed.push_back(closed);
  }
  return scene;
}

}  // namespace planstitch
