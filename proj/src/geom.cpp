#include "planstitch/geom.hpp"

#include <algorithm>
#include <cmath>

#include "planstitch/error.hpp"

namespace planstitch {

Eigen::Matrix3d ManhattanFrame::matrix() const {
  Eigen::Matrix3d m;
  m.col(0) = axisX;
  m.col(1) = axisY;
  m.col(2) = axisZ;
  return m;
}

bool ManhattanFrame::is_valid(double tol) const {
  const Eigen::Matrix3d m = matrix();
  if (!m.allFinite()) return false;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(m.col(i).norm() - 1.0) > tol) return false;
  }
  if (std::abs(axisX.dot(axisY)) > tol || std::abs(axisX.dot(axisZ)) > tol ||
      std::abs(axisY.dot(axisZ)) > tol) {
    return false;
  }
  return std::abs(m.determinant() - 1.0) <= tol;
}

int rot_index_degrees(int rotIndex) {
  switch (rotIndex) {
    case 1: return 0;
    case 2: return 180;
    case 3: return 90;
    case 4: return 270;
    default: throw PreconditionError("rotIndex must be in 1..4");
  }
}

int rot_index_from_degrees(int degrees) {
  const int d = ((degrees % 360) + 360) % 360;
  switch (d) {
    case 0: return 1;
    case 180: return 2;
    case 90: return 3;
    case 270: return 4;
    default: throw PreconditionError("angle is not a quarter turn");
  }
}

Vec2 rotate_quarter(const Vec2& v, int rotIndex) {
  switch (rotIndex) {
    case 1: return v;
    case 2: return Vec2(-v.x(), -v.y());
    case 3: return Vec2(-v.y(), v.x());
    case 4: return Vec2(v.y(), -v.x());
    default: throw PreconditionError("rotIndex must be in 1..4");
  }
}

Eigen::Matrix3d rot_index_matrix3(int rotIndex) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  m(0, 0) = 1.0;
  const Vec2 ey = rotate_quarter(Vec2(1, 0), rotIndex);
  const Vec2 ez = rotate_quarter(Vec2(0, 1), rotIndex);
  m(1, 1) = ey.x();
  m(2, 1) = ey.y();
  m(1, 2) = ez.x();
  m(2, 2) = ez.y();
  return m;
}

Eigen::Matrix4d FragmentPose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rot_index_matrix3(rotIndex) * upAlign;
  m(0, 3) = floorOffset;
  m(1, 3) = translation.x();
  m(2, 3) = translation.y();
  return m;
}

namespace {

double cross2(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

bool lex_less(const Vec2& a, const Vec2& b) {
  return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
}

}  // namespace

std::vector<Vec2> convex_hull(std::span<const Vec2> points) {
  std::vector<Vec2> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(), lex_less);
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Vec2& a, const Vec2& b) { return a == b; }),
            pts.end());
  if (pts.size() < 3) {
    throw DegenerateInputError("convex hull needs at least 3 distinct points");
  }
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross2(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  if (hull.size() < 3) return {pts.front(), pts.back()};
  return hull;
}

int convex_hull_edge_count(std::span<const Vec2> points, double tol) {
  std::vector<Vec2> hull;
  try {
    hull = convex_hull(points);
  } catch (const DegenerateInputError&) {
    std::vector<Vec2> pts(points.begin(), points.end());
    std::sort(pts.begin(), pts.end(), lex_less);
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts.size() == 2 ? 2 : 0;
  }
  if (hull.size() < 3) return static_cast<int>(hull.size());
  bool changed = tol > 0.0;
  while (changed && hull.size() > 3) {
    changed = false;
    for (std::size_t i = 0; i < hull.size() && hull.size() > 3; ++i) {
      const Vec2& a = hull[(i + hull.size() - 1) % hull.size()];
      const Vec2& b = hull[(i + 1) % hull.size()];
      const double len = (b - a).norm();
      const double dist = len > 0 ? std::abs(cross2(a, b, hull[i])) / len : (hull[i] - a).norm();
      if (dist <= tol) {
        hull.erase(hull.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        break;
      }
    }
  }
  return static_cast<int>(hull.size());
}

double manhattan_distance(const Vec2& a, const Vec2& b) {
  return std::abs(a.x() - b.x()) + std::abs(a.y() - b.y());
}

double signed_area(std::span<const Vec2> loop) {
  double s = 0.0;
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const Vec2& a = loop[i];
    const Vec2& b = loop[(i + 1) % loop.size()];
    s += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * s;
}

namespace {

struct AxisSegment {
  Axis axis;
  double line;  // off-axis coordinate
  double lo, hi;
  int dir;  // +1 / -1 along axis
  double length() const { return hi - lo; }
};

AxisSegment make_segment(const Vec2& a, const Vec2& b) {
  AxisSegment s{};
  const double dy = b.x() - a.x();
  const double dz = b.y() - a.y();
  if (std::abs(dz) <= std::abs(dy)) {
    s.axis = Axis::Y;
    s.line = 0.5 * (a.y() + b.y());
    s.lo = std::min(a.x(), b.x());
    s.hi = std::max(a.x(), b.x());
    s.dir = dy >= 0 ? 1 : -1;
  } else {
    s.axis = Axis::Z;
    s.line = 0.5 * (a.x() + b.x());
    s.lo = std::min(a.y(), b.y());
    s.hi = std::max(a.y(), b.y());
    s.dir = dz >= 0 ? 1 : -1;
  }
  return s;
}

bool within(double v, double lo, double hi, double margin) {
  return v >= lo + margin && v <= hi - margin;
}

bool non_adjacent_conflict(const AxisSegment& a, const AxisSegment& b, double tol) {
  if (a.axis == b.axis) {
    if (std::abs(a.line - b.line) > tol) return false;
    const double overlap = std::min(a.hi, b.hi) - std::max(a.lo, b.lo);
    return tol > 0.0 ? overlap > tol : overlap >= 0.0;
  }
  return within(b.line, a.lo, a.hi, tol) && within(a.line, b.lo, b.hi, tol);
}

bool adjacent_conflict(const AxisSegment& a, const AxisSegment& b, double tol) {
  if (a.axis != b.axis || a.dir == b.dir) return false;
  return std::min(a.length(), b.length()) > tol;
}

}  // namespace

bool path_self_intersects(std::span<const Vec2> path, const IntersectOptions& opts) {
  std::vector<Vec2> pts;
  pts.reserve(path.size());
  for (const auto& p : path) {
    if (pts.empty() || pts.back() != p) pts.push_back(p);
  }
  if (opts.closed && pts.size() > 1 && pts.back() == pts.front()) pts.pop_back();
  std::vector<AxisSegment> segs;
  const std::size_t n = pts.size();
  if (n < 2) return false;
  const std::size_t count = opts.closed && n > 2 ? n : n - 1;
  for (std::size_t i = 0; i < count; ++i) segs.push_back(make_segment(pts[i], pts[(i + 1) % n]));
  const std::size_t m = segs.size();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const bool adjacent = (j == i + 1) || (opts.closed && i == 0 && j == m - 1);
      const bool hit = adjacent ? adjacent_conflict(segs[i], segs[j], opts.tolerance)
                                : non_adjacent_conflict(segs[i], segs[j], opts.tolerance);
      if (hit) return true;
    }
  }
  return false;
}

bool path_self_intersects(std::span<const GridCoord> path) {
  std::vector<Vec2> pts;
  pts.reserve(path.size());
  for (const auto& c : path) pts.emplace_back(c.row, c.col);
  return path_self_intersects(pts);
}

int corner_count(std::span<const Vec2> path, bool closed, double tol) {
  std::vector<Vec2> dirs;
  const std::size_t n = path.size();
  if (n < 2) return 0;
  const std::size_t count = closed ? n : n - 1;
  for (std::size_t i = 0; i < count; ++i) {
    const Vec2 d = path[(i + 1) % n] - path[i];
    const double len = d.norm();
    if (len > tol) dirs.push_back(d / len);
  }
  int corners = 0;
  const std::size_t m = dirs.size();
  if (m < 2) return 0;
  const std::size_t turns = closed ? m : m - 1;
  for (std::size_t i = 0; i < turns; ++i) {
    if (std::abs(dirs[i].dot(dirs[(i + 1) % m])) <= 1e-6) ++corners;
  }
  return corners;
}

int corner_count(std::span<const GridCoord> path, bool closed) {
  std::vector<Vec2> pts;
  for (const auto& c : path) pts.emplace_back(c.row, c.col);
  return corner_count(pts, closed, 0.0);
}

int corner_count(const RectilinearPolygon& poly, double tol) {
  return corner_count(poly.vertices, true, tol);
}

std::vector<Vec2> merge_collinear(std::span<const Vec2> path, bool closed, double tol) {
  std::vector<Vec2> pts;
  for (const auto& p : path) {
    if (pts.empty() || (pts.back() - p).norm() > tol) pts.push_back(p);
  }
  if (closed) {
    while (pts.size() > 1 && (pts.back() - pts.front()).norm() <= tol) pts.pop_back();
  }
  bool changed = true;
  while (changed && pts.size() > 2) {
    changed = false;
    const std::size_t n = pts.size();
    const std::size_t first = closed ? 0 : 1;
    const std::size_t last = closed ? n : n - 1;
    for (std::size_t i = first; i < last; ++i) {
      const Vec2& a = pts[(i + n - 1) % n];
      const Vec2& b = pts[i];
      const Vec2& c = pts[(i + 1) % n];
      const Vec2 ac = c - a;
      const double len = ac.norm();
      if (len <= tol) continue;
      const double dist = std::abs(cross2(a, c, b)) / len;
      if (dist <= tol && (b - a).dot(c - b) > 0.0) {
        pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        break;
      }
    }
  }
  return pts;
}

std::vector<GridCoord> merge_collinear(std::span<const GridCoord> path) {
  std::vector<GridCoord> pts;
  for (const auto& p : path) {
    if (pts.empty() || pts.back() != p) pts.push_back(p);
  }
  std::vector<GridCoord> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i > 0 && i + 1 < pts.size()) {
      const GridCoord& a = out.back();
      const GridCoord& b = pts[i];
      const GridCoord& c = pts[i + 1];
      const bool sameRow = a.row == b.row && b.row == c.row;
      const bool sameCol = a.col == b.col && b.col == c.col;
      const bool forward = (b.row - a.row) * (c.row - b.row) + (b.col - a.col) * (c.col - b.col) > 0;
      if ((sameRow || sameCol) && forward) continue;
    }
    out.push_back(pts[i]);
  }
  return out;
}

bool is_axis_aligned(std::span<const Vec2> path, bool closed, double tol) {
  const std::size_t n = path.size();
  if (n < 2) return true;
  const std::size_t count = closed ? n : n - 1;
  for (std::size_t i = 0; i < count; ++i) {
    const Vec2 d = path[(i + 1) % n] - path[i];
    if (std::abs(d.x()) > tol && std::abs(d.y()) > tol) return false;
  }
  return true;
}

bool is_valid_rectilinear(const RectilinearPolygon& poly, double tol) {
  const auto& v = poly.vertices;
  if (v.size() < 4 || v.size() % 2 != 0) return false;
  if (!is_axis_aligned(v, true, tol)) return false;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if ((v[(i + 1) % v.size()] - v[i]).norm() <= tol) return false;
  }
  if (corner_count(v, true, tol) != static_cast<int>(v.size())) return false;
  return !path_self_intersects(v, IntersectOptions{0.0, true});
}

}  // namespace planstitch
