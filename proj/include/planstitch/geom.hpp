#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <compare>
#include <cstddef>
#include <span>
#include <vector>

namespace planstitch {

// 3D points use (x, y, z) with x pointing up. The floorplan plane is (y, z)
// and every 2D quantity in this library is stored as Vec2 = (y, z).
using Point3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

struct GridCoord {
  int row = 0;  // along y
  int col = 0;  // along z
  auto operator<=>(const GridCoord&) const = default;
};

enum class Axis { Y, Z };

struct ManhattanFrame {
  Eigen::Vector3d axisX = Eigen::Vector3d::UnitX();
  Eigen::Vector3d axisY = Eigen::Vector3d::UnitY();
  Eigen::Vector3d axisZ = Eigen::Vector3d::UnitZ();

  // Columns are axisX, axisY, axisZ.
  Eigen::Matrix3d matrix() const;
  bool is_valid(double tol = 1e-6) const;
};

// Quarter turns about the up axis. Index 1..4 maps the local Y axis onto
// +Y, -Y, +Z, -Z respectively (0, 180, 90, 270 degrees).
int rot_index_degrees(int rotIndex);
Vec2 rotate_quarter(const Vec2& v, int rotIndex);
Eigen::Matrix3d rot_index_matrix3(int rotIndex);
// Inverse of rot_index_degrees for multiples of 90; throws otherwise.
int rot_index_from_degrees(int degrees);

struct FragmentPose {
  Eigen::Matrix3d upAlign = Eigen::Matrix3d::Identity();
  int rotIndex = 1;
  Vec2 translation = Vec2::Zero();
  double floorOffset = 0.0;  // translation along up

  // world = matrix() * local (homogeneous).
  Eigen::Matrix4d matrix() const;
};

// Open (or, for a full-loop fragment, closed) axis-aligned polyline of wall
// keypoints. Source is keypoints.front(), target is keypoints.back().
struct LayoutPath {
  std::vector<Vec2> keypoints;
  double gridScale = 0.0;
  bool closed = false;  // source and target coincide

  std::size_t sourceIndex() const { return 0; }
  std::size_t targetIndex() const { return keypoints.empty() ? 0 : keypoints.size() - 1; }
  const Vec2& source() const { return keypoints.front(); }
  const Vec2& target() const { return keypoints.back(); }
  std::size_t segment_count() const { return keypoints.size() < 2 ? 0 : keypoints.size() - 1; }
};

struct RectilinearPolygon {
  std::vector<Vec2> vertices;  // implicit closing edge back to vertices[0]
};

// Monotone-chain hull, counter-clockwise, collinear points dropped.
// Throws DegenerateInputError when fewer than 3 distinct points are given.
// All-collinear input yields the two extreme points.
std::vector<Vec2> convex_hull(std::span<const Vec2> points);

// Edge count of the hull after dropping vertices closer than `tol` to the
// chord through their neighbours. Degenerate hulls count 2 (segment) or 0.
int convex_hull_edge_count(std::span<const Vec2> points, double tol = 0.0);

double manhattan_distance(const Vec2& a, const Vec2& b);

double signed_area(std::span<const Vec2> loop);

struct IntersectOptions {
  // Contacts and overlaps shorter than this are ignored. Zero means any
  // contact between non-adjacent segments counts.
  double tolerance = 0.0;
  // Treat the polyline as a loop (last vertex joins the first).
  bool closed = false;
};

// True iff two non-adjacent segments touch, or two adjacent segments fold
// back over each other. Segments must be axis-aligned.
bool path_self_intersects(std::span<const Vec2> path, const IntersectOptions& opts = {});
bool path_self_intersects(std::span<const GridCoord> path);

// Number of vertices whose incident segments are perpendicular, after
// dropping segments of length <= tol.
int corner_count(std::span<const Vec2> path, bool closed, double tol = 1e-6);
int corner_count(std::span<const GridCoord> path, bool closed);
int corner_count(const RectilinearPolygon& poly, double tol = 1e-6);

// Removes duplicate vertices and vertices between two segments running in the
// same axis direction.
std::vector<Vec2> merge_collinear(std::span<const Vec2> path, bool closed, double tol = 1e-6);
std::vector<GridCoord> merge_collinear(std::span<const GridCoord> path);

bool is_axis_aligned(std::span<const Vec2> path, bool closed, double tol = 1e-6);

// Axis-aligned, simple, even vertex count >= 4.
bool is_valid_rectilinear(const RectilinearPolygon& poly, double tol = 1e-6);

}  // namespace planstitch
