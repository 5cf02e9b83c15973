#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

#include "planstitch/fragment.hpp"
#include "planstitch/geom.hpp"

namespace planstitch {

// Clockwise simple rectilinear polygon with exactly cornerCount corners,
// edges >= 1 m and coordinates on a 0.5 m lattice. Throws GenerationError
// when no such polygon is found within the retry budget.
RectilinearPolygon gen_scene(std::uint64_t seed, int cornerCount, double extent = 8.0);

struct FragmentParams {
  int k = 1;
  double overlapFrac = 0.0;
  double noiseSigma = 0.0;
  double occlusionFrac = 0.0;
  double pointsPerMeter = 20.0;  // wall density is pointsPerMeter^2 per m^2
  double wallHeight = 2.6;
  double floorDensity = 100.0;   // points per m^2
  double floorReach = 1.5;       // floor kept within this distance of the arc
  double clutterRate = 0.0;      // uniform outliers as a fraction of wall points
  double maxTiltDeg = 5.0;
  std::uint64_t seed = 1;
};

struct GroundTruthScene {
  RectilinearPolygon layout;
  std::vector<Fragment> fragments;           // points in each fragment's own frame
  std::vector<Eigen::Matrix4d> truePoses;    // fragment frame -> world
  std::vector<std::vector<Vec2>> arcs;       // world (y, z) wall keypoints seen by each fragment
  std::vector<bool> arcClosed;               // fragment sees the whole loop
  double diag = 0.0;                         // 3D bounding-box diagonal
};

GroundTruthScene fragment_scene(const RectilinearPolygon& layout, const FragmentParams& params);

double scene_diagonal(const RectilinearPolygon& layout, double wallHeight = 2.6);

bool point_in_polygon(const Vec2& p, std::span<const Vec2> poly);
double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b);
double segment_distance(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d);

}  // namespace planstitch
