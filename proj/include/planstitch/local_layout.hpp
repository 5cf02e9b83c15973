#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "planstitch/fragment.hpp"
#include "planstitch/geom.hpp"

namespace planstitch {

struct OccupancyGrid {
  Vec2 origin = Vec2::Zero();
  double cellSize = 0.08;
  int threshold = 20;
  int rows = 0;  // along y
  int cols = 0;  // along z
  std::vector<int> counts;
  std::vector<std::uint8_t> evidence;

  bool contains(const GridCoord& c) const { return c.row >= 0 && c.row < rows && c.col >= 0 && c.col < cols; }
  int count(const GridCoord& c) const { return counts[index(c)]; }
  bool has_evidence(const GridCoord& c) const { return contains(c) && evidence[index(c)] != 0; }
  std::size_t index(const GridCoord& c) const {
    return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c.col);
  }
  GridCoord cell_of(const Vec2& p) const;
  Vec2 center_of(const GridCoord& c) const;
  int evidence_total() const;
};

// A run along a row varies z and is a Z-axis wall; a run along a column is a
// Y-axis wall. start <= end along the run.
struct WallCandidate {
  Axis axis = Axis::Z;
  GridCoord start;
  GridCoord end;
  int evidenceCount = 0;  // H
  int length = 0;         // L, inclusive cell count
};

struct KeypointSet {
  std::vector<GridCoord> nodes;  // sorted by (row, col), unique
  std::vector<bool> deduced;
  int remarked = 0;  // cells newly turned into evidence
};

struct WEEdge {
  int to = 0;
  double weight = 0.0;
  int length = 0;
  int evidence = 0;
};

struct WEGraph {
  std::vector<GridCoord> nodes;
  std::vector<bool> deduced;
  std::vector<std::vector<WEEdge>> adjacency;  // sorted by `to`

  int find(const GridCoord& c) const;  // -1 when absent
  std::size_t edge_count() const;
};

struct ShortestPath {
  double cost = 0.0;
  std::vector<int> nodes;
};

struct LocalLayoutConfig {
  double cellSize = 0.08;
  int evidenceThreshold = 20;
  int minWallCells = 3;
  int maxGapCells = 10;
  double lambda = 0.1;
  // ST endpoints this close (in cells) mean the fragment sees a whole loop.
  double closeLoopCells = 4.0;
  // MSF edges longer than this (in cells) are cut; <= 0 disables the cut.
  double msfMaxEdgeCells = 20.0;
  bool useFrustum = true;
  int mergeOffsetCells = 2;  // see merge_parallel_walls; < 0 disables
};

struct LocalLayoutResult {
  LayoutPath path;
  OccupancyGrid grid;
  std::vector<WallCandidate> candidates;
  WEGraph graph;
  std::vector<int> graphPath;  // WE node indices, source first
  double cost = 0.0;
};

OccupancyGrid project_to_grid(std::span<const Point3> points, double cellSize, int threshold);
// Projects all points of `f`; horizontal structure must already be removed.
OccupancyGrid project_to_grid(const Fragment& f, double cellSize, int threshold);

std::vector<WallCandidate> extract_wall_candidates(const OccupancyGrid& grid, int minWallCells);

// A wall straddling a cell boundary, or blurred by noise or a small residual
// rotation, shows up as several parallel runs on neighbouring lines. Runs
// whose lines are within maxOffset cells and whose spans overlap or touch
// are merged onto the line of the stronger run (more evidence, then longer,
// then earlier); the union span is re-marked as evidence on that line.
std::vector<WallCandidate> merge_parallel_walls(const std::vector<WallCandidate>& cands, OccupancyGrid& grid,
                                                int maxOffset = 2);

// Adds candidate endpoints plus intersection and occlusion keypoints, and
// re-marks occluded wall cells in `grid`.
KeypointSet deduce_keypoints(const std::vector<WallCandidate>& cands, OccupancyGrid& grid, int maxGapCells);

double we_edge_weight(int length, int evidence, double lambda);
WEGraph build_we_graph(const KeypointSet& keypoints, const OccupancyGrid& grid, double lambda);

// Paths visit each node once and never reverse along the line they arrived
// on. Ties on cost go to fewer edges, then to the lexicographically smaller
// node sequence.
std::optional<ShortestPath> shortest_path(const WEGraph& g, int source, int target);
// Cheapest cycle through `node` using at least two distinct edges.
std::optional<ShortestPath> shortest_cycle(const WEGraph& g, int node);

struct ForestEdge {
  int a = 0;
  int b = 0;
  double length = 0.0;
};

// Euclidean minimum spanning forest; edges longer than maxEdge are dropped
// when maxEdge > 0.
std::vector<ForestEdge> minimum_spanning_forest(std::span<const Vec2> points, double maxEdge = 0.0);
// Longest weighted path over all trees of the forest, as a node sequence.
std::vector<int> longest_forest_path(int nodeCount, const std::vector<ForestEdge>& edges);

// Total signed angle swept by the sequence around `ref`; negative is clockwise.
double swept_angle(std::span<const Vec2> seq, const Vec2& ref);

// Endpoints of the longest MSF path over `nodes`, ordered so that the first
// starts a clockwise traversal around `ref` (node centroid when absent).
std::pair<int, int> select_source_target(std::span<const Vec2> nodes, std::optional<Vec2> ref = std::nullopt,
                                         double maxEdge = 0.0);

// Pair subtending the widest angle at the camera, clockwise-first.
std::pair<int, int> frustum_source_target(const Vec2& camera, std::span<const Vec2> nodes);
std::pair<int, int> frustum_source_target(const Fragment& f, std::span<const Vec2> nodes);

// Signed support for the path running clockwise: +1 for every floor sample
// within `reach` on the right of a segment (the interior side of a clockwise
// loop), -1 on the left.
double interior_side_vote(std::span<const Vec2> path, std::span<const Vec2> floorSamples, double reach = 1.0);

// Full single-fragment estimate. Without a camera pose, floor samples decide
// which path end is the source (interior on the right); `interiorHint` and
// then the evidence centroid are used when there are none.
LocalLayoutResult estimate_local_layout(const Fragment& f, const LocalLayoutConfig& config = {},
                                        std::optional<Vec2> interiorHint = std::nullopt,
                                        std::span<const Vec2> floorSamples = {});

std::string format_pgm(const OccupancyGrid& grid);

}  // namespace planstitch
