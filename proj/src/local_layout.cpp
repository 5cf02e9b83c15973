#include "planstitch/local_layout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include "planstitch/error.hpp"

namespace planstitch {

GridCoord OccupancyGrid::cell_of(const Vec2& p) const {
  return {static_cast<int>(std::floor((p.x() - origin.x()) / cellSize)),
          static_cast<int>(std::floor((p.y() - origin.y()) / cellSize))};
}

Vec2 OccupancyGrid::center_of(const GridCoord& c) const {
  return origin + Vec2(c.row + 0.5, c.col + 0.5) * cellSize;
}

int OccupancyGrid::evidence_total() const {
  return static_cast<int>(std::count_if(evidence.begin(), evidence.end(), [](std::uint8_t e) { return e != 0; }));
}

int WEGraph::find(const GridCoord& c) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), c);
  if (it == nodes.end() || *it != c) return -1;
  return static_cast<int>(it - nodes.begin());
}

std::size_t WEGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& a : adjacency) n += a.size();
  return n / 2;
}

OccupancyGrid project_to_grid(std::span<const Point3> points, double cellSize, int threshold) {
  if (points.empty()) throw DegenerateInputError("cannot project an empty fragment");
  if (!(cellSize > 0)) throw PreconditionError("cell size must be positive");
  OccupancyGrid g;
  g.cellSize = cellSize;
  g.threshold = threshold;
  Vec2 lo(points[0].y(), points[0].z());
  Vec2 hi = lo;
  for (const auto& p : points) {
    lo = lo.cwiseMin(Vec2(p.y(), p.z()));
    hi = hi.cwiseMax(Vec2(p.y(), p.z()));
  }
  g.origin = lo;
  g.rows = static_cast<int>(std::floor((hi.x() - lo.x()) / cellSize)) + 1;
  g.cols = static_cast<int>(std::floor((hi.y() - lo.y()) / cellSize)) + 1;
  g.counts.assign(static_cast<std::size_t>(g.rows) * g.cols, 0);
  for (const auto& p : points) {
    GridCoord c = g.cell_of(Vec2(p.y(), p.z()));
    c.row = std::clamp(c.row, 0, g.rows - 1);
    c.col = std::clamp(c.col, 0, g.cols - 1);
    ++g.counts[g.index(c)];
  }
  g.evidence.resize(g.counts.size());
  for (std::size_t i = 0; i < g.counts.size(); ++i) g.evidence[i] = g.counts[i] >= threshold ? 1 : 0;
  return g;
}

OccupancyGrid project_to_grid(const Fragment& f, double cellSize, int threshold) {
  return project_to_grid(std::span<const Point3>(f.points), cellSize, threshold);
}

namespace {

// Line (off-axis) coordinate and span of a candidate.
int line_of(const WallCandidate& w) { return w.axis == Axis::Z ? w.start.row : w.start.col; }
int lo_of(const WallCandidate& w) { return w.axis == Axis::Z ? w.start.col : w.start.row; }
int hi_of(const WallCandidate& w) { return w.axis == Axis::Z ? w.end.col : w.end.row; }
GridCoord at(Axis axis, int line, int along) {
  return axis == Axis::Z ? GridCoord{line, along} : GridCoord{along, line};
}

int dist_to_span(int v, int lo, int hi) {
  if (v < lo) return lo - v;
  if (v > hi) return v - hi;
  return 0;
}

// Scans one line for gap-tolerant runs.
void scan_line(const OccupancyGrid& grid, Axis axis, int line, int extent, int minWallCells,
               std::vector<WallCandidate>& out) {
  auto ev = [&](int k) { return grid.has_evidence(at(axis, line, k)); };
  int k = 0;
  while (k < extent) {
    if (!ev(k)) {
      ++k;
      continue;
    }
    const int start = k;
    int end = k;
    int h = 1;
    int j = k + 1;
    while (true) {
      if (j < extent && ev(j)) {
        end = j;
        ++h;
        ++j;
      } else if (j + 1 < extent && !ev(j) && ev(j + 1)) {
        end = j + 1;
        ++h;
        j += 2;
      } else {
        break;
      }
    }
    const int len = end - start + 1;
    if (len >= minWallCells) {
      out.push_back({axis, at(axis, line, start), at(axis, line, end), h, len});
    }
    k = end + 1;
  }
}

}  // namespace

std::vector<WallCandidate> extract_wall_candidates(const OccupancyGrid& grid, int minWallCells) {
  std::vector<WallCandidate> out;
  for (int r = 0; r < grid.rows; ++r) scan_line(grid, Axis::Z, r, grid.cols, minWallCells, out);
  for (int c = 0; c < grid.cols; ++c) scan_line(grid, Axis::Y, c, grid.rows, minWallCells, out);
  return out;
}

KeypointSet deduce_keypoints(const std::vector<WallCandidate>& cands, OccupancyGrid& grid, int maxGapCells) {
  std::map<GridCoord, bool> nodes;  // cell -> deduced
  for (const auto& w : cands) {
    nodes[w.start] = false;
    nodes[w.end] = false;
  }
  auto add_deduced = [&](const GridCoord& c) {
    if (!grid.contains(c)) return;
    nodes.emplace(c, true);
  };
  int remarked = 0;
  const std::size_t n = cands.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& a = cands[i];
      const auto& b = cands[j];
      if (a.axis != b.axis) {
        const auto& z = a.axis == Axis::Z ? a : b;
        const auto& y = a.axis == Axis::Z ? b : a;
        const GridCoord cross{line_of(z), line_of(y)};
        if (dist_to_span(cross.col, lo_of(z), hi_of(z)) <= maxGapCells &&
            dist_to_span(cross.row, lo_of(y), hi_of(y)) <= maxGapCells) {
          add_deduced(cross);
        }
        continue;
      }
      const int offset = std::abs(line_of(a) - line_of(b));
      if (offset == 0 || offset > maxGapCells) continue;
      const bool aFirst = hi_of(a) < lo_of(b);
      const bool bFirst = hi_of(b) < lo_of(a);
      if (!aFirst && !bFirst) continue;
      const int gap = aFirst ? lo_of(b) - hi_of(a) : lo_of(a) - hi_of(b);
      if (gap > maxGapCells) continue;
      const bool aLonger = a.length >= b.length;
      const auto& longer = aLonger ? a : b;
      const auto& shorter = aLonger ? b : a;
      const bool shorterAfter = hi_of(longer) < lo_of(shorter);
      const int along = shorterAfter ? lo_of(shorter) : hi_of(shorter);
      const GridCoord proj = at(a.axis, line_of(longer), along);
      add_deduced(proj);
      const int l0 = std::min(line_of(longer), line_of(shorter));
      const int l1 = std::max(line_of(longer), line_of(shorter));
      for (int l = l0; l <= l1; ++l) {
        const GridCoord c = at(a.axis, l, along);
        if (!grid.contains(c)) continue;
        auto& e = grid.evidence[grid.index(c)];
        if (!e) {
          e = 1;
          ++remarked;
        }
      }
    }
  }
  KeypointSet ks;
  for (const auto& [c, d] : nodes) {
    ks.nodes.push_back(c);
    ks.deduced.push_back(d);
  }
  ks.remarked = remarked;
  return ks;
}

double we_edge_weight(int length, int evidence, double lambda) {
  if (evidence <= 0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(length - evidence) / evidence + lambda;
}

WEGraph build_we_graph(const KeypointSet& keypoints, const OccupancyGrid& grid, double lambda) {
  WEGraph g;
  g.nodes = keypoints.nodes;
  g.deduced = keypoints.deduced;
  g.adjacency.assign(g.nodes.size(), {});

  // prefix sums of evidence along rows and columns
  std::vector<int> rowPre(static_cast<std::size_t>(grid.rows) * (grid.cols + 1), 0);
  std::vector<int> colPre(static_cast<std::size_t>(grid.cols) * (grid.rows + 1), 0);
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      const int e = grid.evidence[grid.index({r, c})] ? 1 : 0;
      rowPre[static_cast<std::size_t>(r) * (grid.cols + 1) + c + 1] =
          rowPre[static_cast<std::size_t>(r) * (grid.cols + 1) + c] + e;
      colPre[static_cast<std::size_t>(c) * (grid.rows + 1) + r + 1] =
          colPre[static_cast<std::size_t>(c) * (grid.rows + 1) + r] + e;
    }
  }
  auto rowSum = [&](int r, int c0, int c1) {
    const auto base = static_cast<std::size_t>(r) * (grid.cols + 1);
    return rowPre[base + c1 + 1] - rowPre[base + c0];
  };
  auto colSum = [&](int c, int r0, int r1) {
    const auto base = static_cast<std::size_t>(c) * (grid.rows + 1);
    return colPre[base + r1 + 1] - colPre[base + r0];
  };

  const int n = static_cast<int>(g.nodes.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const auto& a = g.nodes[i];
      const auto& b = g.nodes[j];
      int len = 0, h = 0;
      if (a.row == b.row && grid.contains(a) && grid.contains(b)) {
        len = std::abs(a.col - b.col) + 1;
        h = rowSum(a.row, std::min(a.col, b.col), std::max(a.col, b.col));
      } else if (a.col == b.col && grid.contains(a) && grid.contains(b)) {
        len = std::abs(a.row - b.row) + 1;
        h = colSum(a.col, std::min(a.row, b.row), std::max(a.row, b.row));
      } else {
        continue;
      }
      if (h == 0) continue;
      const double w = we_edge_weight(len, h, lambda);
      g.adjacency[i].push_back({j, w, len, h});
      g.adjacency[j].push_back({i, w, len, h});
    }
  }
  return g;
}

namespace {

struct Label {
  double cost = 0.0;
  int edges = 0;
  std::vector<int> seq;
};

bool label_less(const Label& a, const Label& b) {
  const double tol = 1e-12 * std::max({1.0, std::abs(a.cost), std::abs(b.cost)});
  if (std::abs(a.cost - b.cost) > tol) return a.cost < b.cost;
  if (a.edges != b.edges) return a.edges < b.edges;
  return a.seq < b.seq;
}

// Direction of the edge u -> v: 1/2 = +/- row, 3/4 = +/- col, 0 = none.
int edge_dir(const WEGraph& g, int u, int v) {
  const auto& a = g.nodes[u];
  const auto& b = g.nodes[v];
  if (a.col == b.col) return b.row > a.row ? 1 : 2;
  return b.col > a.col ? 3 : 4;
}

int reverse_dir(int d) { return d == 0 ? 0 : (d % 2 == 1 ? d + 1 : d - 1); }

// Dijkstra with lexicographic labels over (node, incoming direction) states.
// A path never turns straight back along the line it arrived on and never
// revisits a node. The undirected edge {skipA, skipB} is ignored when
// skipA >= 0; `startDir` is the direction the source is entered with and
// the target must not be reached moving opposite to `closeDir`.
std::optional<Label> dijkstra(const WEGraph& g, int source, int target, int skipA = -1, int skipB = -1,
                              int startDir = 0, int closeDir = 0) {
  const int n = static_cast<int>(g.nodes.size());
  const auto id = [](int node, int dir) { return node * 5 + dir; };
  std::vector<std::optional<Label>> best(static_cast<std::size_t>(n) * 5);
  std::vector<bool> done(best.size(), false);
  best[id(source, startDir)] = Label{0.0, 0, {source}};
  const int forbidden = reverse_dir(closeDir);
  while (true) {
    int u = -1;
    for (int v = 0; v < static_cast<int>(best.size()); ++v) {
      if (done[v] || !best[v]) continue;
      if (u < 0 || label_less(*best[v], *best[u])) u = v;
    }
    if (u < 0) return std::nullopt;
    const int node = u / 5;
    const int dirIn = u % 5;
    if (node == target && (closeDir == 0 || dirIn != forbidden)) return best[u];
    done[u] = true;
    if (node == target) continue;
    for (const auto& e : g.adjacency[node]) {
      if (skipA >= 0 && ((node == skipA && e.to == skipB) || (node == skipB && e.to == skipA))) continue;
      const int d = edge_dir(g, node, e.to);
      if (dirIn != 0 && d == reverse_dir(dirIn)) continue;
      const auto& seq = best[u]->seq;
      if (std::find(seq.begin(), seq.end(), e.to) != seq.end()) continue;
      const int v = id(e.to, d);
      if (done[v]) continue;
      Label cand{best[u]->cost + e.weight, best[u]->edges + 1, seq};
      cand.seq.push_back(e.to);
      if (!best[v] || label_less(cand, *best[v])) best[v] = std::move(cand);
    }
  }
}

}  // namespace

std::optional<ShortestPath> shortest_path(const WEGraph& g, int source, int target) {
  const int n = static_cast<int>(g.nodes.size());
  if (source < 0 || target < 0 || source >= n || target >= n) throw PreconditionError("node index out of range");
  auto l = dijkstra(g, source, target);
  if (!l) return std::nullopt;
  return ShortestPath{l->cost, l->seq};
}

std::optional<ShortestPath> shortest_cycle(const WEGraph& g, int node) {
  std::optional<Label> best;
  for (const auto& e : g.adjacency[node]) {
    const int closing = edge_dir(g, e.to, node);
    auto l = dijkstra(g, node, e.to, node, e.to, closing, closing);
    if (!l) continue;
    Label cyc{l->cost + e.weight, l->edges + 1, l->seq};
    cyc.seq.push_back(node);
    if (!best || label_less(cyc, *best)) best = std::move(cyc);
  }
  if (!best) return std::nullopt;
  return ShortestPath{best->cost, best->seq};
}

std::vector<ForestEdge> minimum_spanning_forest(std::span<const Vec2> points, double maxEdge) {
  const int n = static_cast<int>(points.size());
  std::vector<ForestEdge> out;
  if (n < 2) return out;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> key(n, inf);
  std::vector<int> parent(n, -1);
  std::vector<bool> inTree(n, false);
  key[0] = 0.0;
  for (int step = 0; step < n; ++step) {
    int u = -1;
    for (int v = 0; v < n; ++v) {
      if (!inTree[v] && (u < 0 || key[v] < key[u])) u = v;
    }
    inTree[u] = true;
    if (parent[u] >= 0 && (maxEdge <= 0 || key[u] <= maxEdge)) {
      out.push_back({std::min(parent[u], u), std::max(parent[u], u), key[u]});
    }
    for (int v = 0; v < n; ++v) {
      if (inTree[v]) continue;
      const double d = (points[u] - points[v]).norm();
      if (d < key[v]) {
        key[v] = d;
        parent[v] = u;
      }
    }
  }
  return out;
}

std::vector<int> longest_forest_path(int nodeCount, const std::vector<ForestEdge>& edges) {
  std::vector<std::vector<std::pair<int, double>>> adj(nodeCount);
  for (const auto& e : edges) {
    adj[e.a].push_back({e.b, e.length});
    adj[e.b].push_back({e.a, e.length});
  }
  std::vector<double> dist(nodeCount);
  std::vector<int> par(nodeCount);
  // Farthest node from `root` within its tree; fills dist/par.
  auto farthest = [&](int root, std::vector<int>* visitedOut) {
    std::vector<int> stack{root};
    dist[root] = 0.0;
    par[root] = -1;
    int far = root;
    std::vector<int> seen{root};
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      if (dist[u] > dist[far] || (dist[u] == dist[far] && u < far)) far = u;
      for (const auto& [v, w] : adj[u]) {
        if (v == par[u]) continue;
        par[v] = u;
        dist[v] = dist[u] + w;
        stack.push_back(v);
        seen.push_back(v);
      }
    }
    if (visitedOut) *visitedOut = std::move(seen);
    return far;
  };

  std::vector<bool> assigned(nodeCount, false);
  std::vector<int> bestPath;
  double bestLen = -1.0;
  for (int r = 0; r < nodeCount; ++r) {
    if (assigned[r]) continue;
    std::vector<int> comp;
    const int a = farthest(r, &comp);
    for (int v : comp) assigned[v] = true;
    const int b = farthest(a, nullptr);
    if (dist[b] > bestLen) {
      bestLen = dist[b];
      bestPath.clear();
      for (int v = b; v >= 0; v = par[v]) bestPath.push_back(v);
      std::reverse(bestPath.begin(), bestPath.end());
    }
  }
  return bestPath;
}

double swept_angle(std::span<const Vec2> seq, const Vec2& ref) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
    const Vec2 a = seq[i] - ref;
    const Vec2 b = seq[i + 1] - ref;
    const double cr = a.x() * b.y() - a.y() * b.x();
    total += std::atan2(cr, a.dot(b));
  }
  return total;
}

namespace {

std::pair<int, int> orient_endpoints(const std::vector<int>& path, std::span<const Vec2> nodes, const Vec2& ref) {
  std::vector<Vec2> seq;
  seq.reserve(path.size());
  for (int i : path) seq.push_back(nodes[i]);
  if (swept_angle(seq, ref) <= 0) return {path.front(), path.back()};
  return {path.back(), path.front()};
}

Vec2 centroid(std::span<const Vec2> pts) {
  Vec2 c = Vec2::Zero();
  for (const auto& p : pts) c += p;
  return c / static_cast<double>(pts.size());
}

}  // namespace

std::pair<int, int> select_source_target(std::span<const Vec2> nodes, std::optional<Vec2> ref, double maxEdge) {
  if (nodes.size() < 2) throw DegenerateInputError("source/target selection needs at least two nodes");
  const auto path = longest_forest_path(static_cast<int>(nodes.size()), minimum_spanning_forest(nodes, maxEdge));
  if (path.size() < 2) throw DegenerateInputError("all nodes coincide");
  return orient_endpoints(path, nodes, ref.value_or(centroid(nodes)));
}

std::pair<int, int> frustum_source_target(const Vec2& camera, std::span<const Vec2> nodes) {
  if (nodes.size() < 2) throw DegenerateInputError("source/target selection needs at least two nodes");
  double best = -1.0;
  int bi = 0, bj = 1;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Vec2 a = nodes[i] - camera;
    if (a.norm() < 1e-12) continue;
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      const Vec2 b = nodes[j] - camera;
      if (b.norm() < 1e-12) continue;
      const double ang = std::atan2(std::abs(a.x() * b.y() - a.y() * b.x()), a.dot(b));
      if (ang > best + 1e-12) {
        best = ang;
        bi = static_cast<int>(i);
        bj = static_cast<int>(j);
      }
    }
  }
  const Vec2 a = nodes[bi] - camera;
  const Vec2 b = nodes[bj] - camera;
  if (a.x() * b.y() - a.y() * b.x() <= 0) return {bi, bj};
  return {bj, bi};
}

std::pair<int, int> frustum_source_target(const Fragment& f, std::span<const Vec2> nodes) {
  if (!f.cameraPose) throw PreconditionError("frustum source/target needs a camera pose");
  return frustum_source_target(Vec2((*f.cameraPose)(1, 3), (*f.cameraPose)(2, 3)), nodes);
}

std::vector<WallCandidate> merge_parallel_walls(const std::vector<WallCandidate>& cands, OccupancyGrid& grid,
                                                int maxOffset) {
  const auto line = [](const WallCandidate& c) { return c.axis == Axis::Z ? c.start.row : c.start.col; };
  const auto lo = [](const WallCandidate& c) { return c.axis == Axis::Z ? c.start.col : c.start.row; };
  const auto hi = [](const WallCandidate& c) { return c.axis == Axis::Z ? c.end.col : c.end.row; };
  const auto cell = [](Axis axis, int ln, int pos) { return axis == Axis::Z ? GridCoord{ln, pos} : GridCoord{pos, ln}; };

  std::vector<int> order(cands.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (cands[a].evidenceCount != cands[b].evidenceCount) return cands[a].evidenceCount > cands[b].evidenceCount;
    return cands[a].length > cands[b].length;
  });
  // kept[k] absorbs weaker runs; `slot` remembers the original position of
  // the strongest member so output order follows the input.
  std::vector<WallCandidate> kept;
  std::vector<int> slot;
  std::vector<bool> changed;
  for (int i : order) {
    const auto& c = cands[i];
    int into = -1;
    for (std::size_t k = 0; k < kept.size(); ++k) {
      const auto& s = kept[k];
      if (s.axis != c.axis || std::abs(line(s) - line(c)) > maxOffset) continue;
      if (std::max(lo(s), lo(c)) <= std::min(hi(s), hi(c)) + 1) {
        into = static_cast<int>(k);
        break;
      }
    }
    if (into < 0) {
      kept.push_back(c);
      slot.push_back(i);
      changed.push_back(false);
      continue;
    }
    auto& s = kept[into];
    const int ln = line(s);
    const int a = std::min(lo(s), lo(c));
    const int b = std::max(hi(s), hi(c));
    s.start = cell(s.axis, ln, a);
    s.end = cell(s.axis, ln, b);
    changed[into] = true;
  }
  for (std::size_t k = 0; k < kept.size(); ++k) {
    if (!changed[k]) continue;
    auto& s = kept[k];
    const int ln = line(s);
    s.evidenceCount = 0;
    for (int p = lo(s); p <= hi(s); ++p) {
      const GridCoord g = cell(s.axis, ln, p);
      if (grid.contains(g)) {
        grid.evidence[grid.index(g)] = 1;
        ++s.evidenceCount;
      }
    }
    s.length = hi(s) - lo(s) + 1;
  }
  std::vector<int> idx(kept.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int x, int y) { return slot[x] < slot[y]; });
  std::vector<WallCandidate> out;
  for (int k : idx) out.push_back(kept[k]);
  return out;
}

double interior_side_vote(std::span<const Vec2> path, std::span<const Vec2> floorSamples, double reach) {
  double vote = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const Vec2 a = path[i];
    const Vec2 d = path[i + 1] - a;
    const double len = d.norm();
    if (len <= 0.0) continue;
    const Vec2 u = d / len;
    const Vec2 right(u.y(), -u.x());
    for (const auto& s : floorSamples) {
      const Vec2 r = s - a;
      const double t = r.dot(u);
      if (t < 0.0 || t > len) continue;
      const double off = r.dot(right);
      if (std::abs(off) > reach) continue;
      vote += off > 0 ? 1.0 : (off < 0 ? -1.0 : 0.0);
    }
  }
  return vote;
}

LocalLayoutResult estimate_local_layout(const Fragment& f, const LocalLayoutConfig& config,
                                        std::optional<Vec2> interiorHint, std::span<const Vec2> floorSamples) {
  LocalLayoutResult res;
  res.grid = project_to_grid(f, config.cellSize, config.evidenceThreshold);
  res.candidates = extract_wall_candidates(res.grid, config.minWallCells);
  if (config.mergeOffsetCells >= 0) res.candidates = merge_parallel_walls(res.candidates, res.grid, config.mergeOffsetCells);
  if (res.candidates.empty()) throw EstimationError("no wall candidates found in fragment " + f.id);
  const KeypointSet ks = deduce_keypoints(res.candidates, res.grid, config.maxGapCells);
  res.graph = build_we_graph(ks, res.grid, config.lambda);
  const auto& g = res.graph;
  const OccupancyGrid& grid = res.grid;

  std::vector<Vec2> nodeXY;
  for (const auto& c : g.nodes) nodeXY.push_back(grid.center_of(c));

  std::optional<Vec2> camera;
  if (f.cameraPose) camera = Vec2((*f.cameraPose)(1, 3), (*f.cameraPose)(2, 3));

  int src = 0, tgt = 0;
  bool closed = false;
  if (camera && config.useFrustum) {
    std::tie(src, tgt) = frustum_source_target(*camera, nodeXY);
  } else {
    // ST nodes are the cells along the wall candidates: a one-cell skeleton
    // of the evidence, so that a wall smeared over two lines cannot make the
    // longest forest path zigzag along it.
    std::vector<GridCoord> skeleton;
    for (const auto& w : res.candidates) {
      for (GridCoord c = w.start;; w.axis == Axis::Z ? ++c.col : ++c.row) {
        skeleton.push_back(c);
        if (c == w.end) break;
      }
    }
    std::sort(skeleton.begin(), skeleton.end());
    skeleton.erase(std::unique(skeleton.begin(), skeleton.end()), skeleton.end());
    std::vector<Vec2> cells;
    for (const auto& c : skeleton) cells.emplace_back(c.row, c.col);
    if (cells.size() < 2) throw EstimationError("too little wall evidence in fragment " + f.id);
    std::optional<Vec2> ref = camera ? camera : interiorHint;
    Vec2 refCells;
    if (ref) {
      refCells = (*ref - grid.origin) / grid.cellSize - Vec2(0.5, 0.5);
    } else {
      refCells = centroid(cells);
    }
    const auto path = longest_forest_path(static_cast<int>(cells.size()),
                                          minimum_spanning_forest(cells, config.msfMaxEdgeCells));
    if (path.size() < 2) throw EstimationError("degenerate wall evidence in fragment " + f.id);
    const auto [sCell, tCell] = orient_endpoints(path, cells, refCells);
    closed = (cells[sCell] - cells[tCell]).norm() <= config.closeLoopCells;
    // Nearest graph node to each endpoint; the target is restricted to the
    // source's connected component so that isolated spurious runs near an
    // endpoint cannot split the pair.
    auto nearest = [&](const Vec2& p, const std::vector<bool>* allowed) {
      int best = -1;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        if (g.adjacency[i].empty() || (allowed && !(*allowed)[i])) continue;
        const double d = (Vec2(g.nodes[i].row, g.nodes[i].col) - p).squaredNorm();
        if (d < bd) {
          bd = d;
          best = static_cast<int>(i);
        }
      }
      return best;
    };
    src = nearest(cells[sCell], nullptr);
    if (src < 0) throw EstimationError("wall graph has no edges in fragment " + f.id);
    std::vector<bool> reach(g.nodes.size(), false);
    std::vector<int> stack{src};
    reach[src] = true;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (const auto& e : g.adjacency[u]) {
        if (!reach[e.to]) {
          reach[e.to] = true;
          stack.push_back(e.to);
        }
      }
    }
    tgt = nearest(cells[tCell], &reach);
  }
  if (src == tgt) closed = true;

  std::optional<ShortestPath> sp;
  if (closed) {
    sp = shortest_cycle(g, src);
    if (!sp) throw EstimationError("no closed wall loop in fragment " + f.id);
  } else {
    sp = shortest_path(g, src, tgt);
    if (!sp) throw EstimationError("source and target are disconnected in fragment " + f.id);
  }
  res.graphPath = sp->nodes;
  res.cost = sp->cost;

  std::vector<Vec2> kp;
  for (int i : sp->nodes) kp.push_back(nodeXY[i]);
  if (closed) {
    kp.pop_back();
    if (signed_area(kp) > 0) std::reverse(kp.begin(), kp.end());
    kp = merge_collinear(kp, true);
    kp.push_back(kp.front());
  } else {
    kp = merge_collinear(kp, false);
    if (!(camera && config.useFrustum) && !floorSamples.empty() && interior_side_vote(kp, floorSamples) < 0) {
      std::reverse(kp.begin(), kp.end());
      std::reverse(res.graphPath.begin(), res.graphPath.end());
    }
  }
  res.path.keypoints = std::move(kp);
  res.path.gridScale = grid.cellSize;
  res.path.closed = closed;
  return res;
}

std::string format_pgm(const OccupancyGrid& grid) {
  std::ostringstream out;
  out << "P2\n" << grid.cols << ' ' << grid.rows << "\n255\n";
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      out << (grid.evidence[grid.index({r, c})] ? 255 : 0) << (c + 1 == grid.cols ? '\n' : ' ');
    }
  }
  return out.str();
}

}  // namespace planstitch
