#include "planstitch/placement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "planstitch/error.hpp"

namespace planstitch {

BoundarySet extract_boundary_sets(std::span<const Point3> points, const LayoutPath& path,
                                  const BoundaryParams& params) {
  BoundarySet out;
  if (path.keypoints.size() < 2) return out;
  const auto& kp = path.keypoints;
  const double cell = path.gridScale > 0 ? path.gridScale : 0.08;
  auto collect = [&](const Vec2& anchor, const Vec2& towards) {
    Vec2 d = towards - anchor;
    std::vector<Point3> sel;
    if (d.norm() < 1e-12) return sel;
    d.normalize();
    const Vec2 n(-d.y(), d.x());
    // Keypoints sit on cell centres. Register the set to the sub-cell wall
    // line and wall end so quantization does not read as mismatch.
    std::vector<double> lateral, along;
    for (const auto& p : points) {
      const Vec2 q = Vec2(p.y(), p.z()) - anchor;
      const double s = q.dot(d);
      if (std::abs(q.dot(n)) <= cell && s >= -cell && s <= params.radius) {
        lateral.push_back(q.dot(n));
        along.push_back(s);
      }
    }
    Vec2 shift = Vec2::Zero();
    if (!lateral.empty()) {
      auto mid = lateral.begin() + lateral.size() / 2;
      std::nth_element(lateral.begin(), mid, lateral.end());
      auto lo = along.begin() + along.size() / 50;
      std::nth_element(along.begin(), lo, along.end());
      shift = *mid * n + std::min(*lo, 0.5 * cell) * d;
    }
    for (const auto& p : points) {
      const Vec2 q = Vec2(p.y(), p.z()) - shift - anchor;
      if (std::abs(q.dot(d)) <= params.band && q.norm() <= params.radius) {
        sel.emplace_back(p.x(), p.y() - shift.x(), p.z() - shift.y());
      }
    }
    if (static_cast<int>(sel.size()) > params.maxPoints) {
      std::vector<Point3> sub;
      sub.reserve(params.maxPoints);
      for (int i = 0; i < params.maxPoints; ++i) {
        sub.push_back(sel[static_cast<std::size_t>(i) * sel.size() / params.maxPoints]);
      }
      sel = std::move(sub);
    }
    return sel;
  };
  out.head = collect(kp.front(), kp[1]);
  out.rear = collect(kp.back(), kp[kp.size() - 2]);
  return out;
}

double point_mismatch(double d, double sigma) {
  const double c = std::min(d, 4.0 * sigma);
  // Phi(c/s) - Phi(-c/s)
  return std::erf(c / (sigma * std::sqrt(2.0)));
}

namespace {

struct CellKey {
  long long x, y, z;
  bool operator==(const CellKey&) const = default;
};
struct CellHash {
  std::size_t operator()(const CellKey& k) const {
    return static_cast<std::size_t>(k.x * 73856093LL ^ k.y * 19349663LL ^ k.z * 83492791LL);
  }
};

class PointHash {
 public:
  PointHash(std::span<const Point3> pts, double cell) : pts_(pts), cell_(cell) {
    for (std::size_t i = 0; i < pts.size(); ++i) map_[key(pts[i])].push_back(static_cast<int>(i));
  }
  // Nearest distance, or `cap` when nothing lies within it.
  double nearest(const Point3& p, double cap) const {
    const CellKey k = key(p);
    double best = cap;
    for (long long dx = -1; dx <= 1; ++dx) {
      for (long long dy = -1; dy <= 1; ++dy) {
        for (long long dz = -1; dz <= 1; ++dz) {
          auto it = map_.find({k.x + dx, k.y + dy, k.z + dz});
          if (it == map_.end()) continue;
          for (int i : it->second) best = std::min(best, (pts_[i] - p).norm());
        }
      }
    }
    return best;
  }

 private:
  CellKey key(const Point3& p) const {
    return {static_cast<long long>(std::floor(p.x() / cell_)), static_cast<long long>(std::floor(p.y() / cell_)),
            static_cast<long long>(std::floor(p.z() / cell_))};
  }
  std::span<const Point3> pts_;
  double cell_;
  std::unordered_map<CellKey, std::vector<int>, CellHash> map_;
};

}  // namespace

double boundary_mismatch_pair(std::span<const Point3> rear, std::span<const Point3> head, double sigma) {
  if (rear.size() < 50 || head.size() < 50) return 0.5;
  const double cap = 4.0 * sigma;
  const PointHash hr(rear, cap);
  const PointHash hh(head, cap);
  double sum = 0.0;
  for (const auto& p : rear) sum += point_mismatch(hh.nearest(p, cap), sigma);
  for (const auto& p : head) sum += point_mismatch(hr.nearest(p, cap), sigma);
  return sum / static_cast<double>(rear.size() + head.size());
}

Concatenation concatenate(std::span<const std::pair<const LayoutPath*, int>> layouts) {
  Concatenation out;
  for (const auto& [lp, rot] : layouts) {
    const auto& kp = lp->keypoints;
    Vec2 t = Vec2::Zero();
    if (!out.path.empty()) t = out.path.back() - rotate_quarter(kp.front(), rot);
    out.translations.push_back(t);
    out.slotStart.push_back(out.path.empty() ? 0 : out.path.size() - 1);
    for (std::size_t i = out.path.empty() ? 0 : 1; i < kp.size(); ++i) {
      out.path.push_back(rotate_quarter(kp[i], rot) + t);
    }
  }
  return out;
}

std::vector<Vec2> close_with_manhattan_gap(std::span<const Vec2> chain, double jogTol) {
  std::vector<Vec2> loop(chain.begin(), chain.end());
  if (loop.size() < 2) return loop;
  const Vec2 ps = loop.front();
  const Vec2 pe = loop.back();
  if ((ps - pe).norm() <= 1e-9) {
    loop.pop_back();
    return loop;
  }
  if (std::abs(ps.x() - pe.x()) <= 1e-12 || std::abs(ps.y() - pe.y()) <= 1e-12) return loop;
  auto a = loop;
  a.emplace_back(pe.x(), ps.y());
  auto b = loop;
  b.emplace_back(ps.x(), pe.y());
  return corner_count(b, true, jogTol) < corner_count(a, true, jogTol) ? b : a;
}

int energy_layout_complexity(std::span<const Vec2> chain, const EnergyTolerances& tol) {
  if (chain.size() < 2) return 0;
  const auto loop = close_with_manhattan_gap(chain, tol.jog);
  const int corners = corner_count(loop, true, tol.jog);
  std::vector<Vec2> distinct;
  for (const auto& p : loop) {
    if (std::none_of(distinct.begin(), distinct.end(), [&](const Vec2& q) { return (q - p).norm() <= 1e-9; })) {
      distinct.push_back(p);
    }
  }
  const int hull = convex_hull_edge_count(distinct, tol.hull);
  return corners + hull;
}

double energy_closure(std::span<const Vec2> chain) {
  if (chain.empty()) return 0.0;
  return manhattan_distance(chain.front(), chain.back());
}

namespace {

// Unit direction of the last segment, pointing out of the path.
Vec2 exit_direction(const LayoutPath& path) {
  const auto& kp = path.keypoints;
  if (kp.size() < 2) return Vec2::UnitX();
  const Vec2 d = kp.back() - kp[kp.size() - 2];
  return d.norm() > 1e-12 ? Vec2(d.normalized()) : Vec2(Vec2::UnitX());
}

}  // namespace

int relative_rot_index(int from, int to) {
  const int deg = ((rot_index_degrees(to) - rot_index_degrees(from)) % 360 + 360) % 360;
  return rot_index_from_degrees(deg);
}

std::vector<std::vector<std::array<double, 4>>> build_pair_table(std::span<const LayoutPath> layouts,
                                                                 std::span<const BoundarySet> boundaries,
                                                                 double sigma) {
  const std::size_t n = layouts.size();
  std::vector<std::vector<std::array<double, 4>>> table(n, std::vector<std::array<double, 4>>(n));
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t l = 0; l < n; ++l) {
      table[k][l].fill(0.5);
      if (k == l) continue;
      for (int r = 1; r <= 4; ++r) {
        const Vec2 t = layouts[k].target() - rotate_quarter(layouts[l].source(), r);
        const Vec2 joint = layouts[k].target();
        const Vec2 out = exit_direction(layouts[k]);
        std::vector<Point3> head;
        head.reserve(boundaries[l].head.size());
        for (const auto& p : boundaries[l].head) {
          Vec2 q = rotate_quarter(Vec2(p.y(), p.z()), r) + t;
          // Mirror across the cutting plane: the fragments do not overlap, so
          // a continuing wall lands on the rear set and a folded one leaves it.
          q -= 2.0 * (q - joint).dot(out) * out;
          head.emplace_back(p.x(), q.x(), q.y());
        }
        table[k][l][r - 1] = boundary_mismatch_pair(boundaries[k].rear, head, sigma);
      }
    }
  }
  return table;
}

namespace {

double pair_score(const PlacementProblem& prob, const SlotChoice& a, const SlotChoice& b) {
  return prob.pairScore[a.fragment][b.fragment][relative_rot_index(a.rotIndex, b.rotIndex) - 1];
}

std::vector<std::pair<const LayoutPath*, int>> chain_spec(const PlacementProblem& prob,
                                                           std::span<const SlotChoice> slots) {
  std::vector<std::pair<const LayoutPath*, int>> spec;
  spec.reserve(slots.size());
  for (const auto& s : slots) spec.emplace_back(&prob.layouts[s.fragment], s.rotIndex);
  return spec;
}

// A chain that ends exactly on its start is a loop, not a crossing.
bool crosses(const std::vector<Vec2>& chain, double tol) {
  const bool loop = chain.size() > 3 && (chain.front() - chain.back()).norm() <= 1e-9;
  return path_self_intersects(chain, IntersectOptions{tol, loop});
}

bool better(const PlacementEnergy& a, const std::vector<SlotChoice>& as, const PlacementEnergy& b,
            const std::vector<SlotChoice>& bs) {
  if (a.total != b.total) return a.total < b.total;
  return as < bs;
}

struct Search {
  const PlacementProblem& prob;
  int n = 0;
  std::optional<PlacementEnergy> best;
  std::vector<SlotChoice> bestSlots;
  std::uint64_t leaves = 0;
  std::uint64_t nodes = 0;

  void consider(const std::vector<SlotChoice>& slots) {
    ++leaves;
    auto e = evaluate_placement(prob, slots);
    if (!e) return;
    if (!best || better(*e, slots, *best, bestSlots)) {
      best = e;
      bestSlots = slots;
    }
  }

  void dfs(std::vector<SlotChoice>& slots, std::vector<bool>& used, const std::vector<Vec2>& chain,
           double pairSum) {
    ++nodes;
    if (static_cast<int>(slots.size()) == n) {
      consider(slots);
      return;
    }
    for (int f = 0; f < n; ++f) {
      if (used[f]) continue;
      for (int r = 1; r <= 4; ++r) {
        const SlotChoice c{f, r};
        const auto& kp = prob.layouts[f].keypoints;
        std::vector<Vec2> next = chain;
        const Vec2 t = chain.empty() ? Vec2::Zero() : Vec2(chain.back() - rotate_quarter(kp.front(), r));
        for (std::size_t i = chain.empty() ? 0 : 1; i < kp.size(); ++i) next.push_back(rotate_quarter(kp[i], r) + t);
        if (crosses(next, prob.tol.cross)) continue;
        const double ps = slots.empty() ? 0.0 : pairSum + pair_score(prob, slots.back(), c);
        if (best) {
          const double lb = prob.weights.layout * corner_count(next, false, prob.tol.jog) + prob.weights.boundary * ps;
          if (lb - best->total >= 1e-9) continue;
        }
        slots.push_back(c);
        used[f] = true;
        dfs(slots, used, next, ps);
        used[f] = false;
        slots.pop_back();
      }
    }
  }

  void brute() {
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    int combos = 1;
    for (int i = 0; i < n; ++i) combos *= 4;
    std::vector<SlotChoice> slots(n);
    do {
      for (int code = 0; code < combos; ++code) {
        int c = code;
        for (int i = n - 1; i >= 0; --i) {
          slots[i] = {perm[i], c % 4 + 1};
          c /= 4;
        }
        consider(slots);
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
};

}  // namespace

std::optional<PlacementEnergy> evaluate_placement(const PlacementProblem& prob, std::span<const SlotChoice> slots) {
  const auto spec = chain_spec(prob, slots);
  const auto cat = concatenate(spec);
  if (crosses(cat.path, prob.tol.cross)) return std::nullopt;
  PlacementEnergy e;
  e.layoutComplexity = energy_layout_complexity(cat.path, prob.tol);
  e.closure = energy_closure(cat.path);
  double eb = 0.0;
  const std::size_t n = slots.size();
  if (n > 1) {
    for (std::size_t i = 0; i + 1 < n; ++i) eb += pair_score(prob, slots[i], slots[i + 1]);
    eb += pair_score(prob, slots[n - 1], slots[0]);
  }
  e.boundaryMismatch = eb;
  e.total = prob.weights.layout * e.layoutComplexity + prob.weights.closure * e.closure +
            prob.weights.boundary * e.boundaryMismatch;
  return e;
}

Placement solve_placement(const PlacementProblem& prob, Solver solver) {
  const int n = static_cast<int>(prob.layouts.size());
  if (n == 0) throw PreconditionError("placement needs at least one layout");
  for (const auto& lp : prob.layouts) {
    if (lp.keypoints.size() < 2) throw PreconditionError("layout path needs at least two keypoints");
  }
  if (solver == Solver::Brute && n > kBruteForceLimit) {
    throw CapacityError("brute-force placement is limited to " + std::to_string(kBruteForceLimit) + " fragments");
  }
  Search s{prob, n, std::nullopt, {}, 0, 0};
  if (solver == Solver::Brute) {
    s.brute();
  } else {
    std::vector<SlotChoice> slots;
    std::vector<bool> used(n, false);
    s.dfs(slots, used, {}, 0.0);
  }
  if (!s.best) throw PlacementError("every placement makes walls cross");

  Placement out;
  out.slots = s.bestSlots;
  out.energy = *s.best;
  out.leavesEvaluated = s.leaves;
  out.nodesExpanded = s.nodes;
  const auto cat = concatenate(chain_spec(prob, out.slots));
  out.path = cat.path;
  out.slotOf.assign(n, 0);
  out.rotIndexOf.assign(n, 1);
  out.translationOf.assign(n, Vec2::Zero());
  for (int i = 0; i < n; ++i) {
    const auto& c = out.slots[i];
    out.slotOf[c.fragment] = i;
    out.rotIndexOf[c.fragment] = c.rotIndex;
    out.translationOf[c.fragment] = cat.translations[i];
  }
  return out;
}

}  // namespace planstitch
