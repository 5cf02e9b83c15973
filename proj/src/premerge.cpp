#include "planstitch/premerge.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace planstitch {

namespace {

using Cell = std::pair<int, int>;

std::set<Cell> evidence_cells(const Fragment& f, const PremergeParams& params) {
  std::map<Cell, int> counts;
  for (const auto& p : f.points) {
    ++counts[{static_cast<int>(std::floor(p.y() / params.cellSize)),
              static_cast<int>(std::floor(p.z() / params.cellSize))}];
  }
  std::set<Cell> out;
  for (const auto& [c, n] : counts) {
    if (n >= params.evidenceThreshold) out.insert(c);
  }
  return out;
}

Cell rotate_cell(const Cell& c, int rotIndex) {
  const Vec2 r = rotate_quarter(Vec2(c.first, c.second), rotIndex);
  return {static_cast<int>(std::lround(r.x())), static_cast<int>(std::lround(r.y()))};
}

// Fraction of `from` (shifted by off) with an evidence cell of `to` within
// one cell.
double matched_fraction(const std::vector<Cell>& from, const Cell& off, const std::set<Cell>& to) {
  if (from.empty()) return 0.0;
  int hit = 0;
  for (const auto& c : from) {
    const Cell s{c.first + off.first, c.second + off.second};
    bool found = false;
    for (int dy = -1; dy <= 1 && !found; ++dy) {
      for (int dz = -1; dz <= 1 && !found; ++dz) found = to.count({s.first + dy, s.second + dz}) > 0;
    }
    if (found) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(from.size());
}

}  // namespace

OverlapMatch best_overlap(const Fragment& a, const Fragment& b, const PremergeParams& params) {
  OverlapMatch best;
  const auto ca = evidence_cells(a, params);
  const auto cb = evidence_cells(b, params);
  if (ca.empty() || cb.empty()) return best;
  const std::vector<Cell> va(ca.begin(), ca.end());
  for (int r = 1; r <= 4; ++r) {
    std::vector<Cell> vb;
    for (const auto& c : cb) vb.push_back(rotate_cell(c, r));
    const std::set<Cell> sb(vb.begin(), vb.end());
    std::map<Cell, int> votes;
    for (const auto& x : va) {
      for (const auto& y : vb) ++votes[{x.first - y.first, x.second - y.second}];
    }
    std::vector<std::pair<int, Cell>> ranked;
    ranked.reserve(votes.size());
    for (const auto& [off, n] : votes) ranked.emplace_back(-n, off);
    const std::size_t k = std::min<std::size_t>(params.candidateOffsets, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k), ranked.end());
    for (std::size_t i = 0; i < k; ++i) {
      const Cell off = ranked[i].second;
      const double fb = matched_fraction(vb, off, ca);
      const Cell neg{-off.first, -off.second};
      const double fa = matched_fraction(va, neg, sb);
      const double score = std::min(fa, fb);
      if (score > best.score) {
        best.score = score;
        best.rotIndex = r;
        best.offset = Vec2(off.first, off.second) * params.cellSize;
      }
    }
  }
  return best;
}

PremergeResult premerge_overlapping(std::vector<Fragment> frags, const PremergeParams& params) {
  PremergeResult out;
  for (const auto& f : frags) out.members.push_back({PremergeMember{f.id, Eigen::Matrix4d::Identity()}});
  bool merged = true;
  while (merged) {
    merged = false;
    for (std::size_t i = 0; i < frags.size() && !merged; ++i) {
      for (std::size_t j = i + 1; j < frags.size() && !merged; ++j) {
        const OverlapMatch m = best_overlap(frags[i], frags[j], params);
        if (m.score < params.inlierThresh) continue;
        const Eigen::Matrix3d R = rot_index_matrix3(m.rotIndex);
        const Eigen::Vector3d t(0.0, m.offset.x(), m.offset.y());
        auto& dst = frags[i];
        for (const auto& p : frags[j].points) dst.points.push_back(R * p + t);
        dst.id += "+" + frags[j].id;
        for (auto& pl : dst.planes) pl.inliers.clear();
        Eigen::Matrix4d T = Eigen::Matrix4d::Identity();
        T.topLeftCorner<3, 3>() = R;
        T.topRightCorner<3, 1>() = t;
        for (auto& m : out.members[j]) {
          m.toMerged = T * m.toMerged;
          out.members[i].push_back(m);
        }
        frags.erase(frags.begin() + static_cast<std::ptrdiff_t>(j));
        out.members.erase(out.members.begin() + static_cast<std::ptrdiff_t>(j));
        merged = true;
      }
    }
  }
  out.fragments = std::move(frags);
  return out;
}

}  // namespace planstitch
