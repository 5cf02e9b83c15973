#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "planstitch/error.hpp"
#include "planstitch/placement.hpp"

using namespace planstitch;

namespace {

// Standard normal CDF, independent of the library's erf formulation.
double phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double brute_pair(const std::vector<Point3>& a, const std::vector<Point3>& b, double sigma) {
  if (a.size() < 50 || b.size() < 50) return 0.5;
  auto nearest = [&](const Point3& p, const std::vector<Point3>& set) {
    double best = 4.0 * sigma;
    for (const auto& q : set) best = std::min(best, (q - p).norm());
    return best;
  };
  double sum = 0.0;
  for (const auto& p : a) {
    const double d = nearest(p, b);
    sum += phi(d / sigma) - phi(-d / sigma);
  }
  for (const auto& p : b) {
    const double d = nearest(p, a);
    sum += phi(d / sigma) - phi(-d / sigma);
  }
  return sum / static_cast<double>(a.size() + b.size());
}

std::vector<Point3> lattice(double y, int n, double spacing) {
  std::vector<Point3> pts;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) pts.emplace_back(i * spacing, y, j * spacing);
  }
  return pts;
}

LayoutPath make_path(std::vector<Vec2> kp) {
  LayoutPath p;
  p.keypoints = std::move(kp);
  p.gridScale = 0.08;
  return p;
}

PlacementProblem problem_with_table(std::vector<LayoutPath> layouts, double fill) {
  PlacementProblem prob;
  const std::size_t n = layouts.size();
  prob.layouts = std::move(layouts);
  prob.pairScore.assign(n, std::vector<std::array<double, 4>>(n));
  for (auto& row : prob.pairScore) {
    for (auto& e : row) e.fill(fill);
  }
  return prob;
}

LayoutPath random_layout(std::mt19937& rng) {
  static const Vec2 step[4] = {Vec2(1, 0), Vec2(0, 1), Vec2(-1, 0), Vec2(0, -1)};
  std::vector<Vec2> kp{Vec2::Zero()};
  const int segs = 1 + static_cast<int>(rng() % 3);
  int last = -1;
  for (int s = 0; s < segs; ++s) {
    int d = static_cast<int>(rng() % 4);
    while (last >= 0 && d % 2 == last % 2) d = static_cast<int>(rng() % 4);
    kp.push_back(kp.back() + (1 + static_cast<double>(rng() % 3)) * step[d]);
    last = d;
  }
  return make_path(kp);
}

}  // namespace

TEST(BoundaryScore, PointProbabilityMatchesNormalCdf) {
  EXPECT_DOUBLE_EQ(point_mismatch(0.0, 0.05), 0.0);
  EXPECT_NEAR(point_mismatch(0.05, 0.05), 0.6827, 1e-3);
  EXPECT_NEAR(point_mismatch(0.05, 0.05), phi(1.0) - phi(-1.0), 1e-12);
  // Saturated beyond the 4 sigma cap.
  EXPECT_DOUBLE_EQ(point_mismatch(1.0, 0.05), point_mismatch(0.2, 0.05));
}

TEST(BoundaryScore, IdenticalSetsScoreZero) {
  const auto a = lattice(0.0, 10, 0.1);
  EXPECT_DOUBLE_EQ(boundary_mismatch_pair(a, a), 0.0);
}

TEST(BoundaryScore, UniformSigmaOffset) {
  const auto a = lattice(0.0, 10, 0.1);
  const auto b = lattice(0.05, 10, 0.1);
  EXPECT_NEAR(boundary_mismatch_pair(a, b, 0.05), 0.6827, 1e-3);
}

TEST(BoundaryScore, SmallSetFallsBackToHalf) {
  const auto a = lattice(0.0, 10, 0.1);
  std::vector<Point3> b(a.begin(), a.begin() + 30);
  EXPECT_DOUBLE_EQ(boundary_mismatch_pair(a, b), 0.5);
  EXPECT_DOUBLE_EQ(boundary_mismatch_pair(b, a), 0.5);
  std::vector<Point3> c(a.begin(), a.begin() + 50);
  EXPECT_NE(boundary_mismatch_pair(a, c), 0.5);
}

TEST(BoundaryScore, BoundedSymmetricAndMatchesBruteForce) {
  std::mt19937 rng(12);
  std::normal_distribution<double> noise(0.0, 0.06);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<Point3> a, b;
    const int na = 40 + static_cast<int>(rng() % 120), nb = 40 + static_cast<int>(rng() % 120);
    for (int i = 0; i < na; ++i) a.emplace_back(2.0 * u(rng), noise(rng), u(rng));
    for (int i = 0; i < nb; ++i) b.emplace_back(2.0 * u(rng), noise(rng) + 0.05 * trial / 40.0, u(rng));
    const double s = boundary_mismatch_pair(a, b);
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
    EXPECT_NEAR(s, boundary_mismatch_pair(b, a), 1e-12);
    EXPECT_NEAR(s, brute_pair(a, b, 0.05), 1e-12) << "trial " << trial;
  }
}

TEST(BoundarySets, PointsLieWithinBandOfTheirPlane) {
  // An L wall: (0,3)->(0,0)->(3,0), 2 cm off the keypoint lines.
  std::vector<Point3> pts;
  for (double s = 0.0; s <= 3.0; s += 0.02) {
    for (double h = 0.0; h <= 2.5; h += 0.1) {
      pts.emplace_back(h, 0.02, s);
      pts.emplace_back(h, s, -0.02);
    }
  }
  const LayoutPath path = make_path({{0, 3}, {0, 0}, {3, 0}});
  BoundaryParams params;
  const BoundarySet b = extract_boundary_sets(pts, path, params);
  ASSERT_GE(b.head.size(), 50u);
  ASSERT_GE(b.rear.size(), 50u);
  EXPECT_LE(static_cast<int>(b.head.size()), params.maxPoints);
  const Vec2 dHead(0, -1), dRear(-1, 0);
  double lateral = 0.0;
  for (const auto& p : b.head) {
    const Vec2 q = Vec2(p.y(), p.z()) - path.source();
    EXPECT_LE(std::abs(q.dot(dHead)), params.band + 1e-12);
    EXPECT_LE(q.norm(), params.radius + 1e-12);
    lateral += q.x();
  }
  // Registered onto the keypoint line.
  EXPECT_NEAR(lateral / static_cast<double>(b.head.size()), 0.0, 0.01);
  for (const auto& p : b.rear) {
    const Vec2 q = Vec2(p.y(), p.z()) - path.target();
    EXPECT_LE(std::abs(q.dot(dRear)), params.band + 1e-12);
    EXPECT_NEAR(q.y(), 0.0, 0.03);
  }
}

TEST(Concatenate, SinglePathIsItself) {
  const LayoutPath p = make_path({{0, 0}, {2, 0}, {2, 1}});
  const std::vector<std::pair<const LayoutPath*, int>> spec{{&p, 1}};
  const auto c = concatenate(spec);
  EXPECT_EQ(c.path, p.keypoints);
  EXPECT_EQ(c.translations.front(), Vec2::Zero());
}

TEST(Concatenate, RectangleHalvesCloseAndFlippedHalfDoesNot) {
  const LayoutPath a = make_path({{2, 3}, {0, 3}, {0, 0}, {2, 0}});
  const LayoutPath b = make_path({{2, 0}, {4, 0}, {4, 3}, {2, 3}});
  std::vector<std::pair<const LayoutPath*, int>> spec{{&a, 1}, {&b, 1}};
  auto c = concatenate(spec);
  EXPECT_EQ(c.path.size(), 7u);
  EXPECT_DOUBLE_EQ(energy_closure(c.path), 0.0);
  EXPECT_EQ(c.translations[1], Vec2::Zero());
  EXPECT_EQ(c.slotStart[1], 3u);
  EXPECT_EQ(energy_layout_complexity(c.path), 8);

  spec[1].second = 2;
  c = concatenate(spec);
  // b rotated by 180 degrees ends at (2, -3).
  EXPECT_TRUE(c.path.back().isApprox(Vec2(2, -3)));
  EXPECT_DOUBLE_EQ(energy_closure(c.path), 6.0);
}

TEST(Energy, LayoutComplexityExamples) {
  const std::vector<Vec2> ell{{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}, {0, 0}};
  EXPECT_EQ(energy_layout_complexity(ell), 11);
  const std::vector<Vec2> rect{{0, 0}, {4, 0}, {4, 3}, {0, 3}, {0, 0}};
  const std::vector<Vec2> jogged{{0, 0}, {4, 0}, {4, 3}, {2, 3}, {2, 3.5}, {0, 3.5}, {0, 0}};
  EXPECT_LT(energy_layout_complexity(rect), energy_layout_complexity(jogged));
}

TEST(Energy, OpenChainClosedByManhattanL) {
  // Three sides of a rectangle: the L closure adds the fourth.
  const std::vector<Vec2> u{{0, 3}, {0, 0}, {4, 0}, {4, 3}};
  EXPECT_EQ(close_with_manhattan_gap(u, 0.0).size(), 4u);
  EXPECT_EQ(energy_layout_complexity(u), 8);
  const std::vector<Vec2> l{{0, 3}, {0, 0}, {4, 0}};
  EXPECT_EQ(close_with_manhattan_gap(l, 0.0).size(), 4u);
}

TEST(Energy, ClosureExamples) {
  EXPECT_DOUBLE_EQ(energy_closure(std::vector<Vec2>{{0, 0}, {1, 0}, {0, 0}}), 0.0);
  EXPECT_DOUBLE_EQ(energy_closure(std::vector<Vec2>{{0, 0}, {1.5, 0}, {1.5, -2.0}}), 3.5);
}

TEST(Placement, RelativeRotationComposes) {
  for (int a = 1; a <= 4; ++a) {
    EXPECT_EQ(relative_rot_index(a, a), 1);
    for (int b = 1; b <= 4; ++b) {
      const int r = relative_rot_index(a, b);
      EXPECT_EQ((rot_index_degrees(a) + rot_index_degrees(r)) % 360, rot_index_degrees(b));
    }
  }
}

TEST(Placement, SingleFragment) {
  auto prob = problem_with_table({make_path({{0, 0}, {3, 0}, {3, 2}})}, 0.5);
  const Placement p = solve_placement(prob);
  ASSERT_EQ(p.slots.size(), 1u);
  EXPECT_EQ(p.slotOf[0], 0);
  EXPECT_EQ(p.rotIndexOf[0], 1);
  EXPECT_DOUBLE_EQ(p.energy.boundaryMismatch, 0.0);
}

TEST(Placement, RectangleHalvesDfsMatchesBrute) {
  auto prob = problem_with_table(
      {make_path({{2, 3}, {0, 3}, {0, 0}, {2, 0}}), make_path({{2, 0}, {4, 0}, {4, 3}, {2, 3}})}, 1.0);
  prob.pairScore[0][1][0] = 0.0;
  prob.pairScore[1][0][0] = 0.0;
  const Placement dfs = solve_placement(prob, Solver::Dfs);
  const Placement brute = solve_placement(prob, Solver::Brute);
  EXPECT_EQ(dfs.energy.total, brute.energy.total);
  EXPECT_EQ(dfs.slots, brute.slots);
  EXPECT_EQ(brute.leavesEvaluated, 32u);
  EXPECT_DOUBLE_EQ(dfs.energy.closure, 0.0);
  EXPECT_EQ(dfs.energy.layoutComplexity, 8);
  EXPECT_DOUBLE_EQ(dfs.energy.boundaryMismatch, 0.0);
  EXPECT_EQ(relative_rot_index(dfs.rotIndexOf[0], dfs.rotIndexOf[1]), 1);
}

TEST(Placement, DfsMatchesBruteOnRandomProblems) {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int solved = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 4);
    std::vector<LayoutPath> layouts;
    for (int i = 0; i < n; ++i) layouts.push_back(random_layout(rng));
    auto prob = problem_with_table(layouts, 0.0);
    for (auto& row : prob.pairScore) {
      for (auto& e : row) {
        for (double& v : e) v = u(rng);
      }
    }
    prob.tol = EnergyTolerances::for_cell(0.08, n);
    bool dfsThrew = false, bruteThrew = false;
    Placement d, b;
    try {
      d = solve_placement(prob, Solver::Dfs);
    } catch (const PlacementError&) {
      dfsThrew = true;
    }
    try {
      b = solve_placement(prob, Solver::Brute);
    } catch (const PlacementError&) {
      bruteThrew = true;
    }
    ASSERT_EQ(dfsThrew, bruteThrew) << "trial " << trial;
    if (dfsThrew) continue;
    ++solved;
    EXPECT_EQ(d.energy.total, b.energy.total) << "trial " << trial;
    EXPECT_EQ(d.slots, b.slots) << "trial " << trial;
    EXPECT_LE(d.leavesEvaluated, b.leavesEvaluated);
    // Bijection and a crossing-free chain.
    std::vector<int> seen(n, 0);
    for (const auto& s : d.slots) ++seen[s.fragment];
    for (int c : seen) EXPECT_EQ(c, 1);
    const bool loop = d.path.size() > 3 && (d.path.front() - d.path.back()).norm() <= 1e-9;
    EXPECT_FALSE(path_self_intersects(d.path, IntersectOptions{prob.tol.cross, loop}));
    EXPECT_GE(d.energy.closure, 0.0);
    EXPECT_GE(d.energy.boundaryMismatch, 0.0);
    EXPECT_LE(d.energy.boundaryMismatch, n > 1 ? n : 0);
  }
  EXPECT_GT(solved, 40);
}

TEST(Placement, BruteForceCapacity) {
  std::vector<LayoutPath> layouts(kBruteForceLimit + 1, make_path({{0, 0}, {1, 0}}));
  auto prob = problem_with_table(layouts, 0.5);
  EXPECT_THROW(solve_placement(prob, Solver::Brute), CapacityError);
}

TEST(Placement, RejectsDegenerateInput) {
  auto prob = problem_with_table({}, 0.5);
  EXPECT_THROW(solve_placement(prob), PreconditionError);
  prob = problem_with_table({make_path({{0, 0}})}, 0.5);
  EXPECT_THROW(solve_placement(prob), PreconditionError);
}

TEST(PairTable, ContinuingWallBeatsFold) {
  // Two halves of a straight wall split at y = 2, each with its own points.
  std::vector<Point3> left, right;
  for (double s = 0.0; s <= 2.0; s += 0.02) {
    for (double h = 0.0; h <= 2.5; h += 0.1) {
      left.emplace_back(h, s, 0.0);
      right.emplace_back(h, s + 2.0, 0.0);
    }
  }
  const std::vector<LayoutPath> layouts{make_path({{0, 0}, {2, 0}}), make_path({{2, 0}, {4, 0}})};
  const std::vector<BoundarySet> b{extract_boundary_sets(left, layouts[0]), extract_boundary_sets(right, layouts[1])};
  const auto table = build_pair_table(layouts, b);
  const double straight = table[0][1][0];
  for (int r = 2; r <= 4; ++r) EXPECT_LT(straight, table[0][1][r - 1]);
  EXPECT_LT(straight, 0.2);
  EXPECT_DOUBLE_EQ(table[0][0][0], 0.5);
}
