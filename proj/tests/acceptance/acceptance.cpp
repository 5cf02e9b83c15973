// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Pass criterion numbers as arguments to run a subset.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "geom_oracle.hpp"
#include "pg_oracle.hpp"
#include "planstitch/artifacts.hpp"
#include "planstitch/error.hpp"
#include "planstitch/evaluate.hpp"
#include "planstitch/pipeline.hpp"

using namespace planstitch;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

SuiteSpec clean_suite() {
  SuiteSpec s;
  s.seed = 1;
  s.count = 100;
  s.corners = {4, 6, 8, 10};
  s.ks = {2, 4};
  return s;
}

SuiteSpec noisy_suite() {
  SuiteSpec s = clean_suite();
  s.noiseSigma = 0.03;
  s.occlusionFrac = 0.1;
  return s;
}

struct SceneRun {
  std::string name;
  bool ok = false;
  std::string error;
  AlignResult result;
  SceneMetrics metrics;
};

SceneMetrics failed_metrics(const SceneTruth& truth) {
  SceneMetrics m;
  m.accLocalTotal = static_cast<int>(truth.ids.size());
  m.rotIndexCorrect.assign(truth.ids.size(), false);
  return m;
}

struct SuiteRun {
  std::vector<SceneRun> scenes;
  double seconds = 0.0;
  int localHits = 0, localTotal = 0, globalHits = 0;

  double acc_local() const { return localTotal ? 100.0 * localHits / localTotal : 0.0; }
  double acc_global() const { return scenes.empty() ? 0.0 : 100.0 * globalHits / static_cast<double>(scenes.size()); }
};

SuiteRun run_suite(const SuiteSpec& suite, const PipelineConfig& cfg) {
  SuiteRun out;
  const auto t0 = Clock::now();
  for (const auto& spec : expand_suite(suite)) {
    SceneRun r;
    r.name = spec.name;
    const auto scene = generate_scene(spec);
    const auto truth = truth_of(scene, cfg.wallHeight);
    try {
      r.result = run_pipeline(scene.fragments, cfg);
      r.metrics = evaluate_scene(estimate_from_result(r.result), truth);
      r.ok = true;
    } catch (const std::exception& e) {
      r.error = e.what();
      r.metrics = failed_metrics(truth);
    }
    out.localHits += r.metrics.accLocalHits;
    out.localTotal += r.metrics.accLocalTotal;
    out.globalHits += r.metrics.accGlobalHit;
    out.scenes.push_back(std::move(r));
  }
  out.seconds = seconds_since(t0);
  return out;
}

// Memoized suite runs shared between criteria.
const SuiteRun& clean_run() {
  static const SuiteRun run = run_suite(clean_suite(), PipelineConfig{});
  return run;
}
const SuiteRun& noisy_run() {
  static const SuiteRun run = run_suite(noisy_suite(), PipelineConfig{});
  return run;
}

// Stages up to local layouts only; placement is re-solved by the caller.
AlignResult local_stage(const GroundTruthScene& scene, const PipelineConfig& cfg) {
  AlignResult res;
  for (const auto& f : scene.fragments) {
    res.inputOrder.push_back(f.id);
    try {
      PlacedUnit u;
      u.id = f.id;
      u.prepared = prepare_fragment(f, cfg);
      res.prepTransforms.emplace(f.id, u.prepared.transform());
      u.members = {PremergeMember{u.id, Eigen::Matrix4d::Identity()}};
      u.local = estimate_local_layout(u.prepared.fragment, cfg.local(), u.prepared.interiorHint,
                                      u.prepared.floorSamples);
      u.boundary = extract_boundary_sets(u.prepared.fragment.points, u.local.path, cfg.boundary());
      res.units.push_back(std::move(u));
    } catch (const Error& e) {
      res.failed.push_back(f.id);
    }
  }
  return res;
}

Outcome criterion_oracle() {
  SuiteSpec suite;
  suite.seed = 1;
  suite.count = 100;
  suite.corners = {4, 6, 8, 10};
  suite.ks = {2, 3, 4};
  const PipelineConfig cfg;
  const auto t0 = Clock::now();
  int equal = 0, bothInfeasible = 0, scenes = 0;
  std::uint64_t dfsLeaves = 0, bruteLeaves = 0;
  std::vector<std::string> mismatches;
  for (const auto& spec : expand_suite(suite)) {
    ++scenes;
    const auto res = local_stage(generate_scene(spec), cfg);
    if (res.units.empty()) {
      mismatches.push_back(spec.name + " (no local layouts)");
      continue;
    }
    const auto prob = placement_problem(res.units, cfg);
    std::optional<Placement> d, b;
    try {
      d = solve_placement(prob, Solver::Dfs);
    } catch (const PlacementError&) {
    }
    try {
      b = solve_placement(prob, Solver::Brute);
    } catch (const PlacementError&) {
    }
    if (!d && !b) {
      ++bothInfeasible;
      ++equal;
      continue;
    }
    if (d && b && d->energy.total == b->energy.total && d->slots == b->slots) {
      ++equal;
      dfsLeaves += d->leavesEvaluated;
      bruteLeaves += b->leavesEvaluated;
      continue;
    }
    mismatches.push_back(spec.name);
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = equal == scenes && secs <= 60.0;
  o.detail = std::to_string(equal) + "/" + std::to_string(scenes) + " scenes identical (" +
             std::to_string(bothInfeasible) + " infeasible for both), dfs leaves " + std::to_string(dfsLeaves) +
             " vs brute " + std::to_string(bruteLeaves) + ", " + fmt("%.1f s", secs);
  for (const auto& m : mismatches) o.detail += " [" + m + "]";
  return o;
}

Outcome criterion_clean() {
  const auto& run = clean_run();
  Outcome o;
  o.pass = run.acc_local() >= 95.0 && run.acc_global() >= 85.0 && run.seconds <= 300.0;
  o.detail = "ACC_local " + fmt("%.2f%%", run.acc_local()) + ", ACC_global " + fmt("%.1f%%", run.acc_global()) +
             ", " + fmt("%.1f s", run.seconds);
  return o;
}

Outcome criterion_noisy() {
  const auto& run = noisy_run();
  Outcome o;
  o.pass = run.acc_local() >= 85.0;
  o.detail = "ACC_local " + fmt("%.2f%%", run.acc_local()) + " (ACC_global " + fmt("%.1f%%", run.acc_global()) +
             "), " + fmt("%.1f s", run.seconds);
  return o;
}

Outcome criterion_pose() {
  const auto& run = clean_run();
  const double cell = PipelineConfig{}.cellSize;
  int correct = 0, total = 0, measured = 0;
  double sum = 0.0;
  std::vector<std::string> bad;
  for (const auto& s : run.scenes) {
    int wrong = 0;
    for (bool c : s.metrics.rotIndexCorrect) {
      ++total;
      correct += c;
      wrong += !c;
    }
    if (wrong) bad.push_back(s.name + ":" + std::to_string(wrong));
    for (double t : s.metrics.transErrorM) {
      sum += t;
      ++measured;
    }
  }
  const double mean = measured ? sum / measured : INFINITY;
  Outcome o;
  o.pass = correct == total && mean <= 2.0 * cell;
  o.detail = "rotIndex " + std::to_string(correct) + "/" + std::to_string(total) + ", mean translation " +
             fmt("%.3f m", mean) + " (limit " + fmt("%.2f m", 2.0 * cell) + ")";
  for (const auto& b : bad) o.detail += " [" + b + "]";
  return o;
}

Outcome criterion_refinement() {
  const double eps = PipelineConfig{}.refine().eps;
  int checked = 0, fallback = 0, violations = 0, zeroFeasible = 0;
  double worstRel = 0.0, worstEq = 0.0, worstIneq = -INFINITY;
  std::vector<std::string> bad;
  for (const SuiteRun* run : {&clean_run(), &noisy_run()}) {
    for (const auto& s : run->scenes) {
      if (!s.ok) continue;
      const auto& ref = s.result.refinement;
      if (!ref.refined) {
        ++fallback;
        continue;
      }
      ++checked;
      std::vector<LayoutPath> layouts;
      for (const auto& u : s.result.units) layouts.push_back(u.local.path);
      const PlacedPaths placed = placed_paths(layouts, s.result.placement);
      const int n = static_cast<int>(placed.size());
      const auto joints = chain_joints(n, ref.wrapIncluded);
      bool ok = ref.maxEqualityResidual <= 1e-6 && ref.maxInequalityViolation <= 1e-6;
      worstEq = std::max(worstEq, ref.maxEqualityResidual);
      worstIneq = std::max(worstIneq, ref.maxInequalityViolation);
      // Margins: every inequality already carries eps, so "<= 0" means a
      // margin of at least eps.
      bool zero = true;
      for (const auto& c : ref.constraints) {
        const double v0 = c.evaluate(Vec2::Zero(), Vec2::Zero());
        if (c.equality ? std::abs(v0) > 1e-9 : v0 > 1e-9) zero = false;
      }
      if (zero) {
        ++zeroFeasible;
        ok = ok && ref.objective <= ref.initialObjective + 1e-12;
      }
      if (n > 1) {
        const auto qp = refinement_qp(placed, joints, ref.constraints, 0);
        const auto pg = oracle::projected_gradient(qp, 50000, 1e-15);
        std::vector<Vec2> t(n, Vec2::Zero());
        for (int k = 1; k < n; ++k) t[k] = Vec2(pg.x[2 * (k - 1)], pg.x[2 * (k - 1) + 1]);
        const double oracleObj = joint_objective(placed, joints, t);
        const double rel = std::abs(ref.objective - oracleObj) / std::max(std::abs(oracleObj), 1e-9);
        worstRel = std::max(worstRel, rel);
        ok = ok && rel <= 1e-5;
      }
      if (!ok) {
        ++violations;
        bad.push_back(s.name);
      }
    }
  }
  Outcome o;
  o.pass = violations == 0 && checked > 0;
  o.detail = std::to_string(checked) + " refined scenes (" + std::to_string(fallback) + " fallbacks, " +
             std::to_string(zeroFeasible) + " with t=0 feasible), worst equality " + fmt("%.1e", worstEq) +
             ", worst inequality " + fmt("%.1e", worstIneq) + " (eps " + fmt("%.0e", eps) +
             "), worst oracle rel. gap " + fmt("%.1e", worstRel);
  for (const auto& b : bad) o.detail += " [" + b + "]";
  return o;
}

Outcome criterion_ablation() {
  // Many short, congruent arcs: the rotation and order of each piece is
  // locally ambiguous.
  SuiteSpec suite;
  suite.seed = 1;
  suite.count = 50;
  suite.corners = {4, 6, 8};
  suite.ks = {4, 5};
  const PipelineConfig base;
  struct Variant {
    std::string name;
    PipelineConfig cfg;
    int hits = 0;
  };
  std::vector<Variant> variants{{"full", base}, {"w/o closure", base}, {"w/o complexity", base}, {"w/o boundary", base}};
  variants[1].cfg.wc = 0.0;
  variants[2].cfg.wl = 0.0;
  variants[3].cfg.wb = 0.0;
  for (const auto& spec : expand_suite(suite)) {
    auto scene = generate_scene(spec);
    const auto truth = truth_of(scene, base.wallHeight);
    // Generated fragments come in loop order, which the lexicographic
    // tie-break would otherwise reward regardless of the energy terms.
    std::mt19937 order(static_cast<std::uint32_t>(spec.seed));
    std::shuffle(scene.fragments.begin(), scene.fragments.end(), order);
    const AlignResult local = local_stage(scene, base);
    for (auto& v : variants) {
      if (local.units.empty()) continue;
      AlignResult r = local;
      try {
        place_and_refine(r, v.cfg);
        v.hits += evaluate_scene(estimate_from_result(r), truth).accGlobalHit;
      } catch (const Error&) {
      }
    }
  }
  const double n = suite.count;
  auto acc = [&](int i) { return 100.0 * variants[i].hits / n; };
  Outcome o;
  o.pass = acc(0) >= acc(1) && acc(0) >= acc(2) && acc(0) >= acc(3) && acc(1) <= acc(2) && acc(1) <= acc(3);
  for (std::size_t i = 0; i < variants.size(); ++i) {
    o.detail += (i ? ", " : "ACC_global ") + variants[i].name + " " + fmt("%.0f%%", acc(static_cast<int>(i)));
  }
  return o;
}

Outcome criterion_lambda() {
  const SuiteSpec suite = noisy_suite();
  const std::vector<double> lambdas{0.05, 0.1, 0.2, 0.5};
  const PipelineConfig cfg;
  int monotone = 0, scenes = 0;
  std::vector<std::string> bad;
  for (const auto& spec : expand_suite(suite)) {
    const auto scene = generate_scene(spec);
    std::vector<PreparedFragment> prepared;
    for (const auto& f : scene.fragments) {
      try {
        prepared.push_back(prepare_fragment(f, cfg));
      } catch (const Error&) {
      }
    }
    std::vector<long> segs;
    for (double lambda : lambdas) {
      LocalLayoutConfig lc = cfg.local();
      lc.lambda = lambda;
      long total = 0;
      for (const auto& p : prepared) {
        try {
          total += static_cast<long>(
              estimate_local_layout(p.fragment, lc, p.interiorHint, p.floorSamples).path.segment_count());
        } catch (const Error&) {
        }
      }
      segs.push_back(total);
    }
    ++scenes;
    if (std::is_sorted(segs.rbegin(), segs.rend())) {
      ++monotone;
    } else {
      bad.push_back(spec.name);
    }
  }
  const double frac = 100.0 * monotone / scenes;
  Outcome o;
  o.pass = frac >= 90.0;
  o.detail = std::to_string(monotone) + "/" + std::to_string(scenes) + " scenes non-increasing (" + fmt("%.0f%%", frac) +
             ") over lambda 0.05, 0.1, 0.2, 0.5";
  for (const auto& b : bad) o.detail += " [" + b + "]";
  return o;
}

Outcome criterion_properties() {
  std::vector<std::string> failed;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) failed.push_back(what);
  };
  // Edge weight arithmetic.
  check(std::abs(we_edge_weight(20, 18, 0.1) - 0.2111) < 1e-4, "weight(20,18)");
  check(std::abs(we_edge_weight(10, 10, 0.1) - 0.1) < 1e-12, "weight(10,10)");
  check(std::abs(we_edge_weight(15, 5, 0.1) - 2.1) < 1e-12, "weight(15,5)");

  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> u(-10, 10);
  bool metric = true;
  for (int i = 0; i < 2000; ++i) {
    const Vec2 a(u(rng), u(rng)), b(u(rng), u(rng)), c(u(rng), u(rng));
    metric = metric && manhattan_distance(a, b) >= 0 && manhattan_distance(a, b) == manhattan_distance(b, a) &&
             manhattan_distance(a, a) == 0 &&
             manhattan_distance(a, c) <= manhattan_distance(a, b) + manhattan_distance(b, c) + 1e-12;
  }
  check(metric, "manhattan metric");

  bool convex = true;
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Vec2> pts;
    for (int i = 0; i < 25; ++i) pts.emplace_back(u(rng), u(rng));
    const auto hull = convex_hull(pts);
    for (std::size_t i = 0; i < hull.size(); ++i) {
      convex = convex && oracle::cross(hull[i], hull[(i + 1) % hull.size()], hull[(i + 2) % hull.size()]) > 0;
    }
    for (const auto& p : pts) {
      for (std::size_t i = 0; i < hull.size(); ++i) {
        convex = convex && oracle::cross(hull[i], hull[(i + 1) % hull.size()], p) >= -1e-9;
      }
    }
  }
  check(convex, "hull convexity");

  int disagreements = 0;
  for (int trial = 0; trial < 5000; ++trial) {
    const auto p = oracle::random_rectilinear_path(rng, 1 + static_cast<int>(rng() % 20));
    disagreements += path_self_intersects(p) != oracle::brute_self_intersects(p);
  }
  check(disagreements == 0, "self-intersection vs brute force (" + std::to_string(disagreements) + ")");

  bool bounds = true;
  std::normal_distribution<double> g(0.0, 0.05);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Point3> a, b;
    for (int i = 0; i < 120; ++i) a.emplace_back(std::abs(u(rng)) / 4, g(rng), std::abs(u(rng)) / 10);
    for (int i = 0; i < 90; ++i) b.emplace_back(std::abs(u(rng)) / 4, g(rng) + 0.002 * trial, std::abs(u(rng)) / 10);
    const double s = boundary_mismatch_pair(a, b);
    bounds = bounds && s >= 0.0 && s <= 1.0 && std::abs(s - boundary_mismatch_pair(b, a)) < 1e-12;
  }
  check(bounds, "boundary score bounds");
  std::vector<Point3> few(30, Point3(0, 0, 0)), many(200, Point3(0, 0, 0));
  check(boundary_mismatch_pair(few, many) == 0.5 && boundary_mismatch_pair(many, few) == 0.5, "0.5 fallback");
  check(std::abs(point_mismatch(0.05, 0.05) - 0.6827) < 1e-3, "Phi(1)-Phi(-1)");

  Outcome o;
  o.pass = failed.empty();
  o.detail = o.pass ? "weights, metric, hull, self-intersection, boundary bounds, fallback, Phi(1)-Phi(-1)" : "";
  for (const auto& f : failed) o.detail += " [" + f + "]";
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PLANSTITCH_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome criterion_determinism() {
  const fs::path root = fs::temp_directory_path() / "planstitch_acceptance_determinism";
  fs::remove_all(root);
  SuiteSpec suite = noisy_suite();
  suite.count = 4;
  suite.ks = {3};
  int compared = 0, differing = 0, failedRuns = 0;
  for (const auto& spec : expand_suite(suite)) {
    const fs::path bundle = root / "bundles" / spec.name;
    write_bundle(spec, generate_scene(spec), bundle);
    const fs::path a = root / "a" / spec.name, b = root / "b" / spec.name;
    if (run_cli("align " + bundle.string() + " -o " + a.string()) != 0 ||
        run_cli("align " + bundle.string() + " -o " + b.string()) != 0) {
      ++failedRuns;
      continue;
    }
    for (const auto& e : fs::recursive_directory_iterator(a)) {
      if (!e.is_regular_file() || e.path().extension() != ".json") continue;
      const fs::path other = b / fs::relative(e.path(), a);
      ++compared;
      differing += !fs::exists(other) || slurp(e.path()) != slurp(other);
    }
  }
  fs::remove_all(root);
  Outcome o;
  o.pass = failedRuns == 0 && differing == 0 && compared > 0;
  o.detail = std::to_string(compared) + " JSON files compared, " + std::to_string(differing) + " differ, " +
             std::to_string(failedRuns) + " failed runs";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"dfs/brute oracle equivalence", criterion_oracle},
      {"clean recovery", criterion_clean},
      {"noisy recovery", criterion_noisy},
      {"pose accuracy", criterion_pose},
      {"refinement contract", criterion_refinement},
      {"ablation direction", criterion_ablation},
      {"lambda monotonicity", criterion_lambda},
      {"unit properties", criterion_properties},
      {"align determinism", criterion_determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << id << " " << criteria[i].first << ": " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
