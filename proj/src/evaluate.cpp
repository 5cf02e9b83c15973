#include "planstitch/evaluate.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <optional>
#include <sstream>

#include "planstitch/error.hpp"
#include "planstitch/io.hpp"
#include "planstitch/metrics.hpp"

namespace planstitch {

using nlohmann::json;

std::vector<SceneSpec> expand_suite(const SuiteSpec& suite) {
  if (suite.count < 0) throw PreconditionError("suite count must be >= 0");
  if (suite.corners.empty() || suite.ks.empty()) throw PreconditionError("suite needs corner counts and k values");
  for (int c : suite.corners) {
    if (c < 4 || c % 2 != 0) throw PreconditionError("corner count must be even and >= 4, got " + std::to_string(c));
  }
  for (int k : suite.ks) {
    if (k < 1) throw PreconditionError("fragment count must be >= 1");
  }
  std::vector<SceneSpec> out;
  const std::size_t nc = suite.corners.size();
  for (int i = 0; i < suite.count; ++i) {
    SceneSpec s;
    char name[32];
    std::snprintf(name, sizeof name, "scene_%03d", i);
    s.name = name;
    s.seed = suite.seed + static_cast<std::uint64_t>(i);
    s.corners = suite.corners[static_cast<std::size_t>(i) % nc];
    s.extent = suite.extent;
    s.fragments.k = suite.ks[(static_cast<std::size_t>(i) / nc) % suite.ks.size()];
    s.fragments.overlapFrac = suite.overlapFrac;
    s.fragments.noiseSigma = suite.noiseSigma;
    s.fragments.occlusionFrac = suite.occlusionFrac;
    s.fragments.pointsPerMeter = suite.pointsPerMeter;
    s.fragments.clutterRate = suite.clutterRate;
    s.fragments.seed = s.seed;
    out.push_back(s);
  }
  return out;
}

GroundTruthScene generate_scene(const SceneSpec& spec) {
  return fragment_scene(gen_scene(spec.seed, spec.corners, spec.extent), spec.fragments);
}

SceneTruth truth_of(const GroundTruthScene& scene, double wallHeight) {
  SceneTruth t;
  t.layout = scene.layout;
  for (const auto& f : scene.fragments) t.ids.push_back(f.id);
  t.poses = scene.truePoses;
  t.arcs = scene.arcs;
  t.arcClosed = scene.arcClosed;
  t.diag = scene.diag;
  t.wallHeight = wallHeight;
  return t;
}

namespace {

json points_json(const std::vector<Vec2>& pts) {
  json a = json::array();
  for (const auto& p : pts) a.push_back({p.x(), p.y()});
  return a;
}

std::vector<Vec2> read_points(const json& a) {
  std::vector<Vec2> out;
  for (const auto& p : a) out.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
  return out;
}

}  // namespace

void write_bundle(const SceneSpec& spec, const GroundTruthScene& scene, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& p = spec.fragments;
  json layout;
  layout["vertices"] = points_json(scene.layout.vertices);
  layout["closed"] = true;
  layout["wallHeight"] = p.wallHeight;
  write_file(dir / "layout.json", layout.dump(2) + "\n");

  json m;
  m["name"] = spec.name;
  m["seed"] = spec.seed;
  m["corners"] = spec.corners;
  m["extent"] = spec.extent;
  m["parameters"] = {{"k", p.k},
                     {"overlapFrac", p.overlapFrac},
                     {"noiseSigma", p.noiseSigma},
                     {"occlusionFrac", p.occlusionFrac},
                     {"pointsPerMeter", p.pointsPerMeter},
                     {"wallHeight", p.wallHeight},
                     {"floorDensity", p.floorDensity},
                     {"floorReach", p.floorReach},
                     {"clutterRate", p.clutterRate},
                     {"maxTiltDeg", p.maxTiltDeg},
                     {"seed", p.seed}};
  json frags = json::array();
  for (std::size_t i = 0; i < scene.fragments.size(); ++i) {
    const auto& f = scene.fragments[i];
    write_ply(dir / (f.id + ".ply"), f.points, true);
    write_file(dir / (f.id + ".pose"), format_pose(scene.truePoses[i]));
    frags.push_back({{"id", f.id}, {"arc", points_json(scene.arcs[i])}, {"arcClosed", static_cast<bool>(scene.arcClosed[i])}});
  }
  m["fragments"] = frags;
  m["diag"] = scene.diag;
  write_file(dir / "manifest.json", m.dump(2) + "\n");
}

SceneTruth read_bundle_truth(const std::filesystem::path& dir) {
  SceneTruth t;
  try {
    const json m = json::parse(read_file(dir / "manifest.json"));
    const json l = json::parse(read_file(dir / "layout.json"));
    t.layout.vertices = read_points(l.at("vertices"));
    t.diag = m.at("diag").get<double>();
    t.wallHeight = m.at("parameters").value("wallHeight", 2.6);
    for (const auto& f : m.at("fragments")) {
      const std::string id = f.at("id").get<std::string>();
      t.ids.push_back(id);
      t.arcs.push_back(read_points(f.at("arc")));
      t.arcClosed.push_back(f.value("arcClosed", false));
      t.poses.push_back(read_pose(dir / (id + ".pose")));
    }
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("bundle JSON: ") + e.what(), e.byte);
  } catch (const json::exception& e) {
    throw ParseError(std::string("bundle JSON: ") + e.what(), 0);
  }
  return t;
}

std::vector<std::filesystem::path> list_fragment_files(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto ext = e.path().extension();
    if (ext == ".ply" || ext == ".xyz") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.filename() < b.filename(); });
  return out;
}

std::vector<Vec2> local_keypoints_in_world(const LocalEstimate& le, const Eigen::Matrix4d& truePose) {
  std::vector<Vec2> out;
  std::size_t n = le.keypoints.size();
  if (le.closed && n > 1 && (le.keypoints.front() - le.keypoints.back()).norm() < 1e-9) --n;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d prepared(0.0, le.keypoints[i].x(), le.keypoints[i].y());
    const Eigen::Vector3d original = le.upAlign.transpose() * (prepared - Eigen::Vector3d(le.floorOffset, 0, 0));
    const Eigen::Vector3d w = truePose.topLeftCorner<3, 3>() * original + truePose.topRightCorner<3, 1>();
    out.emplace_back(w.y(), w.z());
  }
  return out;
}

SceneMetrics evaluate_scene(const EstimateData& est, const SceneTruth& truth) {
  SceneMetrics out;
  const std::size_t n = truth.ids.size();
  std::vector<std::optional<Eigen::Matrix4d>> poses(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = est.transforms.find(truth.ids[i]);
    if (it != est.transforms.end()) poses[i] = it->second;
  }
  const auto pe = metric_pose_errors(poses, truth.poses, truth.diag, 0);
  for (const auto& e : pe) {
    out.rotErrorDeg.push_back(e.rotErrorDeg);
    out.transErrorPct.push_back(e.transErrorPct);
    out.transErrorM.push_back(e.transErrorPct * truth.diag / 100.0);
    out.rotIndexCorrect.push_back(e.rotErrorDeg < 45.0);
  }

  out.accLocalTotal = static_cast<int>(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = est.local.find(truth.ids[i]);
    if (it == est.local.end() || it->second.members.size() > 1) continue;
    const auto kp = local_keypoints_in_world(it->second, truth.poses[i]);
    if (kp.empty()) continue;
    if (metric_layout_correct(kp, truth.arcs[i], truth.diag).correct) ++out.accLocalHits;
  }

  std::optional<Eigen::Matrix4d> gauge;
  for (std::size_t i = 0; i < n && !gauge; ++i) {
    if (poses[i]) gauge = truth.poses[i] * poses[i]->inverse();
  }
  if (!gauge || est.layout.empty()) return out;
  RectilinearPolygon mapped;
  for (const auto& v : est.layout) {
    const Eigen::Vector4d w = *gauge * Eigen::Vector4d(0.0, v.x(), v.y(), 1.0);
    mapped.vertices.emplace_back(w.y(), w.z());
  }
  const auto g = metric_layout_correct(mapped.vertices, truth.layout.vertices, truth.diag);
  out.accGlobalHit = g.correct;
  out.globalKeypointError = g.meanError;
  const auto le = metric_layout_error(mapped, est.layoutClosed, truth.layout, truth.wallHeight, 100.0, truth.diag);
  out.layoutErrAvgPct = le.avgPct;
  out.layoutErrMaxPct = le.maxPct;
  out.layoutFlagged = le.flagged;
  return out;
}

namespace {

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(6);
  out << "scene,ACC_local(%),ACC_global(%),local_hits,local_total,rot_err_deg,trans_err_pct,trans_err_m,"
         "rotindex_correct,layout_err_avg(%),layout_err_max(%),layout_flagged\n";
  auto row = [&out](const std::string& name, int hits, int total, double accGlobal, const std::vector<double>& rot,
                    const std::vector<double>& transPct, const std::vector<double>& transM, int rotOk, int rotTotal,
                    double lavg, double lmax, int flagged) {
    out << name << ',' << (total ? 100.0 * hits / total : 0.0) << ',' << accGlobal << ',' << hits << ',' << total
        << ',' << mean_of(rot) << ',' << mean_of(transPct) << ',' << mean_of(transM) << ',' << rotOk << '/'
        << rotTotal << ',' << lavg << ',' << lmax << ',' << flagged << '\n';
  };
  int hits = 0, total = 0, globalHits = 0, rotOk = 0, rotTotal = 0, flagged = 0;
  std::vector<double> rot, transPct, transM, lavg, lmax;
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    const int ok = static_cast<int>(std::count(m.rotIndexCorrect.begin(), m.rotIndexCorrect.end(), true));
    row(r.scene, m.accLocalHits, m.accLocalTotal, m.accGlobalHit ? 100.0 : 0.0, m.rotErrorDeg, m.transErrorPct,
        m.transErrorM, ok, static_cast<int>(m.rotIndexCorrect.size()), m.layoutErrAvgPct, m.layoutErrMaxPct,
        m.layoutFlagged ? 1 : 0);
    hits += m.accLocalHits;
    total += m.accLocalTotal;
    globalHits += m.accGlobalHit ? 1 : 0;
    rotOk += ok;
    rotTotal += static_cast<int>(m.rotIndexCorrect.size());
    flagged += m.layoutFlagged ? 1 : 0;
    rot.insert(rot.end(), m.rotErrorDeg.begin(), m.rotErrorDeg.end());
    transPct.insert(transPct.end(), m.transErrorPct.begin(), m.transErrorPct.end());
    transM.insert(transM.end(), m.transErrorM.begin(), m.transErrorM.end());
    lavg.push_back(m.layoutErrAvgPct);
    lmax.push_back(m.layoutErrMaxPct);
  }
  const double accGlobal = rows.empty() ? 0.0 : 100.0 * globalHits / static_cast<double>(rows.size());
  const double maxOfMax = lmax.empty() ? 0.0 : *std::max_element(lmax.begin(), lmax.end());
  row("ALL", hits, total, accGlobal, rot, transPct, transM, rotOk, rotTotal, mean_of(lavg), maxOfMax, flagged);
  return out.str();
}

}  // namespace planstitch
