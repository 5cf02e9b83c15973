#include "planstitch/artifacts.hpp"

#include <json.hpp>

#include <iomanip>
#include <sstream>

#include "planstitch/error.hpp"
#include "planstitch/io.hpp"

namespace planstitch {

using nlohmann::json;

namespace {

json vec2_json(const Vec2& v) { return json::array({v.x(), v.y()}); }

json points_json(const std::vector<Vec2>& pts) {
  json a = json::array();
  for (const auto& p : pts) a.push_back(vec2_json(p));
  return a;
}

template <typename Derived>
json matrix_json(const Eigen::MatrixBase<Derived>& m) {
  json a = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) a.push_back(m(r, c));
  }
  return a;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
}

std::vector<Vec2> read_points(const json& a) {
  std::vector<Vec2> out;
  for (const auto& p : a) out.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
  return out;
}

template <int R, int C>
Eigen::Matrix<double, R, C> read_matrix(const json& a) {
  if (!a.is_array() || a.size() != static_cast<std::size_t>(R * C)) {
    throw ParseError("expected " + std::to_string(R * C) + " matrix entries", 0);
  }
  Eigen::Matrix<double, R, C> m;
  for (int r = 0; r < R; ++r) {
    for (int c = 0; c < C; ++c) m(r, c) = a[r * C + c].get<double>();
  }
  return m;
}

}  // namespace

std::string local_layout_json(const std::string& id, const LayoutPath& path, const PreparedFragment& prep,
                              double cost, const std::vector<std::string>& members) {
  json j;
  j["id"] = id;
  j["keypoints"] = points_json(path.keypoints);
  j["sourceIndex"] = path.sourceIndex();
  j["targetIndex"] = path.targetIndex();
  j["closed"] = path.closed;
  j["gridScale"] = path.gridScale;
  j["upAlign"] = matrix_json(prep.upAlign);
  j["floorOffset"] = prep.floorOffset;
  j["cost"] = cost;
  j["members"] = members.empty() ? std::vector<std::string>{id} : members;
  return dump(j);
}

std::string placement_json(const AlignResult& res, Solver solver) {
  json frags = json::array();
  for (std::size_t f = 0; f < res.units.size(); ++f) {
    frags.push_back({{"id", res.units[f].id},
                     {"rotIndex", res.placement.rotIndexOf[f]},
                     {"slot", res.placement.slotOf[f] + 1},
                     {"translation", vec2_json(res.placement.translationOf[f])}});
  }
  const auto& e = res.placement.energy;
  json j;
  j["fragments"] = frags;
  j["energy"] = {{"E_l", e.layoutComplexity}, {"E_c", e.closure}, {"E_b", e.boundaryMismatch}, {"total", e.total}};
  j["solver"] = solver == Solver::Dfs ? "dfs" : "brute";
  j["leavesEvaluated"] = res.placement.leavesEvaluated;
  j["nodesExpanded"] = res.placement.nodesExpanded;
  return dump(j);
}

std::string transforms_json(const AlignResult& res) {
  json j = json::object();
  for (const auto& [id, m] : res.transforms) j[id] = matrix_json(m);
  return dump(j);
}

std::string layout_json(const GlobalLayout& layout, double wallHeight) {
  json j;
  j["vertices"] = points_json(layout.polygon.vertices);
  j["closed"] = layout.closed;
  j["snapped"] = layout.snapped;
  j["residualGap"] = layout.residualGap;
  j["wallHeight"] = wallHeight;
  return dump(j);
}

std::string report_json(const AlignResult& res, std::size_t inputCount) {
  const auto& r = res.refinement;
  const auto& e = res.placement.energy;
  json j;
  j["inputFragments"] = inputCount;
  j["placedUnits"] = res.units.size();
  j["failed"] = res.failed;
  j["warnings"] = res.warnings;
  j["energy"] = {{"E_l", e.layoutComplexity}, {"E_c", e.closure}, {"E_b", e.boundaryMismatch}, {"total", e.total}};
  j["refinement"] = {{"refined", r.refined},
                     {"objective", r.objective},
                     {"initialObjective", r.initialObjective},
                     {"maxEqualityResidual", r.maxEqualityResidual},
                     {"maxInequalityViolation", r.maxInequalityViolation},
                     {"wrapIncluded", r.wrapIncluded},
                     {"wrapConstrained", r.wrapConstrained},
                     {"droppedNonOverlap", r.droppedNonOverlap},
                     {"constraints", r.constraints.size()},
                     {"conflicting", r.conflicting}};
  j["layout"] = {{"closed", res.layout.closed},
                 {"snapped", res.layout.snapped},
                 {"residualGap", res.layout.residualGap},
                 {"corners", corner_count(res.layout.polygon)}};
  return dump(j);
}

std::string timings_text(const StageTimings& t) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(3);
  out << "prepare_ms " << t.prepareMs << '\n'
      << "premerge_ms " << t.premergeMs << '\n'
      << "local_ms " << t.localMs << '\n'
      << "placement_ms " << t.placementMs << '\n'
      << "refine_ms " << t.refineMs << '\n';
  return out.str();
}

void write_align_artifacts(const AlignResult& res, const PipelineConfig& cfg, std::size_t inputCount,
                           const std::filesystem::path& outDir) {
  std::filesystem::create_directories(outDir / "local");
  for (const auto& u : res.units) {
    std::vector<std::string> members;
    for (const auto& m : u.members) members.push_back(m.id);
    write_file(outDir / "local" / (u.id + ".json"),
               local_layout_json(u.id, u.local.path, u.prepared, u.local.cost, members));
  }
  write_file(outDir / "placement.json", placement_json(res, cfg.solver));
  write_file(outDir / "transforms.json", transforms_json(res));
  write_file(outDir / "layout.json", layout_json(res.layout, cfg.wallHeight));
  write_file(outDir / "walls.obj", format_obj(res.layout, cfg.wallHeight));
  write_file(outDir / "report.json", report_json(res, inputCount));
  write_file(outDir / "timings.txt", timings_text(res.timings));
  write_file(outDir / "config.txt", format_config(cfg));
}

EstimateData estimate_from_result(const AlignResult& res) {
  EstimateData out;
  for (const auto& u : res.units) {
    LocalEstimate le;
    le.keypoints = u.local.path.keypoints;
    le.closed = u.local.path.closed;
    le.upAlign = u.prepared.upAlign;
    le.floorOffset = u.prepared.floorOffset;
    for (const auto& m : u.members) le.members.push_back(m.id);
    out.local.emplace(u.id, std::move(le));
  }
  for (const auto& [id, m] : res.transforms) out.transforms.emplace(id, m);
  out.layout = res.layout.polygon.vertices;
  out.layoutClosed = res.layout.closed;
  return out;
}

std::vector<Vec2> parse_layout_json(std::string_view text, bool* closed) {
  const json j = parse_json(text);
  try {
    if (closed) *closed = j.value("closed", false);
    return read_points(j.at("vertices"));
  } catch (const json::exception& e) {
    throw ParseError(std::string("layout JSON: ") + e.what(), 0);
  }
}

EstimateData read_estimate(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  EstimateData out;
  try {
    if (fs::exists(dir / "layout.json")) out.layout = parse_layout_json(read_file(dir / "layout.json"), &out.layoutClosed);
    if (fs::exists(dir / "transforms.json")) {
      const json j = parse_json(read_file(dir / "transforms.json"));
      for (const auto& [id, m] : j.items()) out.transforms.emplace(id, read_matrix<4, 4>(m));
    }
    if (fs::is_directory(dir / "local")) {
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(dir / "local")) {
        if (e.path().extension() == ".json") files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      for (const auto& p : files) {
        const json j = parse_json(read_file(p));
        LocalEstimate le;
        le.keypoints = read_points(j.at("keypoints"));
        le.closed = j.value("closed", false);
        le.upAlign = read_matrix<3, 3>(j.at("upAlign"));
        le.floorOffset = j.value("floorOffset", 0.0);
        le.members = j.value("members", std::vector<std::string>{});
        out.local.emplace(j.at("id").get<std::string>(), std::move(le));
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("estimate JSON: ") + e.what(), 0);
  }
  return out;
}

}  // namespace planstitch
