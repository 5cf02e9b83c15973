#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "planstitch/artifacts.hpp"
#include "planstitch/config.hpp"
#include "planstitch/error.hpp"
#include "planstitch/evaluate.hpp"
#include "planstitch/io.hpp"
#include "planstitch/pipeline.hpp"

namespace fs = std::filesystem;
using namespace planstitch;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitEstimation = 2;
constexpr int kExitPlacement = 3;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const EstimationError*>(&e) || dynamic_cast<const FrameEstimationError*>(&e)) {
    return kExitEstimation;
  }
  if (dynamic_cast<const PlacementError*>(&e) || dynamic_cast<const CapacityError*>(&e) ||
      dynamic_cast<const RefinementError*>(&e)) {
    return kExitPlacement;
  }
  return kExitInput;
}

struct ConfigArgs {
  std::string file;
  std::vector<std::string> sets;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("--config", args.file, "key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--set", args.sets, "override one key, as key=value (repeatable)");
}

PipelineConfig load_config(const ConfigArgs& args) {
  PipelineConfig cfg;
  if (!args.file.empty()) cfg = parse_config(read_file(args.file));
  for (const auto& s : args.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw PreconditionError("--set expects key=value, got '" + s + "'");
    set_config_value(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

int cmd_align(const fs::path& inputDir, const ConfigArgs& cargs, const fs::path& outDir) {
  const PipelineConfig cfg = load_config(cargs);
  if (!fs::is_directory(inputDir)) throw PreconditionError("input directory " + inputDir.string() + " not found");
  const auto files = list_fragment_files(inputDir);
  if (files.empty()) throw PreconditionError("no .ply or .xyz fragments in " + inputDir.string());

  std::vector<Fragment> frags;
  std::vector<std::string> loadWarnings;
  for (const auto& f : files) {
    try {
      frags.push_back(parse_fragment(f));
    } catch (const Error& e) {
      loadWarnings.push_back(f.filename().string() + ": " + e.what());
    }
  }
  for (const auto& w : loadWarnings) std::cerr << "warning: " << w << "\n";
  if (frags.empty()) throw PreconditionError("no fragment could be parsed");

  AlignResult res = run_pipeline(std::move(frags), cfg);
  res.warnings.insert(res.warnings.begin(), loadWarnings.begin(), loadWarnings.end());
  for (const auto& f : files) {
    const std::string id = f.stem().string();
    const bool loaded = std::none_of(loadWarnings.begin(), loadWarnings.end(),
                                     [&](const std::string& w) { return w.rfind(f.filename().string() + ":", 0) == 0; });
    if (!loaded) res.failed.push_back(id);
  }
  write_align_artifacts(res, cfg, files.size(), outDir);
  for (std::size_t i = loadWarnings.size(); i < res.warnings.size(); ++i) {
    std::cerr << "warning: " << res.warnings[i] << "\n";
  }
  std::cout << "placed " << res.units.size() << " of " << files.size() << " fragments; layout "
            << (res.layout.closed ? "closed" : "open") << "; wrote " << outDir.string() << "\n";
  return kExitOk;
}

int cmd_local(const fs::path& file, const ConfigArgs& cargs, const fs::path& outDir) {
  const PipelineConfig cfg = load_config(cargs);
  LocalRun run = run_local(parse_fragment(file), cfg);
  const std::string id = run.prepared.fragment.id;
  fs::create_directories(outDir);
  write_file(outDir / (id + ".json"), local_layout_json(id, run.local.path, run.prepared, run.local.cost, {id}));
  write_file(outDir / (id + ".pgm"), format_pgm(run.local.grid));
  std::cout << id << ": " << run.local.path.keypoints.size() << " keypoints, "
            << (run.local.path.closed ? "closed" : "open") << "\n";
  return kExitOk;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    int v = 0;
    const auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || p != item.data() + item.size()) {
      throw PreconditionError("expected a comma-separated integer list, got '" + text + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw PreconditionError("empty integer list");
  return out;
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size()) {
    throw PreconditionError("suite key " + key + ": not a number: '" + text + "'");
  }
  return v;
}

// Suite files use the config syntax: "key = value" lines, '#' comments.
void apply_suite_value(SuiteSpec& s, const std::string& key, const std::string& value) {
  if (key == "seed") {
    s.seed = static_cast<std::uint64_t>(parse_double(key, value));
  } else if (key == "count") {
    s.count = static_cast<int>(parse_double(key, value));
  } else if (key == "corners") {
    s.corners = parse_int_list(value);
  } else if (key == "ks") {
    s.ks = parse_int_list(value);
  } else if (key == "overlap") {
    s.overlapFrac = parse_double(key, value);
  } else if (key == "noise") {
    s.noiseSigma = parse_double(key, value);
  } else if (key == "occlusion") {
    s.occlusionFrac = parse_double(key, value);
  } else if (key == "ppm") {
    s.pointsPerMeter = parse_double(key, value);
  } else if (key == "clutter") {
    s.clutterRate = parse_double(key, value);
  } else if (key == "extent") {
    s.extent = parse_double(key, value);
  } else {
    throw PreconditionError("unknown suite key '" + key + "'");
  }
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void parse_suite_file(SuiteSpec& s, const std::string& text) {
  std::stringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw PreconditionError("suite file: expected key = value, got '" + line + "'");
    apply_suite_value(s, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

int cmd_synth(const SuiteSpec& suite, const fs::path& outDir, bool force) {
  const auto scenes = expand_suite(suite);
  if (fs::exists(outDir) && !fs::is_empty(outDir) && !force) {
    throw PreconditionError(outDir.string() + " is not empty; pass --force to overwrite");
  }
  for (const auto& spec : scenes) {
    const fs::path dir = outDir / spec.name;
    if (fs::exists(dir)) fs::remove_all(dir);
    write_bundle(spec, generate_scene(spec), dir);
  }
  std::cout << "wrote " << scenes.size() << " scenes to " << outDir.string() << "\n";
  return kExitOk;
}

bool is_bundle(const fs::path& dir) { return fs::exists(dir / "manifest.json"); }

int cmd_eval(const fs::path& resultsDir, const fs::path& truthDir, const std::string& outFile) {
  if (!fs::is_directory(resultsDir)) throw PreconditionError("results directory " + resultsDir.string() + " not found");
  if (!fs::is_directory(truthDir)) throw PreconditionError("truth directory " + truthDir.string() + " not found");

  std::vector<std::pair<std::string, std::pair<fs::path, fs::path>>> pairs;
  std::vector<std::string> skipped;
  if (is_bundle(truthDir)) {
    pairs.push_back({truthDir.filename().string(), {resultsDir, truthDir}});
  } else {
    std::map<std::string, fs::path> truths, results;
    for (const auto& e : fs::directory_iterator(truthDir)) {
      if (e.is_directory() && is_bundle(e.path())) truths.emplace(e.path().filename().string(), e.path());
    }
    for (const auto& e : fs::directory_iterator(resultsDir)) {
      if (e.is_directory()) results.emplace(e.path().filename().string(), e.path());
    }
    for (const auto& [id, t] : truths) {
      auto it = results.find(id);
      if (it == results.end()) {
        skipped.push_back(id + " (no result)");
      } else {
        pairs.push_back({id, {it->second, t}});
      }
    }
    for (const auto& [id, r] : results) {
      if (!truths.count(id)) skipped.push_back(id + " (no truth)");
    }
  }
  for (const auto& s : skipped) std::cerr << "skipped: " << s << "\n";
  if (pairs.empty()) {
    std::cerr << "no scene ids matched\n";
    return kExitInput;
  }

  std::vector<MetricsRow> rows;
  for (const auto& [id, dirs] : pairs) {
    rows.push_back({id, evaluate_scene(read_estimate(dirs.first), read_bundle_truth(dirs.second))});
  }
  const std::string csv = metrics_csv(rows);
  if (outFile.empty()) {
    std::cout << csv;
  } else {
    write_file(outFile, csv);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Align partial indoor scans into one Manhattan room layout"};
  app.require_subcommand(1);

  ConfigArgs alignCfg, localCfg;
  std::string alignIn, alignOut = "out";
  auto* align = app.add_subcommand("align", "align every fragment in a directory");
  align->add_option("input", alignIn, "directory of .ply/.xyz fragments")->required();
  align->add_option("-o,--out", alignOut, "output directory");
  add_config_options(align, alignCfg);

  std::string localIn, localOut = "out";
  auto* local = app.add_subcommand("local", "estimate the local layout of one fragment");
  local->add_option("fragment", localIn, ".ply or .xyz file")->required();
  local->add_option("-o,--out", localOut, "output directory");
  add_config_options(local, localCfg);

  SuiteSpec suite;
  std::string suiteFile, synthOut, cornersArg, ksArg;
  std::optional<std::uint64_t> seedArg;
  std::optional<int> countArg;
  std::optional<double> noiseArg, occlusionArg, overlapArg, ppmArg, clutterArg, extentArg;
  bool force = false;
  auto* synth = app.add_subcommand("synth", "generate a synthetic scene suite");
  synth->add_option("-o,--out", synthOut, "output directory")->required();
  synth->add_option("--suite", suiteFile, "suite file (key = value)")->check(CLI::ExistingFile);
  synth->add_option("--seed", seedArg, "base seed; scene i uses seed + i");
  synth->add_option("--count", countArg, "number of scenes");
  synth->add_option("--corners", cornersArg, "corner counts, comma separated");
  synth->add_option("--ks", ksArg, "fragments per scene, comma separated");
  synth->add_option("--noise", noiseArg, "Gaussian noise sigma in meters");
  synth->add_option("--occlusion", occlusionArg, "occluded fraction of each arc");
  synth->add_option("--overlap", overlapArg, "shared arc length between neighbours");
  synth->add_option("--ppm", ppmArg, "wall samples per meter (density is ppm^2)");
  synth->add_option("--clutter", clutterArg, "uniform outliers as a fraction of wall points");
  synth->add_option("--extent", extentArg, "room extent in meters");
  synth->add_flag("--force", force, "overwrite a non-empty output directory");

  std::string evalResults, evalTruth, evalOut;
  auto* eval = app.add_subcommand("eval", "score results against ground truth");
  eval->add_option("results", evalResults, "results directory (one subdirectory per scene)")->required();
  eval->add_option("truth", evalTruth, "truth directory (scene bundles)")->required();
  eval->add_option("-o,--out", evalOut, "CSV file; stdout when omitted");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*align) return cmd_align(alignIn, alignCfg, alignOut);
    if (*local) return cmd_local(localIn, localCfg, localOut);
    if (*synth) {
      if (!suiteFile.empty()) parse_suite_file(suite, read_file(suiteFile));
      if (seedArg) suite.seed = *seedArg;
      if (countArg) suite.count = *countArg;
      if (!cornersArg.empty()) suite.corners = parse_int_list(cornersArg);
      if (!ksArg.empty()) suite.ks = parse_int_list(ksArg);
      if (noiseArg) suite.noiseSigma = *noiseArg;
      if (occlusionArg) suite.occlusionFrac = *occlusionArg;
      if (overlapArg) suite.overlapFrac = *overlapArg;
      if (ppmArg) suite.pointsPerMeter = *ppmArg;
      if (clutterArg) suite.clutterRate = *clutterArg;
      if (extentArg) suite.extent = *extentArg;
      return cmd_synth(suite, synthOut, force);
    }
    if (*eval) return cmd_eval(evalResults, evalTruth, evalOut);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kExitInput;
}
