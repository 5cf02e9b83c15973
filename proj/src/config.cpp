#include "planstitch/config.hpp"

#include <array>
#include <charconv>
#include <functional>
#include <sstream>
#include <vector>

#include "planstitch/error.hpp"

namespace planstitch {

LocalLayoutConfig PipelineConfig::local() const {
  LocalLayoutConfig c;
  c.cellSize = cellSize;
  c.evidenceThreshold = evidenceN;
  c.minWallCells = minWallCells;
  c.maxGapCells = maxGapCells;
  c.lambda = lambda;
  c.closeLoopCells = closeLoopCells;
  c.msfMaxEdgeCells = msfMaxEdgeCells;
  c.useFrustum = useFrustum;
  return c;
}

RansacParams PipelineConfig::ransac() const {
  RansacParams r;
  r.distThresh = ransacDist;
  r.minInliers = ransacMinInliers;
  r.maxPlanes = ransacMaxPlanes;
  r.iterations = ransacIterations;
  return r;
}

PremergeParams PipelineConfig::premergeParams() const {
  PremergeParams p;
  p.cellSize = cellSize;
  p.evidenceThreshold = evidenceN;
  p.inlierThresh = premergeThresh;
  return p;
}

RefineConfig PipelineConfig::refine() const {
  RefineConfig r;
  r.closureGate = closureGate;
  return r;
}

BoundaryParams PipelineConfig::boundary() const {
  BoundaryParams b;
  b.band = boundaryBand;
  b.radius = boundaryRadius;
  return b;
}

PlacementWeights PipelineConfig::weights() const { return {wl, wc, wb}; }

void PipelineConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw PreconditionError(std::string("invalid config: ") + what);
  };
  require(cellSize > 0, "cellSize must be > 0");
  require(evidenceN >= 1, "evidenceN must be >= 1");
  require(lambda >= 0, "lambda must be >= 0");
  require(minWallCells >= 1, "minWallCells must be >= 1");
  require(maxGapCells >= 0, "maxGapCells must be >= 0");
  require(boundaryBand > 0 && boundaryRadius > 0, "boundary lengths must be > 0");
  require(sigma > 0, "sigma must be > 0");
  require(wl >= 0 && wc >= 0 && wb >= 0, "weights must be >= 0");
  require(bruteLimit >= 1 && bruteLimit <= kBruteForceLimit, "bruteLimit must be in 1..6");
  require(closureGate > 0 && snapTol > 0 && wallHeight > 0, "lengths must be > 0");
  require(premergeThresh > 0 && premergeThresh <= 1, "premergeThresh must be in (0, 1]");
  require(minFragmentPoints >= 1, "minFragmentPoints must be >= 1");
  require(ransacDist > 0 && ransacMinInliers >= 3 && ransacMaxPlanes >= 1 && ransacIterations >= 1,
          "RANSAC parameters out of range");
}

namespace {

std::string fmt(double v) {
  std::array<char, 64> buf{};
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), p);
}

template <typename T>
T parse_num(std::string_view key, std::string_view s) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw PreconditionError("invalid value '" + std::string(s) + "' for " + std::string(key));
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw PreconditionError("invalid boolean '" + std::string(s) + "' for " + std::string(key));
}

struct Entry {
  const char* key;
  std::function<void(PipelineConfig&, std::string_view)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

#define PS_DOUBLE(name) \
  Entry { #name, [](PipelineConfig& c, std::string_view v) { c.name = parse_num<double>(#name, v); }, \
          [](const PipelineConfig& c) { return fmt(c.name); } }
#define PS_INT(name) \
  Entry { #name, [](PipelineConfig& c, std::string_view v) { c.name = parse_num<int>(#name, v); }, \
          [](const PipelineConfig& c) { return std::to_string(c.name); } }
#define PS_BOOL(name) \
  Entry { #name, [](PipelineConfig& c, std::string_view v) { c.name = parse_bool(#name, v); }, \
          [](const PipelineConfig& c) { return std::string(c.name ? "true" : "false"); } }

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      PS_DOUBLE(cellSize),
      PS_INT(evidenceN),
      PS_DOUBLE(lambda),
      PS_INT(minWallCells),
      PS_INT(maxGapCells),
      PS_DOUBLE(boundaryBand),
      PS_DOUBLE(boundaryRadius),
      PS_DOUBLE(sigma),
      PS_DOUBLE(wl),
      PS_DOUBLE(wc),
      PS_DOUBLE(wb),
      Entry{"solver",
            [](PipelineConfig& c, std::string_view v) {
              if (v == "dfs") c.solver = Solver::Dfs;
              else if (v == "brute") c.solver = Solver::Brute;
              else throw PreconditionError("solver must be dfs or brute");
            },
            [](const PipelineConfig& c) { return std::string(c.solver == Solver::Dfs ? "dfs" : "brute"); }},
      PS_INT(bruteLimit),
      PS_DOUBLE(closureGate),
      PS_DOUBLE(snapTol),
      PS_DOUBLE(wallHeight),
      PS_BOOL(premerge),
      PS_DOUBLE(premergeThresh),
      Entry{"rngSeed",
            [](PipelineConfig& c, std::string_view v) { c.rngSeed = parse_num<std::uint64_t>("rngSeed", v); },
            [](const PipelineConfig& c) { return std::to_string(c.rngSeed); }},
      PS_INT(minFragmentPoints),
      PS_DOUBLE(ransacDist),
      PS_INT(ransacMinInliers),
      PS_INT(ransacMaxPlanes),
      PS_INT(ransacIterations),
      PS_DOUBLE(closeLoopCells),
      PS_DOUBLE(msfMaxEdgeCells),
      PS_BOOL(useFrustum),
  };
  return table;
}

#undef PS_DOUBLE
#undef PS_INT
#undef PS_BOOL

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

void set_config_value(PipelineConfig& cfg, std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  for (const auto& e : entries()) {
    if (key == e.key) {
      e.set(cfg, value);
      return;
    }
  }
  throw PreconditionError("unknown config key '" + std::string(key) + "'");
}

PipelineConfig parse_config(std::string_view text, PipelineConfig base) {
  std::size_t pos = 0;
  int lineNo = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++lineNo;
    if (auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw PreconditionError("config line " + std::to_string(lineNo) + " is not 'key = value'");
    }
    set_config_value(base, line.substr(0, eq), line.substr(eq + 1));
  }
  base.validate();
  return base;
}

std::string format_config(const PipelineConfig& cfg) {
  std::ostringstream out;
  for (const auto& e : entries()) out << e.key << " = " << e.get(cfg) << '\n';
  return out.str();
}

}  // namespace planstitch
