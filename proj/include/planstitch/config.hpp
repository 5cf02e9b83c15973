#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "planstitch/local_layout.hpp"
#include "planstitch/placement.hpp"
#include "planstitch/planes.hpp"
#include "planstitch/premerge.hpp"
#include "planstitch/refine.hpp"

namespace planstitch {

struct PipelineConfig {
  double cellSize = 0.08;
  int evidenceN = 20;
  double lambda = 0.1;
  int minWallCells = 3;
  int maxGapCells = 10;
  double boundaryBand = 0.10;
  double boundaryRadius = 1.0;
  double sigma = 0.05;
  double wl = 1.0;
  double wc = 1.0;
  double wb = 1.0;
  Solver solver = Solver::Dfs;
  int bruteLimit = kBruteForceLimit;
  double closureGate = 1.0;
  double snapTol = 0.3;
  double wallHeight = 2.6;
  bool premerge = false;
  double premergeThresh = 0.60;
  std::uint64_t rngSeed = 1;
  int minFragmentPoints = 1000;
  double ransacDist = 0.02;
  int ransacMinInliers = 500;
  int ransacMaxPlanes = 20;
  int ransacIterations = 1000;
  double closeLoopCells = 4.0;
  double msfMaxEdgeCells = 20.0;
  bool useFrustum = true;

  LocalLayoutConfig local() const;
  RansacParams ransac() const;
  PremergeParams premergeParams() const;
  RefineConfig refine() const;
  BoundaryParams boundary() const;
  PlacementWeights weights() const;

  // Throws PreconditionError on violated invariants.
  void validate() const;
};

// Applies one "key = value" assignment; throws PreconditionError for unknown
// keys or unparsable values.
void set_config_value(PipelineConfig& cfg, std::string_view key, std::string_view value);

// Flat key-value text: one "key = value" per line, '#' starts a comment.
PipelineConfig parse_config(std::string_view text, PipelineConfig base = {});
std::string format_config(const PipelineConfig& cfg);

}  // namespace planstitch
