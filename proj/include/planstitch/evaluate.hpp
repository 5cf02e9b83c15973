#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "planstitch/artifacts.hpp"
#include "planstitch/synth.hpp"

namespace planstitch {

// One generated scene of a suite.
struct SceneSpec {
  std::string name;
  std::uint64_t seed = 1;
  int corners = 4;
  double extent = 8.0;
  FragmentParams fragments;
};

struct SuiteSpec {
  std::uint64_t seed = 1;
  int count = 1;
  std::vector<int> corners = {4};
  std::vector<int> ks = {2};
  double overlapFrac = 0.0;
  double noiseSigma = 0.0;
  double occlusionFrac = 0.0;
  double pointsPerMeter = 20.0;
  double clutterRate = 0.0;
  double extent = 8.0;
};

// Scene i uses seed + i, corners[i % |corners|] and ks[(i / |corners|) % |ks|].
std::vector<SceneSpec> expand_suite(const SuiteSpec& suite);
GroundTruthScene generate_scene(const SceneSpec& spec);

// Ground truth as stored in a bundle.
struct SceneTruth {
  RectilinearPolygon layout;
  std::vector<std::string> ids;
  std::vector<Eigen::Matrix4d> poses;
  std::vector<std::vector<Vec2>> arcs;
  std::vector<bool> arcClosed;
  double diag = 0.0;
  double wallHeight = 2.6;
};

SceneTruth truth_of(const GroundTruthScene& scene, double wallHeight = 2.6);

// Writes layout.json, fragN.ply (binary), fragN.pose and manifest.json.
void write_bundle(const SceneSpec& spec, const GroundTruthScene& scene, const std::filesystem::path& dir);
SceneTruth read_bundle_truth(const std::filesystem::path& dir);

// .ply and .xyz files of a directory, sorted by file name.
std::vector<std::filesystem::path> list_fragment_files(const std::filesystem::path& dir);

struct SceneMetrics {
  int accLocalHits = 0;
  int accLocalTotal = 0;
  bool accGlobalHit = false;
  double globalKeypointError = 0.0;  // meters
  std::vector<double> rotErrorDeg;    // per truth fragment
  std::vector<double> transErrorPct;
  std::vector<double> transErrorM;
  std::vector<bool> rotIndexCorrect;  // in-plane quarter turn recovered
  double layoutErrAvgPct = 100.0;
  double layoutErrMaxPct = 100.0;
  bool layoutFlagged = true;
};

// Local keypoints and the global layout are mapped into the truth world
// using the truth pose and the estimated pose gauge.
SceneMetrics evaluate_scene(const EstimateData& est, const SceneTruth& truth);

// Local keypoints of one estimate in truth world (y, z); empty when the
// unit or truth pose is missing.
std::vector<Vec2> local_keypoints_in_world(const LocalEstimate& le, const Eigen::Matrix4d& truePose);

struct MetricsRow {
  std::string scene;
  SceneMetrics metrics;
};

// One row per scene plus an aggregate row named "ALL".
std::string metrics_csv(const std::vector<MetricsRow>& rows);

}  // namespace planstitch
