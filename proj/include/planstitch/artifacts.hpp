#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "planstitch/config.hpp"
#include "planstitch/pipeline.hpp"

namespace planstitch {

// JSON documents written by the align and local commands. All numbers are
// printed in shortest round-trip form and keys are sorted, so equal results
// give byte-identical files. Field reference: docs/schema.md.
std::string local_layout_json(const std::string& id, const LayoutPath& path, const PreparedFragment& prep,
                              double cost, const std::vector<std::string>& members = {});
std::string placement_json(const AlignResult& res, Solver solver);
std::string transforms_json(const AlignResult& res);
std::string layout_json(const GlobalLayout& layout, double wallHeight);
std::string report_json(const AlignResult& res, std::size_t inputCount);
std::string timings_text(const StageTimings& t);

// Writes local/<id>.json, placement.json, transforms.json, layout.json,
// walls.obj, report.json, timings.txt and config.txt under outDir.
void write_align_artifacts(const AlignResult& res, const PipelineConfig& cfg, std::size_t inputCount,
                           const std::filesystem::path& outDir);

// What evaluation needs from an align run.
struct LocalEstimate {
  std::vector<Vec2> keypoints;  // prepared frame
  bool closed = false;
  Eigen::Matrix3d upAlign = Eigen::Matrix3d::Identity();
  double floorOffset = 0.0;
  std::vector<std::string> members;
};

struct EstimateData {
  std::map<std::string, LocalEstimate> local;  // by unit id
  std::map<std::string, Eigen::Matrix4d> transforms;
  std::vector<Vec2> layout;
  bool layoutClosed = false;
};

EstimateData estimate_from_result(const AlignResult& res);
// Reads an align output directory. Missing files leave the matching fields
// empty; malformed JSON throws ParseError.
EstimateData read_estimate(const std::filesystem::path& dir);

std::vector<Vec2> parse_layout_json(std::string_view text, bool* closed = nullptr);

}  // namespace planstitch
