#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "planstitch/fragment.hpp"

namespace planstitch {

struct PremergeParams {
  double cellSize = 0.08;
  int evidenceThreshold = 20;
  double inlierThresh = 0.60;
  int candidateOffsets = 8;  // top voted offsets verified per rotation
};

struct OverlapMatch {
  double score = 0.0;  // min of both fragments' matched evidence fractions
  int rotIndex = 1;    // applied to the second fragment
  Vec2 offset = Vec2::Zero();  // meters, applied after rotation
};

// Coarse alignment of two up-aligned fragments by voting over evidence-cell
// offsets for each relative quarter turn.
OverlapMatch best_overlap(const Fragment& a, const Fragment& b, const PremergeParams& params = {});

struct PremergeMember {
  std::string id;
  // Maps the member's own (prepared) frame into the merged fragment's frame.
  Eigen::Matrix4d toMerged = Eigen::Matrix4d::Identity();
};

struct PremergeResult {
  std::vector<Fragment> fragments;
  std::vector<std::vector<PremergeMember>> members;  // parallel to fragments
};

// Repeatedly merges the first pair (in input order) whose best overlap
// reaches inlierThresh until no pair does. The first fragment of a pair
// keeps its frame.
PremergeResult premerge_overlapping(std::vector<Fragment> frags, const PremergeParams& params = {});

}  // namespace planstitch
