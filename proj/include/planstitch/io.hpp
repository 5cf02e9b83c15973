#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "planstitch/fragment.hpp"

namespace planstitch {

enum class PointFormat { PlyAscii, PlyBinaryLE, Xyz };

// Reads vertex positions only. PLY format (ascii vs binary) is taken from the
// header; `format` only distinguishes PLY from XYZ.
std::vector<Point3> parse_points(std::string_view data, PointFormat format);
std::vector<Point3> read_points(const std::filesystem::path& path);

// Loads a .ply/.xyz fragment. The id is the file stem. A sibling
// "<stem>.cam" file, if present, is read as the camera pose.
Fragment parse_fragment(const std::filesystem::path& path);

void write_ply(const std::filesystem::path& path, std::span<const Point3> points, bool binary);
std::string format_ply(std::span<const Point3> points, bool binary);

// 16 whitespace-separated numbers, row-major, must be a rigid transform.
Eigen::Matrix4d parse_pose(std::string_view text);
Eigen::Matrix4d read_pose(const std::filesystem::path& path);
std::string format_pose(const Eigen::Matrix4d& m);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace planstitch
