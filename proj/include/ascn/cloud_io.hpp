#pragma once

#include <filesystem>
#include <string>

#include "ascn/cloud.hpp"

namespace ascn {

enum class CloudFormat { csv, ply_ascii };

// Picks the format from the file extension (.ply -> ply_ascii, else csv).
CloudFormat format_from_path(const std::filesystem::path& path);

// CSV: one `x,y,z[,ring]` row per line, optional header row.
// PLY: ascii 1.0, single vertex element with x/y/z and optional ring.
PointCloud load_cloud(const std::filesystem::path& path, CloudFormat format);
PointCloud load_cloud(const std::filesystem::path& path);

// Coordinates are written in shortest round-trip form, so load(save(c)) == c
// bitwise on coordinates and ring.
void save_cloud(const PointCloud& cloud, const std::filesystem::path& path, CloudFormat format);
void save_cloud(const PointCloud& cloud, const std::filesystem::path& path);

// Parse from in-memory text (same grammar as the file loaders).
PointCloud parse_cloud_csv(const std::string& text);
PointCloud parse_cloud_ply(const std::string& text);

std::string write_cloud_csv(const PointCloud& cloud);
std::string write_cloud_ply(const PointCloud& cloud);

// Dataset directory layout: <dir>/manifest.json plus one cloud file per item.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace ascn
