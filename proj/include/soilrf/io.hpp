#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "soilrf/types.hpp"

namespace soilrf::io {

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double value);

/// Strict double parser; rejects trailing junk, NaN and infinities.
double parse_double(std::string_view text);
int parse_int(std::string_view text);

std::vector<std::string_view> split(std::string_view line, char sep);

// Line-oriented schemas. Saving then loading is lossless and save(load(x))
// is byte-identical for files written by this module.
SweepRecord load_sweep(const std::filesystem::path& path);
void save_sweep(const SweepRecord& record, const std::filesystem::path& path);

MetricHeatmap load_heatmap(const std::filesystem::path& path);
void save_heatmap(const MetricHeatmap& map, const std::filesystem::path& path);

TuberAnnotation load_annotation(const std::filesystem::path& path);
void save_annotation(const TuberAnnotation& ann, const std::filesystem::path& path);

std::vector<HarvestOutcome> load_harvest(const std::filesystem::path& path);
void save_harvest(const std::vector<HarvestOutcome>& outcomes,
                  const std::filesystem::path& path);

OccupancyMap load_occupancy(const std::filesystem::path& path);
void save_occupancy(const OccupancyMap& map, const std::filesystem::path& path);

/// Writes `key=value` lines in the given order (command config echoes).
void write_kv_file(const std::filesystem::path& path,
                   const std::vector<std::pair<std::string, std::string>>& entries);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace soilrf::io
