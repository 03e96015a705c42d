#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pgate/filters.hpp"
#include "pgate/simulate.hpp"
#include "pgate/stats.hpp"

namespace pgate {

/// Shortest round-trip decimal form; "nan"/"inf"/"-inf" for non-finite values.
std::string fmt(double x);

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// never observe a partial file.
void atomic_write(const std::filesystem::path& path, const std::string& content);

std::string read_text(const std::filesystem::path& path);

/// Comma-separated rows with surrounding whitespace trimmed; blank lines and
/// lines starting with '#' are skipped.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

double parse_double(const std::string& s, const std::string& what);

std::string trajectory_csv(const Trajectory& t);
/// Inverse of trajectory_csv (seed and crossings are not part of the CSV).
Trajectory parse_trajectory_csv(const std::string& text);

std::string trace_csv(const EstimateTrace& tr);

std::string benchmark_csv(std::span<const BenchmarkRow> rows);

}  // namespace pgate
