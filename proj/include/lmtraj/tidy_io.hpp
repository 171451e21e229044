#pragma once

#include "lmtraj/types.hpp"

#include <json.hpp>

#include <filesystem>
#include <string_view>

namespace lmtraj {

// Writes through a sibling temp file and renames it into place.
void write_text_atomic(const std::filesystem::path& path, std::string_view content);
void write_json_atomic(const std::filesystem::path& path, const nlohmann::json& j);

std::string csv_escape(std::string_view field);
std::vector<std::string> split_csv_line(std::string_view line);

// Shortest round-trippable decimal form; NaN becomes "nan".
std::string format_double(double v);

// Tidy long format: run_id,metric,step,value,dispersion (dispersion may be empty).
inline constexpr std::string_view kSeriesHeader = "run_id,metric,step,value,dispersion";
std::string series_csv(const std::vector<TrajectorySeries>& series);
std::vector<TrajectorySeries> parse_series_csv(std::string_view text);

nlohmann::json series_json(const TrajectorySeries& s);

struct SchemaProblem {
  std::filesystem::path file;
  std::string detail;
};

// Checks every *.csv under a directory against the schema implied by its
// header (tidy series or divergence grid) and every *.json for parseability.
std::vector<SchemaProblem> validate_output_dir(const std::filesystem::path& dir);

std::string read_text(const std::filesystem::path& path);

}  // namespace lmtraj
