#pragma once

#include "lmtraj/exemplar_baseline.hpp"
#include "lmtraj/lexicon.hpp"
#include "lmtraj/metrics.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>

namespace lmtraj {

struct RunSpec {
  std::string run_id;  // overrides the dump's own run_id when set
  std::filesystem::path dump;
};

struct ClassPairSpec {
  std::string class_a;
  std::string class_b;
  std::optional<std::string> condition;
};

// A two-category class metric. With by_condition, both categories hold the
// verbs of `classes` (all verbs when empty) under conditions first and second;
// otherwise the categories are the verbs of classes first and second.
struct ContrastSpec {
  std::string name;
  bool by_condition = true;
  std::vector<std::string> classes;
  std::string first;
  std::string second;
};

// Minimal-pair item curves: pooled, and one per class listed.
struct MinimalPairSpec {
  ConditionPair conditions;
  std::vector<std::string> classes;
};

struct BreakpointSpec {
  std::string class_a;
  std::string class_b;
  ConditionPair conditions;
};

struct NounSpec {
  std::vector<NounTarget> targets;
  std::vector<std::string> classes;
  std::optional<std::string> condition;
  std::size_t window_steps = 0;
};

struct BaselineSpec {
  std::filesystem::path tokens;
  std::filesystem::path matches;
  std::optional<std::filesystem::path> stopwords;
  int vocab_size = 0;
  std::string class_a;
  std::string class_b;
  std::map<std::string, std::string> class_of;  // falls back to the lexicon
  BaselineConfig config;
  std::size_t snapshots = 12;     // geometric schedule length when no explicit schedule
  std::uint64_t max_tokens = 0;   // 0 means the corpus length
  std::size_t shards = 1;
  bool export_grids = true;
};

struct RunConfig {
  std::vector<RunSpec> runs;
  std::optional<std::filesystem::path> lexicon;
  double alpha = kDefaultAlpha;
  double breakpoint_delta = kDefaultBreakpointDelta;
  std::size_t breakpoint_window = kDefaultBaselineWindow;
  std::vector<ClassPairSpec> class_pairs;
  std::vector<Step> grid_steps;
  std::vector<ContrastSpec> contrasts;
  std::vector<MinimalPairSpec> minimal_pairs;
  std::vector<BreakpointSpec> breakpoints;
  std::optional<NounSpec> nouns;
  std::optional<BaselineSpec> baseline;
  std::filesystem::path output_dir = "out";

  // Relative paths resolve against base_dir (the config file's directory).
  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static RunConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  // Throws InputError naming the first missing path or bad parameter.
  void check() const;
};

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

// Prefixes whose verb is missing from the lexicon or filed under another
// class. Prefixes of classes the lexicon does not know are not checked.
std::vector<std::string> lexicon_mismatches(const DumpManifest& manifest, const VerbLexicon& lexicon);

/// Stage runners. Each writes its own files under config.output_dir and
/// returns their paths relative to it:
///   analyze      series.csv, grids/<run>/<pair>/step_<n>.{csv,json}
///   nouns        nouns.json
///   breakpoints  breakpoints.json, breakpoint_series.csv
///   baseline     baseline/series.csv, baseline/summary.json, baseline/grids/
std::vector<std::string> run_analyze(const RunConfig& config);
std::vector<std::string> run_nouns(const RunConfig& config);
std::vector<std::string> run_breakpoints(const RunConfig& config);
std::vector<std::string> run_baseline(const RunConfig& config);

// manifest.json: config hash, input checksums and output checksums.
void write_run_manifest(const RunConfig& config, const std::vector<std::string>& outputs);

// Every configured stage followed by the manifest.
std::vector<std::string> run_pipeline(const RunConfig& config);

// Per-series summary of an output directory (range, onset, breakpoint).
nlohmann::json report(const std::filesystem::path& output_dir, double delta = kDefaultBreakpointDelta,
                      std::size_t window = kDefaultBaselineWindow);

}  // namespace lmtraj
