#pragma once

#include "lmtraj/types.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>

namespace lmtraj {

// Rows on disk may deviate from unit mass by this much (single precision).
inline constexpr double kRowSumTolerance = 1e-4;

struct DumpManifest {
  int vocab_size = 0;
  CheckpointIndex index;
  std::vector<PrefixRecord> prefixes;
  // Free-form provenance (parser, tokenizer, model identifiers, token lookup).
  nlohmann::json metadata = nlohmann::json::object();
};

void to_json(nlohmann::json& j, const PrefixRecord& r);
void from_json(const nlohmann::json& j, PrefixRecord& r);

DumpManifest read_manifest(const std::filesystem::path& dump_dir);
void write_manifest(const std::filesystem::path& dump_dir, const DumpManifest& manifest);

std::filesystem::path step_file(const std::filesystem::path& dump_dir, Step step);

// Raw little-endian float32 payload, row-major.
StepMatrix read_step_matrix(const std::filesystem::path& file, Eigen::Index rows, Eigen::Index cols);
void write_step_matrix(const std::filesystem::path& file, const StepMatrix& m);

// Writes manifest.json plus one step_<n>.f32 per step.
void write_dump(const std::filesystem::path& dump_dir, const DumpManifest& manifest,
                const std::function<StepMatrix(Step)>& matrix_for_step);

struct ValidationIssue {
  enum class Kind { RowSum, NegativeEntry, NonFinite, Shape, MissingFile, Manifest };
  Kind kind;
  std::optional<Step> step;
  std::string prefix_id;
  std::string detail;
};

std::string to_string(ValidationIssue::Kind kind);

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool empty() const { return issues.empty(); }
  // Missing step files or shape mismatches make the dump unloadable.
  bool fatal() const;
  nlohmann::json to_json() const;
};

// Throws DumpError when the manifest itself cannot be read.
ValidationReport validate_dump(const std::filesystem::path& dump_dir);

// Read-only view over a dump directory. Step matrices are loaded lazily and
// cached; all accessors are safe to call concurrently.
class DistributionDump {
 public:
  explicit DistributionDump(std::filesystem::path dump_dir, std::size_t cache_steps = 16);
  DistributionDump(DumpManifest manifest, std::map<Step, StepMatrix> in_memory);

  const DumpManifest& manifest() const { return manifest_; }
  const CheckpointIndex& index() const { return manifest_.index; }
  const std::vector<Step>& steps() const { return manifest_.index.steps; }
  const std::vector<PrefixRecord>& prefixes() const { return manifest_.prefixes; }
  const std::string& run_id() const { return manifest_.index.run_id; }
  int vocab_size() const { return manifest_.vocab_size; }
  const std::filesystem::path& path() const { return dir_; }

  std::shared_ptr<const StepMatrix> step_matrix(Step step) const;

  // Row for one prefix, promoted to double and renormalized to unit mass.
  VocabDistribution distribution(Step step, std::size_t prefix_index) const;

  // Prefix rows for a verb, optionally restricted to one condition.
  std::vector<std::size_t> prefix_indices(const std::string& verb_id,
                                          const std::optional<std::string>& condition) const;

  // Verb ids in prefix-table order of first appearance, optionally for one class.
  std::vector<std::string> verbs(const std::optional<std::string>& class_id = std::nullopt) const;
  std::string class_of(const std::string& verb_id) const;

 private:
  std::filesystem::path dir_;
  DumpManifest manifest_;
  std::size_t cache_steps_;
  mutable std::mutex mutex_;
  mutable std::map<Step, std::shared_ptr<const StepMatrix>> cache_;
  mutable std::vector<Step> lru_;
  bool in_memory_ = false;
};

// Promotes a stored row to working precision; throws DumpError if the row is
// not a distribution within kRowSumTolerance.
VocabDistribution promote_row(const Eigen::Ref<const Eigen::RowVectorXf>& row);

// Elementwise arithmetic mean of equally weighted distributions, renormalized
// so the result sums to one.
template <typename Range>
VocabDistribution mean_distribution(const Range& dists) {
  auto it = std::begin(dists);
  const auto end = std::end(dists);
  if (it == end) throw std::invalid_argument("mean_distribution: empty list");
  const Eigen::Index n = it->size();
  VocabDistribution acc = VocabDistribution::Zero(n);
  std::size_t count = 0;
  for (; it != end; ++it) {
    if (it->size() != n) {
      throw std::invalid_argument("mean_distribution: length mismatch (" + std::to_string(it->size()) +
                                  " vs " + std::to_string(n) + ")");
    }
    acc += it->template cast<double>();
    ++count;
  }
  acc /= static_cast<double>(count);
  const double total = acc.sum();
  if (total > 0.0) acc /= total;
  return acc;
}

// P_v: mean next-token distribution over the prefixes of one verb at a step.
VocabDistribution verb_profile(const DistributionDump& dump, const std::string& verb_id, Step step,
                               const std::optional<std::string>& condition = std::nullopt);

VocabDistribution label_profile(const DistributionDump& dump, const Label& label, Step step);

}  // namespace lmtraj
