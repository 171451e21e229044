#pragma once

#include "lmtraj/divergence.hpp"
#include "lmtraj/stats.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <set>

namespace lmtraj {

using TokenId = std::int32_t;
using CountVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

// Where the unidirectional context window starts.
enum class WindowAnchor {
  AfterVerb,         // window covers the tokens following the verb
  AfterPreposition,  // window covers the tokens following the frame preposition
};

struct BaselineConfig {
  std::size_t window = 10;
  double smoothing_k = 0.5;
  std::set<TokenId> stopword_ids;
  std::vector<std::uint64_t> snapshot_schedule;
  WindowAnchor anchor = WindowAnchor::AfterPreposition;

  void check() const;
};

// Geometric (x2) thresholds ending at max_tokens, smallest first.
std::vector<std::uint64_t> geometric_schedule(std::uint64_t max_tokens, std::size_t count);

// A verb occurrence inside the target prepositional frame.
struct FrameMatch {
  std::string verb_id;
  std::uint64_t verb_pos = 0;
  std::uint64_t prep_pos = 0;
};

struct VerbCounts {
  std::string verb_id;
  CountVector counts;
};

struct CountSnapshot {
  std::uint64_t tokens_seen = 0;
  std::vector<VerbCounts> verbs;
};

/// Streams the corpus in shards and emits cumulative per-verb window counts at
/// each schedule threshold.
///
/// A snapshot at threshold T equals the counts obtained from the corpus prefix
/// of the first T tokens: a window token at position p contributes only when
/// p < T. Thresholds below the stream length each yield a snapshot; the first
/// threshold at or past the end yields a final snapshot with tokens_seen equal
/// to the stream length. Stop-word tokens occupy window slots but are not
/// counted; windows of different matches may overlap and are counted
/// independently. Shards are counted independently and merged by addition, so
/// the result does not depend on the shard count.
///
/// Verbs are reported in the order of known_verbs, followed by any other verb
/// in order of first appearance in the match index.
std::vector<CountSnapshot> stream_count(std::span<const TokenId> tokens, const std::vector<FrameMatch>& matches,
                                        int vocab_size, const BaselineConfig& config, std::size_t shards = 1,
                                        const std::vector<std::string>& known_verbs = {});

// (counts + k) / (sum + k V)
VocabDistribution smooth_normalize(const CountVector& counts, double k);

struct BaselineSnapshotResult {
  std::uint64_t tokens_seen = 0;
  DivergenceGrid grid;
  Summary within;
  Summary between;
  std::map<std::string, Summary> within_by_class;
};

struct BaselineCurves {
  std::vector<BaselineSnapshotResult> snapshots;
  // within/between means with 95% CI half-width as dispersion, indexed by
  // tokens_seen; plus one within-class series per class.
  std::vector<TrajectorySeries> series;
};

// Pairwise divergences of the smoothed vectors at every snapshot. class_of maps
// verb ids to classes; verbs outside class_a/class_b are ignored.
BaselineCurves baseline_divergence_curves(const std::vector<CountSnapshot>& snapshots,
                                          const std::map<std::string, std::string>& class_of,
                                          const std::string& class_a, const std::string& class_b, double k,
                                          const std::string& run_id = "baseline");

// Corpus files: token ids as little-endian int32, and a TSV match index
// (verb_id, verb_pos, prep_pos) with an optional header line.
std::vector<TokenId> read_token_file(const std::filesystem::path& path);
void write_token_file(const std::filesystem::path& path, std::span<const TokenId> tokens);
std::vector<FrameMatch> read_match_index(const std::filesystem::path& path);
void write_match_index(const std::filesystem::path& path, const std::vector<FrameMatch>& matches);

// Bundled default stop-word ids are tokenizer specific; this reads one id per
// line (comments start with '#').
std::set<TokenId> read_stopword_ids(const std::filesystem::path& path);

}  // namespace lmtraj
