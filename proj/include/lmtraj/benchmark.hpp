#pragma once

#include "lmtraj/types.hpp"

#include <filesystem>
#include <iosfwd>

namespace lmtraj {

struct BenchmarkOptions {
  std::string good_field = "sentence_good";
  std::string bad_field = "sentence_bad";
  std::string pair_field = "pairID";
  // Category of the verb in each member; it is used as both class and condition.
  std::string good_category = "transitive";
  std::string bad_category = "intransitive";
};

struct BenchmarkLoadResult {
  std::vector<PrefixRecord> records;
  std::size_t skipped = 0;
  std::vector<std::string> diagnostics;
};

/// Line-delimited JSON minimal pairs whose members differ in exactly one word,
/// the target verb. Each member becomes a prefix ending at that verb ("The
/// truck hadn't astounded"); the verb's lowercase form is the verb id. Pairs
/// share source_id. Malformed lines and pairs without a single differing word
/// are skipped with a diagnostic.
BenchmarkLoadResult load_benchmark_pairs(std::istream& in, const BenchmarkOptions& options = {});
BenchmarkLoadResult load_benchmark_file(const std::filesystem::path& path, const BenchmarkOptions& options = {});

}  // namespace lmtraj
