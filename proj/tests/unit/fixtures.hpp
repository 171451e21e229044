#pragma once

#include "lmtraj/dist_store.hpp"

#include <filesystem>
#include <functional>
#include <random>

namespace lmtraj::test {

// Row for prefix i at checkpoint t, as unnormalised non-negative weights.
using RowFn = std::function<std::vector<double>(std::size_t t, std::size_t i)>;

inline DistributionDump make_dump(int vocab, const std::vector<Step>& steps, const std::vector<PrefixRecord>& prefixes,
                                  const RowFn& row, const std::string& run_id = "test") {
  DumpManifest m;
  m.vocab_size = vocab;
  m.index = {run_id, steps};
  m.prefixes = prefixes;
  std::map<Step, StepMatrix> mats;
  for (std::size_t t = 0; t < steps.size(); ++t) {
    StepMatrix sm(static_cast<Eigen::Index>(prefixes.size()), vocab);
    for (std::size_t i = 0; i < prefixes.size(); ++i) {
      auto w = row(t, i);
      double total = 0.0;
      for (double x : w) total += x;
      for (int v = 0; v < vocab; ++v) sm(static_cast<Eigen::Index>(i), v) = static_cast<float>(w[static_cast<std::size_t>(v)] / total);
    }
    mats.emplace(steps[t], std::move(sm));
  }
  return DistributionDump(std::move(m), std::move(mats));
}

inline std::vector<Step> steps_range(std::size_t n, Step spacing = 10) {
  std::vector<Step> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = static_cast<Step>(i) * spacing;
  return s;
}

inline PrefixRecord prefix(const std::string& id, const std::string& verb, const std::string& cls,
                           const std::string& cond = "", const std::string& source = "") {
  return PrefixRecord{id, id + " text", verb, cls, cond, 3, source};
}

// Uniform random point on the simplex.
inline std::vector<double> random_simplex(std::size_t n, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> x(n);
  double s = 0.0;
  for (auto& v : x) s += (v = e(rng));
  for (auto& v : x) v /= s;
  return x;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) {
    path = std::filesystem::temp_directory_path() / ("lmtraj_" + name + "_" + std::to_string(std::random_device{}()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

}  // namespace lmtraj::test
