#pragma once

#include "lmtraj/dist_store.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

namespace lmtraj {

/// Jensen-Shannon divergence in bits, bounded by [0, 1].
///
/// Terms with zero mass contribute nothing (0 log 0 = 0). The per-coordinate
/// terms are symmetric in (p, q), so jsd(p, q) and jsd(q, p) are bitwise equal,
/// and jsd(p, p) is exactly zero.
template <typename DerivedP, typename DerivedQ>
double jsd(const Eigen::MatrixBase<DerivedP>& p, const Eigen::MatrixBase<DerivedQ>& q) {
  if (p.size() != q.size()) {
    throw std::invalid_argument("jsd: length mismatch (" + std::to_string(p.size()) + " vs " +
                                std::to_string(q.size()) + ")");
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double pi = static_cast<double>(p.coeff(i));
    const double qi = static_cast<double>(q.coeff(i));
    if (pi == qi) continue;
    const double mi = 0.5 * (pi + qi);
    const double tp = pi > 0.0 ? pi * std::log2(pi / mi) : 0.0;
    const double tq = qi > 0.0 ? qi * std::log2(qi / mi) : 0.0;
    acc += tp + tq;
  }
  return std::clamp(0.5 * acc, 0.0, 1.0);
}

struct DivergenceGrid {
  Step step = 0;
  std::vector<Label> labels;
  Eigen::MatrixXd values;

  std::optional<std::size_t> find(const std::string& verb_id, const std::string& condition_id = {}) const;
  void check() const;
};

// Symmetric matrix of pairwise divergences; each unordered pair is evaluated
// once, optionally in parallel over the upper triangle.
Eigen::MatrixXd pairwise_divergences(const std::vector<VocabDistribution>& profiles, bool parallel = true);

DivergenceGrid pairwise_grid(const DistributionDump& dump, Step step, const std::vector<Label>& labels,
                             bool parallel = true);

// Stable reordering so every class occupies a contiguous block, classes in
// order of first appearance.
std::vector<Label> class_contiguous(std::vector<Label> labels);

// Labels for every verb of the given classes in dump order, optionally all
// bound to one condition.
std::vector<Label> class_labels(const DistributionDump& dump, const std::vector<std::string>& class_ids,
                                const std::string& condition_id = {});

struct InBetweenSplit {
  std::vector<double> same;   // U_A: focal verb vs. other verbs of its class
  std::vector<double> other;  // U_B: focal verb vs. every verb of the comparison class
};

InBetweenSplit split_in_between(const DivergenceGrid& grid, const std::string& focal_verb, const std::string& class_a,
                                const std::string& class_b);

// Same split by explicit row sets; the focal row is excluded from both.
InBetweenSplit split_in_between(const DivergenceGrid& grid, std::size_t focal, const std::vector<std::size_t>& same_set,
                                const std::vector<std::size_t>& other_set);

// CSV with a label header row and column, plus a JSON sidecar carrying the
// step and per-label class/condition metadata.
void export_grid(const DivergenceGrid& grid, const std::filesystem::path& csv_path,
                 const std::filesystem::path& json_path);

}  // namespace lmtraj
