#include "lmtraj/divergence.hpp"

#include "lmtraj/parallel.hpp"
#include "lmtraj/tidy_io.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace lmtraj {

std::optional<std::size_t> DivergenceGrid::find(const std::string& verb_id, const std::string& condition_id) const {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].verb_id == verb_id && labels[i].condition_id == condition_id) return i;
  }
  return std::nullopt;
}

void DivergenceGrid::check() const {
  const auto n = static_cast<Eigen::Index>(labels.size());
  if (values.rows() != n || values.cols() != n) throw InputError("grid shape does not match label count");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (values(i, i) != 0.0) throw InputError("grid diagonal must be zero");
    for (Eigen::Index j = 0; j < n; ++j) {
      if (values(i, j) != values(j, i)) throw InputError("grid must be symmetric");
      if (!(values(i, j) >= 0.0 && values(i, j) <= 1.0)) throw InputError("grid entry outside [0, 1]");
    }
  }
}

Eigen::MatrixXd pairwise_divergences(const std::vector<VocabDistribution>& profiles, bool parallel) {
  const auto n = static_cast<Eigen::Index>(profiles.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  pairs.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  auto fill = [&](std::size_t k) {
    const auto [i, j] = pairs[k];
    const double d = jsd(profiles[static_cast<std::size_t>(i)], profiles[static_cast<std::size_t>(j)]);
    out(i, j) = d;
    out(j, i) = d;
  };
  if (parallel) {
    parallel_for(pairs.size(), fill);
  } else {
    for (std::size_t k = 0; k < pairs.size(); ++k) fill(k);
  }
  return out;
}

DivergenceGrid pairwise_grid(const DistributionDump& dump, Step step, const std::vector<Label>& labels, bool parallel) {
  std::vector<VocabDistribution> profiles;
  profiles.reserve(labels.size());
  for (const auto& l : labels) profiles.push_back(label_profile(dump, l, step));
  return DivergenceGrid{step, labels, pairwise_divergences(profiles, parallel)};
}

std::vector<Label> class_contiguous(std::vector<Label> labels) {
  std::map<std::string, std::size_t> order;
  for (const auto& l : labels) order.emplace(l.class_id, order.size());
  std::stable_sort(labels.begin(), labels.end(),
                   [&](const Label& a, const Label& b) { return order.at(a.class_id) < order.at(b.class_id); });
  return labels;
}

std::vector<Label> class_labels(const DistributionDump& dump, const std::vector<std::string>& class_ids,
                                const std::string& condition_id) {
  std::vector<Label> out;
  for (const auto& c : class_ids) {
    for (const auto& v : dump.verbs(c)) out.push_back(Label{v, c, condition_id});
  }
  return out;
}

InBetweenSplit split_in_between(const DivergenceGrid& grid, std::size_t focal, const std::vector<std::size_t>& same_set,
                                const std::vector<std::size_t>& other_set) {
  if (focal >= grid.labels.size()) throw InputError("focal row out of range");
  InBetweenSplit out;
  const auto f = static_cast<Eigen::Index>(focal);
  for (std::size_t j : same_set)
    if (j != focal) out.same.push_back(grid.values(f, static_cast<Eigen::Index>(j)));
  for (std::size_t j : other_set)
    if (j != focal) out.other.push_back(grid.values(f, static_cast<Eigen::Index>(j)));
  return out;
}

InBetweenSplit split_in_between(const DivergenceGrid& grid, const std::string& focal_verb, const std::string& class_a,
                                const std::string& class_b) {
  std::optional<std::size_t> focal;
  std::vector<std::size_t> a, b;
  for (std::size_t i = 0; i < grid.labels.size(); ++i) {
    const auto& l = grid.labels[i];
    if (l.verb_id == focal_verb && !focal) focal = i;
    if (l.class_id == class_a) a.push_back(i);
    if (l.class_id == class_b) b.push_back(i);
  }
  if (!focal) throw InputError("focal verb '" + focal_verb + "' not in grid");
  if (grid.labels[*focal].class_id != class_a) {
    throw InputError("focal verb '" + focal_verb + "' is not in class '" + class_a + "'");
  }
  if (b.empty()) throw InputError("comparison class '" + class_b + "' has no verbs in grid");
  return split_in_between(grid, *focal, a, b);
}

void export_grid(const DivergenceGrid& grid, const std::filesystem::path& csv_path,
                 const std::filesystem::path& json_path) {
  std::ostringstream csv;
  csv << "label";
  for (const auto& l : grid.labels) csv << ',' << csv_escape(l.name());
  csv << '\n';
  for (std::size_t i = 0; i < grid.labels.size(); ++i) {
    csv << csv_escape(grid.labels[i].name());
    for (std::size_t j = 0; j < grid.labels.size(); ++j) {
      csv << ',' << format_double(grid.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    csv << '\n';
  }
  write_text_atomic(csv_path, csv.str());

  nlohmann::json labels = nlohmann::json::array();
  for (const auto& l : grid.labels) {
    labels.push_back({{"label", l.name()}, {"verb_id", l.verb_id}, {"class_id", l.class_id}, {"condition_id", l.condition_id}});
  }
  write_json_atomic(json_path, {{"step", grid.step}, {"units", "bits"}, {"labels", labels}});
}

}  // namespace lmtraj
