#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lmtraj {

// Probability vector over a fixed vocabulary.
template <typename Scalar>
using Distribution = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using VocabDistribution = Distribution<double>;

// Per-step payload as stored on disk: one row per prefix.
using StepMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Step = std::int64_t;

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DumpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PrefixRecord {
  std::string prefix_id;
  std::string text;
  std::string verb_id;
  std::string class_id;
  std::string condition_id;
  int target_offset = 0;
  // Groups the members of a minimal pair; empty means the prefix stands alone.
  std::string source_id;

  bool operator==(const PrefixRecord&) const = default;
};

struct CheckpointIndex {
  std::string run_id;
  std::vector<Step> steps;

  void check() const;
  std::optional<std::size_t> position(Step step) const;
};

// One row/column of a divergence grid: a verb, optionally restricted to one
// condition.
struct Label {
  std::string verb_id;
  std::string class_id;
  std::string condition_id;

  std::string name() const {
    return condition_id.empty() ? verb_id : verb_id + ":" + condition_id;
  }
  bool operator==(const Label&) const = default;
};

struct SeriesPoint {
  Step step = 0;
  double value = 0.0;
  std::optional<double> dispersion;
};

struct TrajectorySeries {
  std::string run_id;
  std::string metric_name;
  std::vector<SeriesPoint> points;

  void check() const;
  std::vector<double> values() const;
  std::vector<Step> steps() const;
};

}  // namespace lmtraj
