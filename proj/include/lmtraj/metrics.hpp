#pragma once

#include "lmtraj/divergence.hpp"
#include "lmtraj/stats.hpp"

#include <functional>
#include <map>

namespace lmtraj {

inline constexpr double kDefaultAlpha = 0.001;
inline constexpr double kDefaultBreakpointDelta = 0.01;
inline constexpr std::size_t kDefaultBaselineWindow = 30;

// Mean and population standard deviation of within-class pairwise divergences,
// per checkpoint.
TrajectorySeries item_learning_curve(const DistributionDump& dump, const std::string& class_id,
                                     const std::optional<std::string>& condition = std::nullopt);

// Per-row outcome of the class-learning test on one grid.
struct RowSignificance {
  bool canonical = false;  // cross-category divergences significantly larger
  bool reversed = false;   // same-category divergences significantly larger
};

// For every row in set_a and set_b, compares its divergences to the other
// category (U_B) against its own category (U_A) with one-tailed U tests in both
// directions. A direction counts only when p < alpha and its mean is larger.
std::vector<RowSignificance> row_significance(const DivergenceGrid& grid, const std::vector<std::size_t>& set_a,
                                              const std::vector<std::size_t>& set_b, double alpha);

struct ClassFractionCurves {
  TrajectorySeries canonical;
  TrajectorySeries reversed;
  std::map<std::string, TrajectorySeries> per_class;  // canonical fraction within one class
};

ClassFractionCurves class_fraction_curve(const DistributionDump& dump, const std::string& class_a,
                                         const std::string& class_b, double alpha = kDefaultAlpha,
                                         const std::optional<std::string>& condition = std::nullopt);

struct ConditionPair {
  std::string first;
  std::string second;
};

// Mean (and population sd) of the divergence between the two members of every
// minimal pair, where pairs are prefixes sharing a source_id with the two
// conditions. Optionally restricted to pairs whose first member has verb_id
// and/or class_id; a class restriction names the series
// "minimal_pair_by_class/<first>-<second>/<class>".
TrajectorySeries minimal_pair_curve(const DistributionDump& dump, const ConditionPair& conditions,
                                    const std::optional<std::string>& verb_id = std::nullopt,
                                    const std::optional<std::string>& class_id = std::nullopt);

// Fraction of (verb, condition) labels significantly closer to their own
// category than to the other one.
TrajectorySeries condition_class_metric(const DistributionDump& dump, const std::vector<Label>& category_a,
                                        const std::vector<Label>& category_b, double alpha = kDefaultAlpha,
                                        const std::string& name = "condition_class");

struct NounTarget {
  std::string label;
  int token_id = 0;
  std::string prototype_class;
};

struct PairCorrelation {
  std::string verb_a;
  std::string verb_b;
  double rho = 0.0;
  bool within = false;
};

struct NounCorrelation {
  NounTarget noun;
  std::vector<PairCorrelation> pairs;
  Summary within;
  Summary between;
  std::map<std::string, Summary> within_by_class;
  std::size_t excluded_pairs = 0;  // constant trajectories
};

struct NounCorrelationWindow {
  Step first_step = 0;
  Step last_step = 0;
  std::vector<NounCorrelation> nouns;
};

// P_v(noun) trajectories per verb and their pairwise Spearman correlations,
// summarised within and between classes. window_steps = 0 uses the whole
// checkpoint range; otherwise consecutive non-overlapping windows of that many
// checkpoints (a trailing window shorter than 3 is dropped).
std::vector<NounCorrelationWindow> noun_trajectory_correlations(const DistributionDump& dump,
                                                                const std::vector<NounTarget>& nouns,
                                                                const std::vector<Label>& verbs,
                                                                std::size_t window_steps = 0);

// The four tracked nouns for the to-dative / motion comparison; token ids must
// be resolved against the tokenizer used for the dump.
std::vector<NounTarget> default_noun_targets();

struct BreakpointResult {
  std::string verb_id;
  std::optional<Step> breakpoint_step;
  double baseline_mean = 0.0;
  double threshold = 0.0;
};

/// Earliest step s such that the value at s and at every later step is at least
/// baseline_mean + delta, where baseline_mean averages the first
/// baseline_window points. Only steps past the baseline window qualify.
BreakpointResult breakpoint_detect(const TrajectorySeries& series, double delta = kDefaultBreakpointDelta,
                                   std::size_t baseline_window = kDefaultBaselineWindow);

struct BreakpointComparison {
  std::string class_a;
  std::string class_b;
  std::vector<BreakpointResult> breakpoints_a;
  std::vector<BreakpointResult> breakpoints_b;
  std::vector<std::string> excluded;  // verbs without a breakpoint
  std::optional<double> median_a;
  std::optional<double> median_b;
  std::optional<double> p_value;
  std::string note;
};

using PairSeriesBuilder = std::function<TrajectorySeries(const std::string& verb_id)>;

BreakpointComparison class_breakpoint_compare(const std::string& class_a, const std::vector<std::string>& verbs_a,
                                              const std::string& class_b, const std::vector<std::string>& verbs_b,
                                              const PairSeriesBuilder& pair_builder,
                                              double delta = kDefaultBreakpointDelta,
                                              std::size_t baseline_window = kDefaultBaselineWindow);

// Per-verb minimal-pair series drawn from the dump.
BreakpointComparison class_breakpoint_compare(const DistributionDump& dump, const std::string& class_a,
                                              const std::string& class_b, const ConditionPair& conditions,
                                              double delta = kDefaultBreakpointDelta,
                                              std::size_t baseline_window = kDefaultBaselineWindow);

nlohmann::json to_json(const BreakpointResult& r);
nlohmann::json to_json(const BreakpointComparison& c);
nlohmann::json to_json(const NounCorrelationWindow& w);

}  // namespace lmtraj
