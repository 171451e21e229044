#include "lmtraj/metrics.hpp"

#include "lmtraj/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace lmtraj {

namespace {

std::optional<std::string> as_filter(const std::string& condition) {
  return condition.empty() ? std::nullopt : std::optional<std::string>(condition);
}

// Evaluates fn(step) for every checkpoint in parallel and returns results in
// step order.
template <typename T, typename Fn>
std::vector<T> per_step(const DistributionDump& dump, Fn&& fn) {
  const auto& steps = dump.steps();
  std::vector<T> out(steps.size());
  parallel_for(steps.size(), [&](std::size_t i) { out[i] = fn(steps[i]); });
  return out;
}

std::pair<double, double> mean_and_sd(const std::vector<double>& v) {
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / static_cast<double>(v.size()))};
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
}

}  // namespace

TrajectorySeries item_learning_curve(const DistributionDump& dump, const std::string& class_id,
                                     const std::optional<std::string>& condition) {
  const auto verbs = dump.verbs(class_id);
  if (verbs.size() < 2) {
    throw InputError("item_learning_curve: class '" + class_id + "' needs at least 2 verbs, has " +
                     std::to_string(verbs.size()));
  }
  std::vector<Label> labels;
  for (const auto& v : verbs) labels.push_back(Label{v, class_id, condition.value_or("")});

  auto points = per_step<SeriesPoint>(dump, [&](Step step) {
    const auto grid = pairwise_grid(dump, step, labels, false);
    std::vector<double> d;
    for (Eigen::Index i = 0; i < grid.values.rows(); ++i)
      for (Eigen::Index j = i + 1; j < grid.values.cols(); ++j) d.push_back(grid.values(i, j));
    const auto [m, sd] = mean_and_sd(d);
    return SeriesPoint{step, m, sd};
  });
  return TrajectorySeries{dump.run_id(), "item/" + class_id + (condition ? ":" + *condition : ""), std::move(points)};
}

std::vector<RowSignificance> row_significance(const DivergenceGrid& grid, const std::vector<std::size_t>& set_a,
                                              const std::vector<std::size_t>& set_b, double alpha) {
  check_alpha(alpha);
  std::vector<RowSignificance> out;
  auto test_rows = [&](const std::vector<std::size_t>& own, const std::vector<std::size_t>& other) {
    for (std::size_t row : own) {
      const auto split = split_in_between(grid, row, own, other);
      RowSignificance sig;
      if (!split.same.empty() && !split.other.empty()) {
        try {
          const double m_same = mean(split.same), m_other = mean(split.other);
          sig.canonical = m_other > m_same && mann_whitney_one_tailed(split.other, split.same).p_value < alpha;
          sig.reversed = m_same > m_other && mann_whitney_one_tailed(split.same, split.other).p_value < alpha;
        } catch (const std::exception&) {
          sig = RowSignificance{};  // undefined tests count as not significant
        }
      }
      out.push_back(sig);
    }
  };
  test_rows(set_a, set_b);
  test_rows(set_b, set_a);
  return out;
}

ClassFractionCurves class_fraction_curve(const DistributionDump& dump, const std::string& class_a,
                                         const std::string& class_b, double alpha,
                                         const std::optional<std::string>& condition) {
  check_alpha(alpha);
  const auto labels = class_labels(dump, {class_a, class_b}, condition.value_or(""));
  std::vector<std::size_t> rows_a, rows_b;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i].class_id == class_a ? rows_a : rows_b).push_back(i);
  if (rows_a.size() < 2 || rows_b.size() < 2) {
    throw InputError("class_fraction_curve: classes '" + class_a + "' and '" + class_b +
                     "' need at least 2 verbs each");
  }

  struct StepFractions {
    double canonical = 0, reversed = 0, a = 0, b = 0;
  };
  const auto fractions = per_step<StepFractions>(dump, [&](Step step) {
    const auto grid = pairwise_grid(dump, step, labels, false);
    const auto sig = row_significance(grid, rows_a, rows_b, alpha);
    StepFractions f;
    for (std::size_t k = 0; k < sig.size(); ++k) {
      f.canonical += sig[k].canonical;
      f.reversed += sig[k].reversed;
      (k < rows_a.size() ? f.a : f.b) += sig[k].canonical;
    }
    f.canonical /= static_cast<double>(sig.size());
    f.reversed /= static_cast<double>(sig.size());
    f.a /= static_cast<double>(rows_a.size());
    f.b /= static_cast<double>(rows_b.size());
    return f;
  });

  const std::string pair = class_a + "-" + class_b + (condition ? ":" + *condition : "");
  ClassFractionCurves out;
  out.canonical = {dump.run_id(), "class_fraction/" + pair, {}};
  out.reversed = {dump.run_id(), "class_fraction_reversed/" + pair, {}};
  auto& per_a = out.per_class[class_a];
  auto& per_b = out.per_class[class_b];
  per_a = {dump.run_id(), "class_fraction/" + pair + "/" + class_a, {}};
  per_b = {dump.run_id(), "class_fraction/" + pair + "/" + class_b, {}};
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    const Step s = dump.steps()[i];
    out.canonical.points.push_back({s, fractions[i].canonical, std::nullopt});
    out.reversed.points.push_back({s, fractions[i].reversed, std::nullopt});
    per_a.points.push_back({s, fractions[i].a, std::nullopt});
    per_b.points.push_back({s, fractions[i].b, std::nullopt});
  }
  return out;
}

TrajectorySeries minimal_pair_curve(const DistributionDump& dump, const ConditionPair& conditions,
                                    const std::optional<std::string>& verb_id,
                                    const std::optional<std::string>& class_id) {
  if (conditions.first == conditions.second) throw std::invalid_argument("minimal_pair_curve: conditions must differ");
  struct Group {
    std::vector<std::size_t> first, second;
  };
  std::map<std::string, Group> groups;
  const auto& prefixes = dump.prefixes();
  for (std::size_t i = 0; i < prefixes.size(); ++i) {
    const auto& p = prefixes[i];
    const std::string key = p.source_id.empty() ? p.prefix_id : p.source_id;
    if (p.condition_id == conditions.first) groups[key].first.push_back(i);
    if (p.condition_id == conditions.second) groups[key].second.push_back(i);
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& [key, g] : groups) {
    if (g.first.empty() || g.second.empty()) {
      throw InputError("minimal pair '" + key + "' lacks a member in condition '" +
                       (g.first.empty() ? conditions.first : conditions.second) + "'");
    }
    for (std::size_t a : g.first) {
      if (verb_id && prefixes[a].verb_id != *verb_id) continue;
      if (class_id && prefixes[a].class_id != *class_id) continue;
      for (std::size_t b : g.second) pairs.emplace_back(a, b);
    }
  }
  if (pairs.empty()) {
    throw InputError("no minimal pairs for conditions '" + conditions.first + "'/'" + conditions.second + "'" +
                     (verb_id ? " and verb '" + *verb_id + "'" : std::string()) +
                     (class_id ? " and class '" + *class_id + "'" : std::string()));
  }

  auto points = per_step<SeriesPoint>(dump, [&](Step step) {
    std::vector<double> d;
    d.reserve(pairs.size());
    for (const auto& [a, b] : pairs) d.push_back(jsd(dump.distribution(step, a), dump.distribution(step, b)));
    const auto [m, sd] = mean_and_sd(d);
    return SeriesPoint{step, m, sd};
  });
  std::string name = std::string(class_id ? "minimal_pair_by_class/" : "minimal_pair/") + conditions.first + "-" +
                     conditions.second;
  if (class_id) name += "/" + *class_id;
  if (verb_id) name += "/" + *verb_id;
  return TrajectorySeries{dump.run_id(), name, std::move(points)};
}

TrajectorySeries condition_class_metric(const DistributionDump& dump, const std::vector<Label>& category_a,
                                        const std::vector<Label>& category_b, double alpha, const std::string& name) {
  check_alpha(alpha);
  if (category_a.size() < 2 || category_b.size() < 2) {
    throw InputError("condition_class_metric '" + name + "': each category needs at least 2 labels");
  }
  std::vector<Label> labels = category_a;
  labels.insert(labels.end(), category_b.begin(), category_b.end());
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& l : labels) {
    if (!seen.emplace(l.verb_id, l.condition_id).second) {
      throw InputError("condition_class_metric '" + name + "': label '" + l.name() + "' appears twice");
    }
  }
  std::vector<std::size_t> rows_a(category_a.size()), rows_b(category_b.size());
  for (std::size_t i = 0; i < rows_a.size(); ++i) rows_a[i] = i;
  for (std::size_t i = 0; i < rows_b.size(); ++i) rows_b[i] = category_a.size() + i;

  auto points = per_step<SeriesPoint>(dump, [&](Step step) {
    const auto grid = pairwise_grid(dump, step, labels, false);
    const auto sig = row_significance(grid, rows_a, rows_b, alpha);
    const double n = static_cast<double>(std::count_if(sig.begin(), sig.end(), [](const auto& s) { return s.canonical; }));
    return SeriesPoint{step, n / static_cast<double>(sig.size()), std::nullopt};
  });
  return TrajectorySeries{dump.run_id(), "condition_class/" + name, std::move(points)};
}

std::vector<NounTarget> default_noun_targets() {
  return {{"public", -1, "to_dative"}, {"family", -1, "to_dative"}, {"airport", -1, "motion"}, {"scene", -1, "motion"}};
}

std::vector<NounCorrelationWindow> noun_trajectory_correlations(const DistributionDump& dump,
                                                                const std::vector<NounTarget>& nouns,
                                                                const std::vector<Label>& verbs,
                                                                std::size_t window_steps) {
  const auto& steps = dump.steps();
  if (steps.size() < 3) throw InputError("noun trajectories need at least 3 checkpoints");
  if (verbs.size() < 2) throw InputError("noun trajectories need at least 2 verbs");
  for (const auto& n : nouns) {
    if (n.token_id < 0 || n.token_id >= dump.vocab_size()) {
      throw InputError("noun '" + n.label + "' has token id " + std::to_string(n.token_id) + " outside the vocabulary");
    }
  }
  // traj[noun][verb][step]
  std::vector<std::vector<std::vector<double>>> traj(
      nouns.size(), std::vector<std::vector<double>>(verbs.size(), std::vector<double>(steps.size())));
  std::vector<std::vector<std::size_t>> rows(verbs.size());
  for (std::size_t v = 0; v < verbs.size(); ++v) {
    rows[v] = dump.prefix_indices(verbs[v].verb_id, as_filter(verbs[v].condition_id));
    if (rows[v].empty()) throw InputError("verb '" + verbs[v].name() + "' has no prefixes");
  }
  parallel_for(steps.size(), [&](std::size_t t) {
    const auto m = dump.step_matrix(steps[t]);
    for (std::size_t v = 0; v < verbs.size(); ++v) {
      std::vector<double> acc(nouns.size(), 0.0);
      for (std::size_t r : rows[v]) {
        const auto row = m->row(static_cast<Eigen::Index>(r));
        const double total = row.cast<double>().sum();
        for (std::size_t n = 0; n < nouns.size(); ++n) acc[n] += static_cast<double>(row(nouns[n].token_id)) / total;
      }
      for (std::size_t n = 0; n < nouns.size(); ++n) traj[n][v][t] = acc[n] / static_cast<double>(rows[v].size());
    }
  });

  const std::size_t width = window_steps == 0 ? steps.size() : window_steps;
  if (width < 3) throw InputError("noun correlation window must cover at least 3 checkpoints");
  std::vector<NounCorrelationWindow> out;
  for (std::size_t begin = 0; begin + 3 <= steps.size(); begin += width) {
    const std::size_t end = std::min(steps.size(), begin + width);
    if (end - begin < 3) break;
    NounCorrelationWindow w{steps[begin], steps[end - 1], {}};
    for (std::size_t n = 0; n < nouns.size(); ++n) {
      NounCorrelation nc;
      nc.noun = nouns[n];
      std::vector<double> within, between;
      std::map<std::string, std::vector<double>> by_class;
      for (std::size_t a = 0; a < verbs.size(); ++a) {
        for (std::size_t b = a + 1; b < verbs.size(); ++b) {
          const std::span<const double> xa(traj[n][a].data() + begin, end - begin);
          const std::span<const double> xb(traj[n][b].data() + begin, end - begin);
          double rho = 0.0;
          try {
            rho = spearman(xa, xb);
          } catch (const UndefinedCorrelation&) {
            ++nc.excluded_pairs;
            continue;
          }
          const bool same = verbs[a].class_id == verbs[b].class_id;
          nc.pairs.push_back({verbs[a].name(), verbs[b].name(), rho, same});
          (same ? within : between).push_back(rho);
          if (same) by_class[verbs[a].class_id].push_back(rho);
        }
      }
      nc.within = summarize(within);
      nc.between = summarize(between);
      for (const auto& [c, v] : by_class) nc.within_by_class[c] = summarize(v);
      w.nouns.push_back(std::move(nc));
    }
    out.push_back(std::move(w));
  }
  return out;
}

BreakpointResult breakpoint_detect(const TrajectorySeries& series, double delta, std::size_t baseline_window) {
  const auto& pts = series.points;
  if (baseline_window == 0) throw std::invalid_argument("breakpoint_detect: baseline window must be positive");
  if (pts.size() <= baseline_window) {
    throw InputError("breakpoint_detect: series '" + series.metric_name + "' has " + std::to_string(pts.size()) +
                     " points, needs more than the " + std::to_string(baseline_window) + "-point baseline");
  }
  BreakpointResult r;
  double sum = 0.0;
  for (std::size_t i = 0; i < baseline_window; ++i) sum += pts[i].value;
  r.baseline_mean = sum / static_cast<double>(baseline_window);
  r.threshold = r.baseline_mean + delta;
  std::size_t first = pts.size();
  while (first > baseline_window && pts[first - 1].value >= r.threshold) --first;
  if (first < pts.size()) r.breakpoint_step = pts[first].step;
  return r;
}

BreakpointComparison class_breakpoint_compare(const std::string& class_a, const std::vector<std::string>& verbs_a,
                                              const std::string& class_b, const std::vector<std::string>& verbs_b,
                                              const PairSeriesBuilder& pair_builder, double delta,
                                              std::size_t baseline_window) {
  BreakpointComparison c;
  c.class_a = class_a;
  c.class_b = class_b;
  std::vector<double> steps_a, steps_b;
  auto collect = [&](const std::vector<std::string>& verbs, std::vector<BreakpointResult>& results,
                     std::vector<double>& found) {
    for (const auto& v : verbs) {
      auto r = breakpoint_detect(pair_builder(v), delta, baseline_window);
      r.verb_id = v;
      if (r.breakpoint_step) {
        found.push_back(static_cast<double>(*r.breakpoint_step));
      } else {
        c.excluded.push_back(v);
      }
      results.push_back(std::move(r));
    }
  };
  collect(verbs_a, c.breakpoints_a, steps_a);
  collect(verbs_b, c.breakpoints_b, steps_b);
  if (!steps_a.empty()) c.median_a = median(steps_a);
  if (!steps_b.empty()) c.median_b = median(steps_b);
  try {
    c.p_value = unpaired_t_test(steps_a, steps_b);
  } catch (const std::exception& e) {
    c.note = std::string("t test undefined: ") + e.what();
  }
  return c;
}

BreakpointComparison class_breakpoint_compare(const DistributionDump& dump, const std::string& class_a,
                                              const std::string& class_b, const ConditionPair& conditions,
                                              double delta, std::size_t baseline_window) {
  auto verbs_with_pairs = [&](const std::string& cls) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& p : dump.prefixes()) {
      if (p.class_id == cls && p.condition_id == conditions.first && seen.insert(p.verb_id).second) out.push_back(p.verb_id);
    }
    return out;
  };
  return class_breakpoint_compare(
      class_a, verbs_with_pairs(class_a), class_b, verbs_with_pairs(class_b),
      [&](const std::string& verb) { return minimal_pair_curve(dump, conditions, verb); }, delta, baseline_window);
}

nlohmann::json to_json(const BreakpointResult& r) {
  return {{"verb_id", r.verb_id},
          {"breakpoint_step", r.breakpoint_step ? nlohmann::json(*r.breakpoint_step) : nlohmann::json()},
          {"baseline_mean", r.baseline_mean},
          {"threshold", r.threshold}};
}

nlohmann::json to_json(const BreakpointComparison& c) {
  auto arr = [](const std::vector<BreakpointResult>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& r : v) a.push_back(to_json(r));
    return a;
  };
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); };
  nlohmann::json j{{"class_a", c.class_a},
                   {"class_b", c.class_b},
                   {"breakpoints_a", arr(c.breakpoints_a)},
                   {"breakpoints_b", arr(c.breakpoints_b)},
                   {"excluded", c.excluded},
                   {"median_a", opt(c.median_a)},
                   {"median_b", opt(c.median_b)},
                   {"p_value", opt(c.p_value)},
                   {"test", "welch_t_two_sided"}};
  if (!c.note.empty()) j["note"] = c.note;
  return j;
}

nlohmann::json to_json(const NounCorrelationWindow& w) {
  auto summary = [](const Summary& s) {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); };
    return nlohmann::json{{"n", s.n}, {"mean", s.n ? num(s.mean) : nlohmann::json()},
                          {"ci95", s.n ? nlohmann::json::array({num(s.ci_low), num(s.ci_high)}) : nlohmann::json()}};
  };
  nlohmann::json nouns = nlohmann::json::array();
  for (const auto& n : w.nouns) {
    nlohmann::json by_class = nlohmann::json::object();
    for (const auto& [c, s] : n.within_by_class) by_class[c] = summary(s);
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& p : n.pairs) {
      pairs.push_back({{"verb_a", p.verb_a}, {"verb_b", p.verb_b}, {"rho", p.rho}, {"within", p.within}});
    }
    nouns.push_back({{"noun", n.noun.label},
                     {"token_id", n.noun.token_id},
                     {"prototype_class", n.noun.prototype_class},
                     {"within", summary(n.within)},
                     {"between", summary(n.between)},
                     {"within_by_class", by_class},
                     {"excluded_pairs", n.excluded_pairs},
                     {"pairs", pairs}});
  }
  return {{"first_step", w.first_step}, {"last_step", w.last_step}, {"nouns", nouns}};
}

}  // namespace lmtraj
