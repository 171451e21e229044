#include "lmtraj/exemplar_baseline.hpp"

#include "lmtraj/parallel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace lmtraj {

namespace fs = std::filesystem;

void BaselineConfig::check() const {
  if (window < 1) throw std::invalid_argument("baseline window must be at least 1");
  if (!(smoothing_k > 0.0)) throw std::invalid_argument("smoothing k must be positive");
  if (snapshot_schedule.empty()) throw std::invalid_argument("snapshot schedule is empty");
  for (std::size_t i = 1; i < snapshot_schedule.size(); ++i) {
    if (snapshot_schedule[i] <= snapshot_schedule[i - 1]) {
      throw std::invalid_argument("snapshot schedule must be strictly increasing");
    }
  }
}

std::vector<std::uint64_t> geometric_schedule(std::uint64_t max_tokens, std::size_t count) {
  if (count == 0 || max_tokens == 0) throw std::invalid_argument("geometric_schedule: empty schedule");
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t t = max_tokens >> (count - 1 - i);
    if (t > 0 && (out.empty() || t > out.back())) out.push_back(t);
  }
  return out;
}

std::vector<CountSnapshot> stream_count(std::span<const TokenId> tokens, const std::vector<FrameMatch>& matches,
                                        int vocab_size, const BaselineConfig& config, std::size_t shards,
                                        const std::vector<std::string>& known_verbs) {
  config.check();
  if (vocab_size <= 0) throw std::invalid_argument("vocab_size must be positive");
  const std::uint64_t n = tokens.size();

  std::vector<std::string> verbs = known_verbs;
  std::unordered_map<std::string, std::size_t> verb_index;
  for (std::size_t i = 0; i < verbs.size(); ++i) verb_index.emplace(verbs[i], i);
  std::vector<std::uint64_t> anchors(matches.size());
  std::vector<std::size_t> match_verb(matches.size());
  for (std::size_t i = 0; i < matches.size(); ++i) {
    const auto& m = matches[i];
    if (m.verb_pos >= n || m.prep_pos >= n) {
      throw InputError("match for verb '" + m.verb_id + "' at position " + std::to_string(std::max(m.verb_pos, m.prep_pos)) +
                       " lies beyond the token stream (" + std::to_string(n) + " tokens)");
    }
    anchors[i] = config.anchor == WindowAnchor::AfterVerb ? m.verb_pos : m.prep_pos;
    auto [it, inserted] = verb_index.emplace(m.verb_id, verbs.size());
    if (inserted) verbs.push_back(m.verb_id);
    match_verb[i] = it->second;
  }
  for (TokenId t : tokens) {
    if (t < 0 || t >= vocab_size) throw InputError("token id " + std::to_string(t) + " outside vocabulary");
  }

  // Snapshot thresholds actually emitted.
  std::vector<std::uint64_t> thresholds;
  for (std::uint64_t t : config.snapshot_schedule) {
    if (t < n) {
      thresholds.push_back(t);
    } else {
      thresholds.push_back(n);
      break;
    }
  }
  const std::uint64_t horizon = thresholds.empty() ? 0 : thresholds.back();

  std::vector<std::size_t> order(matches.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return anchors[a] < anchors[b]; });

  using Delta = std::unordered_map<std::uint64_t, std::int64_t>;  // key: verb * V + token
  const std::size_t num_shards = std::max<std::size_t>(1, shards);
  const std::size_t intervals = thresholds.size();
  std::vector<std::vector<Delta>> shard_deltas(num_shards, std::vector<Delta>(intervals));
  const auto vocab = static_cast<std::uint64_t>(vocab_size);

  parallel_for(num_shards, [&](std::size_t s) {
    const std::uint64_t lo = horizon * s / num_shards;
    const std::uint64_t hi = horizon * (s + 1) / num_shards;
    if (lo >= hi) return;
    auto& deltas = shard_deltas[s];
    // Matches whose window can reach [lo, hi).
    const std::uint64_t first_anchor = lo > config.window ? lo - config.window : 0;
    auto it = std::lower_bound(order.begin(), order.end(), first_anchor,
                               [&](std::size_t m, std::uint64_t v) { return anchors[m] < v; });
    for (; it != order.end() && anchors[*it] < hi; ++it) {
      const std::uint64_t a = anchors[*it];
      const std::uint64_t begin = std::max(a + 1, lo);
      const std::uint64_t end = std::min({a + 1 + config.window, hi});
      std::size_t interval = static_cast<std::size_t>(
          std::upper_bound(thresholds.begin(), thresholds.end(), begin) - thresholds.begin());
      for (std::uint64_t p = begin; p < end; ++p) {
        while (interval < intervals && p >= thresholds[interval]) ++interval;
        if (interval >= intervals) break;
        const TokenId t = tokens[p];
        if (config.stopword_ids.count(t)) continue;
        deltas[interval][match_verb[*it] * vocab + static_cast<std::uint64_t>(t)] += 1;
      }
    }
  });

  std::vector<CountSnapshot> out;
  std::vector<CountVector> running(verbs.size(), CountVector::Zero(vocab_size));
  for (std::size_t k = 0; k < intervals; ++k) {
    for (std::size_t s = 0; s < num_shards; ++s) {
      for (const auto& [key, c] : shard_deltas[s][k]) {
        running[key / vocab](static_cast<Eigen::Index>(key % vocab)) += c;
      }
    }
    CountSnapshot snap;
    snap.tokens_seen = thresholds[k];
    for (std::size_t v = 0; v < verbs.size(); ++v) snap.verbs.push_back({verbs[v], running[v]});
    out.push_back(std::move(snap));
  }
  return out;
}

VocabDistribution smooth_normalize(const CountVector& counts, double k) {
  if (!(k > 0.0)) throw std::invalid_argument("smoothing k must be positive");
  VocabDistribution d = counts.cast<double>().array() + k;
  return d / d.sum();
}

BaselineCurves baseline_divergence_curves(const std::vector<CountSnapshot>& snapshots,
                                          const std::map<std::string, std::string>& class_of,
                                          const std::string& class_a, const std::string& class_b, double k,
                                          const std::string& run_id) {
  if (snapshots.size() < 2) throw InputError("baseline curves need at least 2 snapshots");
  BaselineCurves out;
  TrajectorySeries within{run_id, "baseline/within", {}};
  TrajectorySeries between{run_id, "baseline/between", {}};
  std::map<std::string, TrajectorySeries> per_class;
  for (const auto& c : {class_a, class_b}) per_class[c] = {run_id, "baseline/within/" + c, {}};

  for (const auto& snap : snapshots) {
    std::vector<Label> labels;
    std::vector<VocabDistribution> dists;
    for (const auto& cls : {class_a, class_b}) {
      for (const auto& vc : snap.verbs) {
        auto it = class_of.find(vc.verb_id);
        if (it == class_of.end() || it->second != cls) continue;
        labels.push_back({vc.verb_id, cls, ""});
        dists.push_back(smooth_normalize(vc.counts, k));
      }
    }
    BaselineSnapshotResult r;
    r.tokens_seen = snap.tokens_seen;
    r.grid = DivergenceGrid{static_cast<Step>(snap.tokens_seen), labels, pairwise_divergences(dists)};
    std::vector<double> w, b;
    std::map<std::string, std::vector<double>> w_by;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      for (std::size_t j = i + 1; j < labels.size(); ++j) {
        const double d = r.grid.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (labels[i].class_id == labels[j].class_id) {
          w.push_back(d);
          w_by[labels[i].class_id].push_back(d);
        } else {
          b.push_back(d);
        }
      }
    }
    if (w.empty() || b.empty()) throw InputError("baseline curves need at least 2 verbs in a class and one per class");
    r.within = summarize(w);
    r.between = summarize(b);
    for (const auto& [c, v] : w_by) r.within_by_class[c] = summarize(v);

    const auto step = static_cast<Step>(snap.tokens_seen);
    within.points.push_back({step, r.within.mean, r.within.ci_high - r.within.mean});
    between.points.push_back({step, r.between.mean, r.between.ci_high - r.between.mean});
    for (auto& [c, s] : per_class) {
      if (auto it = r.within_by_class.find(c); it != r.within_by_class.end()) {
        s.points.push_back({step, it->second.mean, it->second.ci_high - it->second.mean});
      }
    }
    out.snapshots.push_back(std::move(r));
  }
  out.series.push_back(std::move(within));
  out.series.push_back(std::move(between));
  for (auto& [c, s] : per_class) out.series.push_back(std::move(s));
  for (const auto& s : out.series) s.check();
  return out;
}

std::vector<TokenId> read_token_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read token file " + path.string());
  const auto bytes = fs::file_size(path);
  if (bytes % 4 != 0) throw InputError("token file " + path.string() + " is not a whole number of int32 values");
  std::vector<TokenId> out(bytes / 4);
  in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(bytes));
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& t : out) {
      auto u = static_cast<std::uint32_t>(t);
      u = ((u & 0xffu) << 24) | ((u & 0xff00u) << 8) | ((u >> 8) & 0xff00u) | (u >> 24);
      t = static_cast<TokenId>(u);
    }
  }
  return out;
}

void write_token_file(const fs::path& path, std::span<const TokenId> tokens) {
  std::vector<TokenId> copy(tokens.begin(), tokens.end());
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& t : copy) {
      auto u = static_cast<std::uint32_t>(t);
      u = ((u & 0xffu) << 24) | ((u & 0xff00u) << 8) | ((u >> 8) & 0xff00u) | (u >> 24);
      t = static_cast<TokenId>(u);
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(copy.data()), static_cast<std::streamsize>(copy.size() * 4));
}

std::vector<FrameMatch> read_match_index(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read match index " + path.string());
  std::vector<FrameMatch> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (lineno == 1 && line.rfind("verb_id\t", 0) == 0) continue;
    std::istringstream ss(line);
    FrameMatch m;
    std::string vpos, ppos;
    if (!std::getline(ss, m.verb_id, '\t') || !std::getline(ss, vpos, '\t') || !std::getline(ss, ppos, '\t')) {
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected verb_id, verb_pos, prep_pos");
    }
    try {
      m.verb_pos = std::stoull(vpos);
      m.prep_pos = std::stoull(ppos);
    } catch (const std::exception&) {
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": bad position");
    }
    out.push_back(std::move(m));
  }
  return out;
}

void write_match_index(const fs::path& path, const std::vector<FrameMatch>& matches) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "verb_id\tverb_pos\tprep_pos\n";
  for (const auto& m : matches) out << m.verb_id << '\t' << m.verb_pos << '\t' << m.prep_pos << '\n';
}

std::set<TokenId> read_stopword_ids(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read stop-word list " + path.string());
  std::set<TokenId> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    long id;
    if (ss >> id) out.insert(static_cast<TokenId>(id));
  }
  return out;
}

}  // namespace lmtraj
