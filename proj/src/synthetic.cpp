#include "lmtraj/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace lmtraj {

namespace {

double ramp_weight(std::size_t t, std::size_t onset, std::size_t ramp, double amplitude) {
  if (t < onset) return 0.0;
  const double x = static_cast<double>(t - onset + 1) / static_cast<double>(std::max<std::size_t>(1, ramp));
  return amplitude * std::min(1.0, x);
}

Eigen::VectorXd gaussian_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

}  // namespace

SyntheticDump make_synthetic_dump(const SyntheticDumpSpec& spec) {
  if (spec.classes.empty() || spec.verbs_per_class == 0 || spec.prefixes_per_verb == 0 || spec.checkpoints == 0) {
    throw std::invalid_argument("synthetic dump needs classes, verbs, prefixes and checkpoints");
  }
  std::mt19937_64 rng(spec.seed);
  const int V = spec.vocab_size;

  // Zipf-like unigram base over a shuffled vocabulary.
  std::vector<int> perm(static_cast<std::size_t>(V));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Eigen::VectorXd base(V);
  for (int r = 0; r < V; ++r) base(perm[static_cast<std::size_t>(r)]) = -std::log(static_cast<double>(r) + 2.0);

  std::map<std::string, Eigen::VectorXd> class_dir;
  for (const auto& c : spec.classes) class_dir[c] = gaussian_vector(V, rng);
  const Eigen::VectorXd condition_dir = gaussian_vector(V, rng);

  struct PrefixPlan {
    std::string class_id;
    Eigen::VectorXd verb_dir;
    Eigen::VectorXd noise;
    bool gap = false;
  };
  SyntheticDump out;
  out.manifest.vocab_size = V;
  out.manifest.index.run_id = spec.run_id;
  for (std::size_t t = 0; t < spec.checkpoints; ++t) {
    out.manifest.index.steps.push_back(spec.first_step + static_cast<Step>(t) * spec.step_spacing);
  }
  out.manifest.metadata = {{"generator", "synthetic"},
                           {"seed", spec.seed},
                           {"class_onset_index", spec.class_onset},
                           {"item_onset_index", spec.item_onset}};

  std::vector<PrefixPlan> plan;
  for (const auto& c : spec.classes) {
    for (std::size_t v = 0; v < spec.verbs_per_class; ++v) {
      const std::string verb = c + "_v" + std::to_string(v);
      const Eigen::VectorXd verb_dir = gaussian_vector(V, rng);
      for (std::size_t p = 0; p < spec.prefixes_per_verb; ++p) {
        const Eigen::VectorXd noise = spec.prefix_noise * gaussian_vector(V, rng);
        const std::string source = verb + "_p" + std::to_string(p);
        if (spec.with_minimal_pairs) {
          for (bool gap : {false, true}) {
            PrefixRecord r{source + (gap ? "_gap" : "_nogap"), source, verb, c, gap ? "gap" : "no_gap", 0, source};
            out.manifest.prefixes.push_back(r);
            plan.push_back({c, verb_dir, noise, gap});
          }
        } else {
          out.manifest.prefixes.push_back(PrefixRecord{source, source, verb, c, "", 0, ""});
          plan.push_back({c, verb_dir, noise, false});
        }
      }
    }
  }

  for (std::size_t t = 0; t < spec.checkpoints; ++t) {
    const double a = ramp_weight(t, spec.class_onset, spec.ramp, spec.class_amplitude);
    const double b = ramp_weight(t, spec.item_onset, spec.ramp, spec.item_amplitude);
    StepMatrix m(static_cast<Eigen::Index>(plan.size()), V);
    for (std::size_t i = 0; i < plan.size(); ++i) {
      const auto& p = plan[i];
      Eigen::VectorXd logits = base + a * class_dir.at(p.class_id) + b * p.verb_dir + p.noise;
      if (p.gap) {
        auto it = spec.pair_onset.find(p.class_id);
        const std::size_t onset = it == spec.pair_onset.end() ? spec.item_onset : it->second;
        logits += ramp_weight(t, onset, spec.ramp, spec.condition_amplitude) * condition_dir;
      }
      m.row(static_cast<Eigen::Index>(i)) = softmax(logits).cast<float>().transpose();
    }
    out.matrices.emplace(out.manifest.index.steps[t], std::move(m));
  }
  return out;
}

DumpManifest write_synthetic_dump(const SyntheticDumpSpec& spec, const std::filesystem::path& dir) {
  auto dump = make_synthetic_dump(spec);
  write_dump(dir, dump.manifest, [&](Step s) { return dump.matrices.at(s); });
  return dump.manifest;
}

SyntheticCorpus make_synthetic_corpus(const SyntheticCorpusSpec& spec) {
  // Token layout: [0, 10) stop words, [10, 10 + 2 * verbs) verbs, one
  // preposition, then content tokens.
  constexpr TokenId kStopCount = 10;
  constexpr TokenId kThe = 0;
  const auto n_verbs = static_cast<TokenId>(2 * spec.verbs_per_class);
  const TokenId prep = kStopCount + n_verbs;
  const TokenId content_begin = prep + 1;
  const int content = spec.vocab_size - content_begin;
  if (content < static_cast<int>(2 * spec.class_support)) throw std::invalid_argument("vocabulary too small for class supports");

  std::mt19937_64 rng(spec.seed);
  SyntheticCorpus out;
  out.vocab_size = spec.vocab_size;
  for (TokenId t = 0; t < kStopCount; ++t) out.stopword_ids.insert(t);

  std::vector<TokenId> content_ids(static_cast<std::size_t>(content));
  std::iota(content_ids.begin(), content_ids.end(), content_begin);
  std::shuffle(content_ids.begin(), content_ids.end(), rng);

  // Filler text: Zipf over all content tokens plus stop words.
  std::vector<double> filler_w(static_cast<std::size_t>(content + kStopCount));
  for (std::size_t r = 0; r < filler_w.size(); ++r) filler_w[r] = 1.0 / (static_cast<double>(r) + 1.0);
  std::vector<TokenId> filler_ids(content_ids.begin(), content_ids.end());
  for (TokenId t = 0; t < kStopCount; ++t) filler_ids.insert(filler_ids.begin() + t, t);
  std::discrete_distribution<std::size_t> filler(filler_w.begin(), filler_w.end());

  // Class generators: a shared block plus a class-specific block, Zipf weighted
  // in an independent random order per class.
  const auto shared = static_cast<std::size_t>(spec.class_overlap * static_cast<double>(spec.class_support));
  const std::size_t own = spec.class_support - shared;
  struct Generator {
    std::vector<TokenId> ids;
    std::discrete_distribution<std::size_t> dist;
    double burst;
  };
  std::vector<Generator> gens;
  for (int c = 0; c < 2; ++c) {
    std::vector<TokenId> ids(content_ids.begin(), content_ids.begin() + static_cast<std::ptrdiff_t>(shared));
    const auto off = static_cast<std::ptrdiff_t>(shared + static_cast<std::size_t>(c) * own);
    ids.insert(ids.end(), content_ids.begin() + off, content_ids.begin() + off + static_cast<std::ptrdiff_t>(own));
    std::shuffle(ids.begin(), ids.end(), rng);
    std::vector<double> w(ids.size());
    for (std::size_t r = 0; r < w.size(); ++r) w[r] = 1.0 / (static_cast<double>(r) + 1.0);
    gens.push_back({std::move(ids), std::discrete_distribution<std::size_t>(w.begin(), w.end()),
                    c == 0 ? spec.burst_a : spec.burst_b});
  }

  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t v = 0; v < spec.verbs_per_class; ++v) {
      const std::string verb = (c == 0 ? out.class_a : out.class_b) + "_v" + std::to_string(v);
      out.verbs.push_back(verb);
      out.class_of[verb] = c == 0 ? out.class_a : out.class_b;
    }
  }

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick_verb(0, out.verbs.size() - 1);
  const double frame_rate = 1.0 / static_cast<double>(spec.frame_every);
  const std::size_t frame_len = 3 + spec.window;
  std::vector<std::vector<TokenId>> doc_cache(out.verbs.size());
  std::uint64_t doc_end = spec.doc_length;

  out.tokens.reserve(spec.tokens);
  while (out.tokens.size() < spec.tokens) {
    const std::uint64_t pos = out.tokens.size();
    if (pos >= doc_end) {
      for (auto& c : doc_cache) c.clear();
      doc_end += spec.doc_length;
    }
    if (unif(rng) < frame_rate && pos + frame_len <= spec.tokens) {
      const std::size_t v = pick_verb(rng);
      auto& gen = gens[v < spec.verbs_per_class ? 0 : 1];
      out.matches.push_back({out.verbs[v], pos, pos + 1});
      out.tokens.push_back(kStopCount + static_cast<TokenId>(v));
      out.tokens.push_back(prep);
      out.tokens.push_back(kThe);
      for (std::size_t k = 0; k < spec.window; ++k) {
        auto& cache = doc_cache[v];
        TokenId t;
        if (!cache.empty() && unif(rng) < gen.burst) {
          std::uniform_int_distribution<std::size_t> pick(0, cache.size() - 1);
          t = cache[pick(rng)];
        } else {
          t = gen.ids[gen.dist(rng)];
        }
        cache.push_back(t);
        out.tokens.push_back(t);
      }
    } else {
      out.tokens.push_back(filler_ids[filler(rng)]);
    }
  }
  return out;
}

}  // namespace lmtraj
