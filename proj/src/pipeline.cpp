#include "lmtraj/pipeline.hpp"

#include "lmtraj/tidy_io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

namespace lmtraj {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

template <typename T>
T value_or(const json& j, const char* key, T fallback) {
  return j.contains(key) && !j[key].is_null() ? j[key].get<T>() : fallback;
}

std::optional<std::string> opt_string(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<std::string>();
}

json opt_json(const std::optional<std::string>& v) { return v ? json(*v) : json(); }

void require_path(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw InputError(what + " not found: " + p.string());
}

// Path-safe rendering of an id.
std::string slug(std::string s) {
  for (char& c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
  }
  return s;
}

struct LoadedRun {
  std::string run_id;
  std::unique_ptr<DistributionDump> dump;
};

// Re-labels the dump when the config supplies its own run id.
LoadedRun load_run(const RunSpec& spec) {
  auto dump = std::make_unique<DistributionDump>(spec.dump);
  if (!spec.run_id.empty() && spec.run_id != dump->run_id()) {
    auto manifest = dump->manifest();
    manifest.index.run_id = spec.run_id;
    std::map<Step, StepMatrix> steps;
    for (Step s : manifest.index.steps) steps.emplace(s, *dump->step_matrix(s));
    dump = std::make_unique<DistributionDump>(std::move(manifest), std::move(steps));
  }
  const auto id = dump->run_id();
  return {id, std::move(dump)};
}

std::vector<Label> contrast_labels(const DistributionDump& dump, const std::vector<std::string>& classes,
                                   const std::string& condition) {
  std::vector<Label> out;
  const auto& prefixes = dump.prefixes();
  std::set<std::string> seen;
  for (const auto& p : prefixes) {
    if (p.condition_id != condition) continue;
    if (!classes.empty() && std::find(classes.begin(), classes.end(), p.class_id) == classes.end()) continue;
    if (seen.insert(p.verb_id).second) out.push_back({p.verb_id, p.class_id, condition});
  }
  return class_contiguous(std::move(out));
}

std::vector<Label> class_only_labels(const DistributionDump& dump, const std::string& class_id) {
  std::vector<Label> out;
  for (const auto& v : dump.verbs(class_id)) out.push_back({v, class_id, ""});
  return out;
}

std::map<std::string, std::string> baseline_classes(const RunConfig& config) {
  const auto& b = *config.baseline;
  if (!b.class_of.empty()) return b.class_of;
  if (!config.lexicon) throw InputError("baseline needs a verb-to-class map or a lexicon");
  return VerbLexicon::load(*config.lexicon).class_map();
}

}  // namespace

RunConfig RunConfig::from_json(const json& j, const fs::path& base_dir) {
  RunConfig c;
  try {
    for (const auto& r : j.value("runs", json::array())) {
      c.runs.push_back({value_or<std::string>(r, "run_id", ""), resolve(base_dir, r.at("dump").get<std::string>())});
    }
    if (auto lex = opt_string(j, "lexicon")) c.lexicon = resolve(base_dir, *lex);
    c.alpha = value_or(j, "alpha", kDefaultAlpha);
    if (j.contains("breakpoint")) {
      c.breakpoint_delta = value_or(j["breakpoint"], "delta", kDefaultBreakpointDelta);
      c.breakpoint_window = value_or<std::size_t>(j["breakpoint"], "window", kDefaultBaselineWindow);
    }
    for (const auto& p : j.value("class_pairs", json::array())) {
      c.class_pairs.push_back({p.at("class_a"), p.at("class_b"), opt_string(p, "condition")});
    }
    c.grid_steps = j.value("grid_steps", std::vector<Step>{});
    for (const auto& x : j.value("contrasts", json::array())) {
      ContrastSpec s;
      s.name = x.at("name");
      s.by_condition = x.value("by", std::string("condition")) == "condition";
      s.classes = x.value("classes", std::vector<std::string>{});
      s.first = x.at("first");
      s.second = x.at("second");
      c.contrasts.push_back(std::move(s));
    }
    for (const auto& x : j.value("minimal_pairs", json::array())) {
      c.minimal_pairs.push_back({{x.at("first"), x.at("second")}, x.value("classes", std::vector<std::string>{})});
    }
    for (const auto& x : j.value("breakpoints", json::array())) {
      c.breakpoints.push_back({x.at("class_a"), x.at("class_b"), {x.at("first"), x.at("second")}});
    }
    if (j.contains("nouns") && !j["nouns"].is_null()) {
      const auto& n = j["nouns"];
      NounSpec s;
      for (const auto& t : n.at("targets")) {
        s.targets.push_back({t.at("label"), t.at("token_id").get<int>(), t.value("prototype_class", std::string())});
      }
      s.classes = n.value("classes", std::vector<std::string>{});
      s.condition = opt_string(n, "condition");
      s.window_steps = n.value("window_steps", std::size_t{0});
      c.nouns = std::move(s);
    }
    if (j.contains("baseline") && !j["baseline"].is_null()) {
      const auto& b = j["baseline"];
      BaselineSpec s;
      s.tokens = resolve(base_dir, b.at("tokens").get<std::string>());
      s.matches = resolve(base_dir, b.at("matches").get<std::string>());
      if (auto sw = opt_string(b, "stopwords")) s.stopwords = resolve(base_dir, *sw);
      s.vocab_size = b.at("vocab_size");
      s.class_a = b.at("class_a");
      s.class_b = b.at("class_b");
      s.class_of = b.value("classes", std::map<std::string, std::string>{});
      s.config.window = b.value("window", std::size_t{10});
      s.config.smoothing_k = b.value("k", 0.5);
      s.config.snapshot_schedule = b.value("schedule", std::vector<std::uint64_t>{});
      const auto anchor = b.value("anchor", std::string("after_preposition"));
      if (anchor == "after_verb") s.config.anchor = WindowAnchor::AfterVerb;
      else if (anchor == "after_preposition") s.config.anchor = WindowAnchor::AfterPreposition;
      else throw InputError("baseline anchor must be after_verb or after_preposition, got " + anchor);
      s.snapshots = b.value("snapshots", std::size_t{12});
      s.max_tokens = b.value("max_tokens", std::uint64_t{0});
      s.shards = b.value("shards", std::size_t{1});
      s.export_grids = b.value("export_grids", true);
      c.baseline = std::move(s);
    }
    c.output_dir = resolve(base_dir, j.value("output_dir", std::string("out")));
  } catch (const json::exception& e) {
    throw InputError(std::string("invalid config: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw InputError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j, path.parent_path());
}

json RunConfig::to_json() const {
  json j;
  j["runs"] = json::array();
  for (const auto& r : runs) j["runs"].push_back({{"run_id", r.run_id}, {"dump", r.dump.string()}});
  j["lexicon"] = lexicon ? json(lexicon->string()) : json();
  j["alpha"] = alpha;
  j["breakpoint"] = {{"delta", breakpoint_delta}, {"window", breakpoint_window}};
  j["class_pairs"] = json::array();
  for (const auto& p : class_pairs) {
    j["class_pairs"].push_back({{"class_a", p.class_a}, {"class_b", p.class_b}, {"condition", opt_json(p.condition)}});
  }
  j["grid_steps"] = grid_steps;
  j["contrasts"] = json::array();
  for (const auto& x : contrasts) {
    j["contrasts"].push_back({{"name", x.name},
                              {"by", x.by_condition ? "condition" : "class"},
                              {"classes", x.classes},
                              {"first", x.first},
                              {"second", x.second}});
  }
  j["minimal_pairs"] = json::array();
  for (const auto& x : minimal_pairs) {
    j["minimal_pairs"].push_back({{"first", x.conditions.first}, {"second", x.conditions.second}, {"classes", x.classes}});
  }
  j["breakpoints"] = json::array();
  for (const auto& x : breakpoints) {
    j["breakpoints"].push_back({{"class_a", x.class_a},
                                {"class_b", x.class_b},
                                {"first", x.conditions.first},
                                {"second", x.conditions.second}});
  }
  if (nouns) {
    json t = json::array();
    for (const auto& n : nouns->targets) {
      t.push_back({{"label", n.label}, {"token_id", n.token_id}, {"prototype_class", n.prototype_class}});
    }
    j["nouns"] = {{"targets", t},
                  {"classes", nouns->classes},
                  {"condition", opt_json(nouns->condition)},
                  {"window_steps", nouns->window_steps}};
  } else {
    j["nouns"] = nullptr;
  }
  if (baseline) {
    const auto& b = *baseline;
    j["baseline"] = {{"tokens", b.tokens.string()},
                     {"matches", b.matches.string()},
                     {"stopwords", b.stopwords ? json(b.stopwords->string()) : json()},
                     {"vocab_size", b.vocab_size},
                     {"class_a", b.class_a},
                     {"class_b", b.class_b},
                     {"classes", b.class_of},
                     {"window", b.config.window},
                     {"k", b.config.smoothing_k},
                     {"schedule", b.config.snapshot_schedule},
                     {"anchor", b.config.anchor == WindowAnchor::AfterVerb ? "after_verb" : "after_preposition"},
                     {"snapshots", b.snapshots},
                     {"max_tokens", b.max_tokens},
                     {"shards", b.shards},
                     {"export_grids", b.export_grids}};
  } else {
    j["baseline"] = nullptr;
  }
  j["output_dir"] = output_dir.string();
  return j;
}

void RunConfig::check() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must be in (0, 1), got " + format_double(alpha));
  if (!(breakpoint_delta >= 0.0)) throw InputError("breakpoint delta must be non-negative");
  if (breakpoint_window < 1) throw InputError("breakpoint window must be at least 1");
  for (const auto& r : runs) require_path(r.dump, "dump");
  if (lexicon) require_path(*lexicon, "lexicon");
  if (baseline) {
    require_path(baseline->tokens, "baseline token file");
    require_path(baseline->matches, "baseline match index");
    if (baseline->stopwords) require_path(*baseline->stopwords, "stop-word list");
    if (baseline->vocab_size <= 0) throw InputError("baseline vocab_size must be positive");
    if (!(baseline->config.smoothing_k > 0.0)) throw InputError("smoothing k must be positive");
    if (baseline->config.window < 1) throw InputError("baseline window must be at least 1");
    if (baseline->shards < 1) throw InputError("baseline shards must be at least 1");
  }
  if (runs.empty() && !baseline) throw InputError("config lists no runs and no baseline");
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("SHA-256 init failed");
  std::vector<char> buf(1 << 20);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

std::vector<std::string> lexicon_mismatches(const DumpManifest& manifest, const VerbLexicon& lexicon) {
  const auto classes = lexicon.classes();
  std::vector<std::string> out;
  for (const auto& p : manifest.prefixes) {
    if (std::find(classes.begin(), classes.end(), p.class_id) == classes.end()) continue;
    const auto* e = lexicon.find(p.verb_id);
    if (e == nullptr) {
      out.push_back(p.prefix_id + ": verb '" + p.verb_id + "' is not in the lexicon");
    } else if (e->class_id != p.class_id) {
      out.push_back(p.prefix_id + ": verb '" + p.verb_id + "' is filed under " + e->class_id + ", not " + p.class_id);
    }
  }
  return out;
}

std::vector<std::string> run_analyze(const RunConfig& config) {
  std::vector<std::string> outputs;
  std::vector<TrajectorySeries> series;
  for (const auto& spec : config.runs) {
    const auto run = load_run(spec);
    const auto& dump = *run.dump;
    for (const auto& pair : config.class_pairs) {
      const std::string pair_name = pair.class_a + "-" + pair.class_b + (pair.condition ? ":" + *pair.condition : "");
      auto fractions = class_fraction_curve(dump, pair.class_a, pair.class_b, config.alpha, pair.condition);
      series.push_back(std::move(fractions.canonical));
      series.push_back(std::move(fractions.reversed));
      for (auto& [cls, s] : fractions.per_class) series.push_back(std::move(s));
      for (const auto& cls : {pair.class_a, pair.class_b}) {
        series.push_back(item_learning_curve(dump, cls, pair.condition));
      }
      if (!config.grid_steps.empty()) {
        auto labels = class_labels(dump, {pair.class_a, pair.class_b}, pair.condition.value_or(""));
        for (Step step : config.grid_steps) {
          if (!dump.index().position(step)) {
            throw InputError("grid step " + std::to_string(step) + " is not a checkpoint of run " + run.run_id);
          }
          const auto grid = pairwise_grid(dump, step, labels);
          const fs::path rel = fs::path("grids") / slug(run.run_id) / slug(pair_name) / ("step_" + std::to_string(step));
          export_grid(grid, config.output_dir / fs::path(rel.string() + ".csv"),
                      config.output_dir / fs::path(rel.string() + ".json"));
          outputs.push_back(rel.string() + ".csv");
          outputs.push_back(rel.string() + ".json");
        }
      }
    }
    for (const auto& c : config.contrasts) {
      std::vector<Label> a, b;
      if (c.by_condition) {
        a = contrast_labels(dump, c.classes, c.first);
        b = contrast_labels(dump, c.classes, c.second);
      } else {
        a = class_only_labels(dump, c.first);
        b = class_only_labels(dump, c.second);
      }
      series.push_back(condition_class_metric(dump, a, b, config.alpha, "contrast/" + c.name));
    }
    for (const auto& m : config.minimal_pairs) {
      series.push_back(minimal_pair_curve(dump, m.conditions));
      for (const auto& cls : m.classes) series.push_back(minimal_pair_curve(dump, m.conditions, std::nullopt, cls));
    }
  }
  write_text_atomic(config.output_dir / "series.csv", series_csv(series));
  outputs.insert(outputs.begin(), "series.csv");
  return outputs;
}

std::vector<std::string> run_nouns(const RunConfig& config) {
  if (!config.nouns) return {};
  const auto& spec = *config.nouns;
  json runs = json::array();
  for (const auto& r : config.runs) {
    const auto run = load_run(r);
    std::vector<Label> verbs;
    const auto& classes = spec.classes;
    if (classes.empty()) {
      for (const auto& v : run.dump->verbs()) verbs.push_back({v, run.dump->class_of(v), spec.condition.value_or("")});
    } else {
      verbs = class_labels(*run.dump, classes, spec.condition.value_or(""));
    }
    json windows = json::array();
    for (const auto& w : noun_trajectory_correlations(*run.dump, spec.targets, verbs, spec.window_steps)) {
      windows.push_back(to_json(w));
    }
    runs.push_back({{"run_id", run.run_id}, {"windows", windows}});
  }
  write_json_atomic(config.output_dir / "nouns.json", {{"ci", "normal_95"}, {"runs", runs}});
  return {"nouns.json"};
}

std::vector<std::string> run_breakpoints(const RunConfig& config) {
  if (config.breakpoints.empty()) return {};
  json runs = json::array();
  std::vector<TrajectorySeries> per_verb;
  for (const auto& r : config.runs) {
    const auto run = load_run(r);
    json comparisons = json::array();
    for (const auto& b : config.breakpoints) {
      auto builder = [&](const std::string& verb) {
        auto s = minimal_pair_curve(*run.dump, b.conditions, verb);
        per_verb.push_back(s);
        return s;
      };
      const auto verbs_a = run.dump->verbs(b.class_a);
      const auto verbs_b = run.dump->verbs(b.class_b);
      comparisons.push_back(to_json(class_breakpoint_compare(b.class_a, verbs_a, b.class_b, verbs_b, builder,
                                                             config.breakpoint_delta, config.breakpoint_window)));
    }
    runs.push_back({{"run_id", run.run_id}, {"comparisons", comparisons}});
  }
  write_json_atomic(config.output_dir / "breakpoints.json",
                    {{"delta", config.breakpoint_delta}, {"window", config.breakpoint_window}, {"runs", runs}});
  write_text_atomic(config.output_dir / "breakpoint_series.csv", series_csv(per_verb));
  return {"breakpoints.json", "breakpoint_series.csv"};
}

std::vector<std::string> run_baseline(const RunConfig& config) {
  if (!config.baseline) return {};
  const auto& spec = *config.baseline;
  const auto tokens = read_token_file(spec.tokens);
  const auto matches = read_match_index(spec.matches);
  BaselineConfig bc = spec.config;
  if (spec.stopwords) bc.stopword_ids = read_stopword_ids(*spec.stopwords);
  if (bc.snapshot_schedule.empty()) {
    const std::uint64_t max_tokens = spec.max_tokens == 0 ? tokens.size() : spec.max_tokens;
    bc.snapshot_schedule = geometric_schedule(max_tokens, spec.snapshots);
  }
  const auto class_of = baseline_classes(config);
  std::vector<std::string> known;
  for (const auto& [verb, cls] : class_of) {
    if (cls == spec.class_a || cls == spec.class_b) known.push_back(verb);
  }
  const auto snaps = stream_count(tokens, matches, spec.vocab_size, bc, spec.shards, known);
  const auto curves = baseline_divergence_curves(snaps, class_of, spec.class_a, spec.class_b, bc.smoothing_k);

  std::vector<std::string> outputs{"baseline/series.csv", "baseline/summary.json"};
  write_text_atomic(config.output_dir / "baseline/series.csv", series_csv(curves.series));
  json snaps_json = json::array();
  for (const auto& s : curves.snapshots) {
    json by_class = json::object();
    for (const auto& [c, sum] : s.within_by_class) by_class[c] = {{"mean", sum.mean}, {"ci_low", sum.ci_low}, {"ci_high", sum.ci_high}, {"n", sum.n}};
    snaps_json.push_back({{"tokens_seen", s.tokens_seen},
                          {"within", {{"mean", s.within.mean}, {"ci_low", s.within.ci_low}, {"ci_high", s.within.ci_high}, {"n", s.within.n}}},
                          {"between", {{"mean", s.between.mean}, {"ci_low", s.between.ci_low}, {"ci_high", s.between.ci_high}, {"n", s.between.n}}},
                          {"within_by_class", by_class}});
    if (spec.export_grids) {
      const std::string rel = "baseline/grids/tokens_" + std::to_string(s.tokens_seen);
      export_grid(s.grid, config.output_dir / (rel + ".csv"), config.output_dir / (rel + ".json"));
      outputs.push_back(rel + ".csv");
      outputs.push_back(rel + ".json");
    }
  }
  write_json_atomic(config.output_dir / "baseline/summary.json",
                    {{"window", bc.window},
                     {"k", bc.smoothing_k},
                     {"anchor", bc.anchor == WindowAnchor::AfterVerb ? "after_verb" : "after_preposition"},
                     {"schedule", bc.snapshot_schedule},
                     {"corpus_tokens", tokens.size()},
                     {"matches", matches.size()},
                     {"snapshots", snaps_json}});
  return outputs;
}

void write_run_manifest(const RunConfig& config, const std::vector<std::string>& outputs) {
  json inputs = json::array();
  auto add = [&](const std::string& role, const fs::path& p) {
    inputs.push_back({{"role", role}, {"path", p.string()}, {"sha256", sha256_file(p)}});
  };
  for (const auto& r : config.runs) {
    const auto manifest = read_manifest(r.dump);
    add("dump_manifest", r.dump / "manifest.json");
    for (Step s : manifest.index.steps) add("dump_step", step_file(r.dump, s));
  }
  if (config.lexicon) add("lexicon", *config.lexicon);
  if (config.baseline) {
    add("baseline_tokens", config.baseline->tokens);
    add("baseline_matches", config.baseline->matches);
    if (config.baseline->stopwords) add("stopwords", *config.baseline->stopwords);
  }
  json outs = json::array();
  auto sorted = outputs;
  std::sort(sorted.begin(), sorted.end());
  for (const auto& o : sorted) outs.push_back({{"path", o}, {"sha256", sha256_file(config.output_dir / o)}});
  const auto cfg = config.to_json();
  write_json_atomic(config.output_dir / "manifest.json",
                    {{"config", cfg}, {"config_sha256", sha256_hex(cfg.dump())}, {"inputs", inputs}, {"outputs", outs}});
}

std::vector<std::string> run_pipeline(const RunConfig& config) {
  config.check();
  std::vector<std::string> outputs;
  if (!config.runs.empty()) {
    for (auto&& f : run_analyze(config)) outputs.push_back(std::move(f));
    for (auto&& f : run_nouns(config)) outputs.push_back(std::move(f));
    for (auto&& f : run_breakpoints(config)) outputs.push_back(std::move(f));
  }
  for (auto&& f : run_baseline(config)) outputs.push_back(std::move(f));
  write_run_manifest(config, outputs);
  outputs.push_back("manifest.json");
  return outputs;
}

json report(const fs::path& output_dir, double delta, std::size_t window) {
  json out = json::array();
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(output_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    const auto text = read_text(f);
    if (text.rfind(std::string(kSeriesHeader), 0) != 0) continue;
    for (const auto& s : parse_series_csv(text)) {
      const auto v = s.values();
      if (v.empty()) continue;
      json entry{{"file", fs::relative(f, output_dir).string()},
                 {"run_id", s.run_id},
                 {"metric", s.metric_name},
                 {"points", v.size()},
                 {"first_step", s.points.front().step},
                 {"last_step", s.points.back().step},
                 {"min", *std::min_element(v.begin(), v.end())},
                 {"max", *std::max_element(v.begin(), v.end())},
                 {"final", v.back()}};
      json onset;
      for (const auto& p : s.points) {
        if (p.value > 0.0) {
          onset = p.step;
          break;
        }
      }
      entry["first_nonzero_step"] = onset;
      if (v.size() > window) {
        const auto bp = breakpoint_detect(s, delta, window);
        entry["breakpoint_step"] = bp.breakpoint_step ? json(*bp.breakpoint_step) : json();
      }
      out.push_back(std::move(entry));
    }
  }
  return out;
}

}  // namespace lmtraj
