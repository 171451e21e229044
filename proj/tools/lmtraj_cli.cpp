// lmtraj command-line front end. Exit codes: 0 success, 1 validation failure
// (bad input, config or schema), 2 runtime failure. Errors are logged to
// stderr as one JSON object per line.

#include "lmtraj/benchmark.hpp"
#include "lmtraj/conllu.hpp"
#include "lmtraj/frames.hpp"
#include "lmtraj/parallel.hpp"
#include "lmtraj/pipeline.hpp"
#include "lmtraj/relative_clause.hpp"
#include "lmtraj/synthetic.hpp"
#include "lmtraj/tidy_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lmtraj;

namespace {

struct ValidationFailure : std::runtime_error {
  json detail;
  ValidationFailure(const std::string& what, json d) : std::runtime_error(what), detail(std::move(d)) {}
};

struct Overrides {
  std::string config;
  std::string out;
  std::optional<double> alpha;
  std::optional<double> delta;
  std::optional<std::size_t> window;
  std::optional<double> k;
};

void add_config_options(CLI::App* cmd, Overrides& o, bool with_overrides) {
  cmd->add_option("--config", o.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "Output directory (overrides the config)");
  if (with_overrides) {
    cmd->add_option("--alpha", o.alpha, "Significance threshold");
    cmd->add_option("--delta", o.delta, "Breakpoint margin above the baseline mean");
    cmd->add_option("--window", o.window, "Breakpoint baseline window (checkpoints)");
    cmd->add_option("--k", o.k, "Add-k smoothing for the count baseline");
  }
}

RunConfig load_config(const Overrides& o) {
  auto config = RunConfig::load(o.config);
  if (!o.out.empty()) config.output_dir = o.out;
  if (o.alpha) config.alpha = *o.alpha;
  if (o.delta) config.breakpoint_delta = *o.delta;
  if (o.window) config.breakpoint_window = *o.window;
  if (o.k && config.baseline) config.baseline->config.smoothing_k = *o.k;
  config.check();
  return config;
}

void print_outputs(const RunConfig& config, const std::vector<std::string>& outputs) {
  json j{{"output_dir", config.output_dir.string()}, {"files", outputs}};
  std::cout << j.dump(2) << '\n';
}

json prefix_table(const std::vector<PrefixRecord>& records, json provenance) {
  return {{"prefixes", records}, {"provenance", std::move(provenance)}};
}

std::vector<ParsedSentence> read_sentences(const std::vector<std::string>& files, json& diagnostics) {
  std::vector<ParsedSentence> all;
  for (const auto& f : files) {
    auto r = read_conllu_file(f);
    for (const auto& d : r.diagnostics) {
      diagnostics.push_back({{"file", f}, {"line", d.line}, {"sent_id", d.sent_id}, {"message", d.message}});
    }
    for (auto& s : r.sentences) all.push_back(std::move(s));
  }
  return all;
}

int cmd_validate(const std::string& dump, const std::string& outputs, const std::string& lexicon) {
  if (!outputs.empty()) {
    const auto problems = validate_output_dir(outputs);
    json j = json::array();
    for (const auto& p : problems) j.push_back({{"file", p.file.string()}, {"detail", p.detail}});
    std::cout << json{{"output_dir", outputs}, {"problems", j}}.dump(2) << '\n';
    if (!problems.empty()) throw ValidationFailure("output schema validation failed", j);
    return 0;
  }
  if (dump.empty()) throw ValidationFailure("validate needs a dump directory or --outputs", json());
  if (!fs::exists(dump)) throw ValidationFailure("dump not found: " + dump, json());
  const auto report = validate_dump(dump);
  json j = report.to_json();
  json mismatches = json::array();
  if (!lexicon.empty()) {
    for (const auto& m : lexicon_mismatches(read_manifest(dump), VerbLexicon::load(lexicon))) mismatches.push_back(m);
    j["lexicon_mismatches"] = mismatches;
  }
  std::cout << j.dump(2) << '\n';
  if (!report.empty() || !mismatches.empty()) throw ValidationFailure("dump validation reported issues", j);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learning-trajectory analysis of next-token distribution dumps"};
  app.require_subcommand(1);
  unsigned jobs = 0;
  app.add_option("--jobs", jobs, "Worker threads (0 = all cores)");

  // validate
  std::string v_dump, v_outputs, v_lexicon;
  auto* validate = app.add_subcommand("validate", "Check a dump directory or an output directory");
  validate->add_option("dump", v_dump, "Dump directory");
  validate->add_option("--outputs", v_outputs, "Validate CSV/JSON outputs against their schemas instead");
  validate->add_option("--lexicon", v_lexicon, "Also check prefix verbs and classes against a lexicon");

  // filter
  std::vector<std::string> f_conllu;
  std::vector<std::string> f_classes;
  std::string f_lexicon = VerbLexicon::bundled_path().string();
  std::string f_out = "frames";
  std::string f_merge, f_prefixes;
  auto* filter = app.add_subcommand("filter", "Frame-filter CoNLL-U sentences into prefixes and a review queue");
  filter->add_option("--conllu", f_conllu, "CoNLL-U files");
  filter->add_option("--lexicon", f_lexicon, "Verb lexicon TSV")->check(CLI::ExistingFile);
  filter->add_option("--classes", f_classes, "Classes to match (default: all four)");
  filter->add_option("--out", f_out, "Output directory");
  filter->add_option("--merge-review", f_merge, "Merge a reviewed queue into --prefixes")->check(CLI::ExistingFile);
  filter->add_option("--prefixes", f_prefixes, "Prefix table to merge into")->check(CLI::ExistingFile);

  // pairs
  std::vector<std::string> p_conllu;
  std::string p_benchmark, p_lexicon = VerbLexicon::bundled_path().string(), p_out = "pairs.json";
  std::vector<std::string> p_embedding{"thinks"};
  bool p_all_embedding = false;
  auto* pairs = app.add_subcommand("pairs", "Build minimal-pair prefixes (relative clause or benchmark)");
  pairs->add_option("--conllu", p_conllu, "CoNLL-U frame sentences for relative-clause pairs");
  pairs->add_option("--benchmark", p_benchmark, "Line-delimited JSON minimal pairs")->check(CLI::ExistingFile);
  pairs->add_option("--lexicon", p_lexicon, "Verb lexicon TSV")->check(CLI::ExistingFile);
  pairs->add_option("--embedding", p_embedding, "Embedding verbs for the no-gap member");
  pairs->add_flag("--all-embedding", p_all_embedding, "Use all nine embedding verbs");
  pairs->add_option("--out", p_out, "Output prefix table (JSON)");

  Overrides analyze_o, nouns_o, baseline_o, breakpoints_o, run_o;
  auto* analyze = app.add_subcommand("analyze", "Class-fraction, item, contrast and minimal-pair curves; grids");
  add_config_options(analyze, analyze_o, true);
  auto* nouns = app.add_subcommand("nouns", "Noun-trajectory Spearman correlations");
  add_config_options(nouns, nouns_o, true);
  auto* baseline = app.add_subcommand("baseline", "Count-based exemplar baseline curves");
  add_config_options(baseline, baseline_o, true);
  auto* breakpoints = app.add_subcommand("breakpoints", "Per-verb breakpoints and class comparison");
  add_config_options(breakpoints, breakpoints_o, true);
  auto* run = app.add_subcommand("run", "Every configured stage plus the run manifest");
  add_config_options(run, run_o, true);

  std::string r_out;
  double r_delta = kDefaultBreakpointDelta;
  std::size_t r_window = kDefaultBaselineWindow;
  auto* rep = app.add_subcommand("report", "Summarise every series in an output directory");
  rep->add_option("--out", r_out, "Output directory to summarise")->required()->check(CLI::ExistingDirectory);
  rep->add_option("--delta", r_delta, "Breakpoint margin");
  rep->add_option("--window", r_window, "Breakpoint baseline window");

  // synth
  auto* synth = app.add_subcommand("synth", "Write seeded synthetic inputs");
  synth->require_subcommand(1);
  SyntheticDumpSpec sd;
  std::string sd_out;
  auto* synth_dump = synth->add_subcommand("dump", "Synthetic distribution dump");
  synth_dump->add_option("--out", sd_out, "Dump directory")->required();
  synth_dump->add_option("--seed", sd.seed);
  synth_dump->add_option("--verbs-per-class", sd.verbs_per_class);
  synth_dump->add_option("--prefixes-per-verb", sd.prefixes_per_verb);
  synth_dump->add_option("--checkpoints", sd.checkpoints);
  synth_dump->add_option("--step-spacing", sd.step_spacing);
  synth_dump->add_option("--vocab", sd.vocab_size);
  synth_dump->add_option("--class-onset", sd.class_onset);
  synth_dump->add_option("--item-onset", sd.item_onset);
  synth_dump->add_option("--run-id", sd.run_id);
  synth_dump->add_flag("--minimal-pairs", sd.with_minimal_pairs);
  SyntheticCorpusSpec sc;
  std::string sc_out;
  auto* synth_corpus = synth->add_subcommand("corpus", "Synthetic token stream and match index");
  synth_corpus->add_option("--out", sc_out, "Output directory")->required();
  synth_corpus->add_option("--tokens", sc.tokens);
  synth_corpus->add_option("--seed", sc.seed);

  CLI11_PARSE(app, argc, argv);
  max_jobs() = jobs;

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (*validate) return cmd_validate(v_dump, v_outputs, v_lexicon);

    if (*filter) {
      if (!f_merge.empty()) {
        if (f_prefixes.empty()) throw ValidationFailure("--merge-review needs --prefixes", json());
        const auto table = json::parse(read_text(f_prefixes));
        std::vector<ReviewItem> pending;
        const auto merged = merge_review(table.at("prefixes").get<std::vector<PrefixRecord>>(), f_merge, &pending);
        write_json_atomic(fs::path(f_out) / "prefixes.json",
                          prefix_table(merged, {{"merged_review", f_merge}, {"pending_review", pending.size()}}));
        std::cout << json{{"prefixes", merged.size()}, {"pending_review", pending.size()}}.dump(2) << '\n';
        return 0;
      }
      if (f_conllu.empty()) throw ValidationFailure("filter needs --conllu files", json());
      const auto lexicon = VerbLexicon::load(f_lexicon);
      json diagnostics = json::array();
      const auto sentences = read_sentences(f_conllu, diagnostics);
      std::vector<FramePattern> patterns;
      if (f_classes.empty()) patterns = default_patterns();
      for (const auto& c : f_classes) patterns.push_back(FramePattern::for_class(c));
      const auto result = filter_frames(sentences, lexicon, patterns);
      write_json_atomic(fs::path(f_out) / "prefixes.json",
                        prefix_table(result.accepted, {{"conllu", f_conllu}, {"lexicon", f_lexicon}}));
      write_review_queue(fs::path(f_out) / "review_queue.tsv", result.review);
      json summary{{"sentences", sentences.size()},
                   {"accepted", result.accepted.size()},
                   {"review", result.review.size()},
                   {"rejected", result.rejected},
                   {"skipped_malformed", diagnostics}};
      write_json_atomic(fs::path(f_out) / "filter_summary.json", summary);
      std::cout << summary.dump(2) << '\n';
      return 0;
    }

    if (*pairs) {
      if (!p_benchmark.empty()) {
        const auto r = load_benchmark_file(p_benchmark);
        write_json_atomic(p_out, prefix_table(r.records, {{"benchmark", p_benchmark}}));
        std::cout << json{{"prefixes", r.records.size()}, {"skipped", r.skipped}, {"diagnostics", r.diagnostics}}.dump(2)
                  << '\n';
        return 0;
      }
      if (p_conllu.empty()) throw ValidationFailure("pairs needs --conllu or --benchmark", json());
      json diagnostics = json::array();
      const auto sentences = read_sentences(p_conllu, diagnostics);
      const auto r = generate_rc_pairs(sentences, VerbLexicon::load(p_lexicon),
                                       p_all_embedding ? kEmbeddingVerbs : p_embedding);
      write_json_atomic(p_out, prefix_table(r.records, {{"conllu", p_conllu}, {"lexicon", p_lexicon}}));
      std::cout << json{{"prefixes", r.records.size()},
                        {"sentences_used", r.sentences_used},
                        {"no_frame", r.no_frame},
                        {"missing_argument", r.missing_argument},
                        {"noncontiguous", r.noncontiguous},
                        {"skipped_malformed", diagnostics}}
                       .dump(2)
                << '\n';
      return 0;
    }

    if (*analyze) {
      const auto c = load_config(analyze_o);
      print_outputs(c, run_analyze(c));
      return 0;
    }
    if (*nouns) {
      const auto c = load_config(nouns_o);
      if (!c.nouns) throw ValidationFailure("config has no nouns section", json());
      print_outputs(c, run_nouns(c));
      return 0;
    }
    if (*baseline) {
      const auto c = load_config(baseline_o);
      if (!c.baseline) throw ValidationFailure("config has no baseline section", json());
      print_outputs(c, run_baseline(c));
      return 0;
    }
    if (*breakpoints) {
      const auto c = load_config(breakpoints_o);
      if (c.breakpoints.empty()) throw ValidationFailure("config has no breakpoints section", json());
      print_outputs(c, run_breakpoints(c));
      return 0;
    }
    if (*run) {
      const auto c = load_config(run_o);
      print_outputs(c, run_pipeline(c));
      return 0;
    }
    if (*rep) {
      const auto j = report(r_out, r_delta, r_window);
      write_json_atomic(fs::path(r_out) / "report.json", j);
      std::cout << j.dump(2) << '\n';
      return 0;
    }
    if (*synth_dump) {
      const auto m = write_synthetic_dump(sd, sd_out);
      std::cout << json{{"dump", sd_out}, {"prefixes", m.prefixes.size()}, {"steps", m.index.steps.size()}}.dump(2)
                << '\n';
      return 0;
    }
    if (*synth_corpus) {
      const auto corpus = make_synthetic_corpus(sc);
      const fs::path out(sc_out);
      fs::create_directories(out);
      write_token_file(out / "tokens.bin", corpus.tokens);
      write_match_index(out / "matches.tsv", corpus.matches);
      std::string stop;
      for (auto id : corpus.stopword_ids) stop += std::to_string(id) + "\n";
      write_text_atomic(out / "stopwords.txt", stop);
      write_json_atomic(out / "classes.json", {{"vocab_size", corpus.vocab_size},
                                                 {"class_a", corpus.class_a},
                                                 {"class_b", corpus.class_b},
                                                 {"classes", corpus.class_of}});
      std::cout << json{{"tokens", corpus.tokens.size()}, {"matches", corpus.matches.size()}}.dump(2) << '\n';
      return 0;
    }
  } catch (const ValidationFailure& e) {
    std::cerr << json{{"level", "error"}, {"command", command}, {"kind", "validation"}, {"message", e.what()},
                      {"detail", e.detail}}
                     .dump()
              << '\n';
    return 1;
  } catch (const InputError& e) {
    std::cerr << json{{"level", "error"}, {"command", command}, {"kind", "input"}, {"message", e.what()}}.dump() << '\n';
    return 1;
  } catch (const DumpError& e) {
    std::cerr << json{{"level", "error"}, {"command", command}, {"kind", "dump"}, {"message", e.what()}}.dump() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"level", "error"}, {"command", command}, {"kind", "runtime"}, {"message", e.what()}}.dump()
              << '\n';
    return 2;
  }
  return 0;
}
