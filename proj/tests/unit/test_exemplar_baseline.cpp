#include "fixtures.hpp"

#include "lmtraj/exemplar_baseline.hpp"
#include "lmtraj/synthetic.hpp"

#include <doctest.h>

#include <fstream>

using namespace lmtraj;
using namespace lmtraj::test;

namespace {

BaselineConfig config(std::size_t window, std::vector<std::uint64_t> schedule, std::set<TokenId> stop = {0},
                      WindowAnchor anchor = WindowAnchor::AfterVerb) {
  BaselineConfig c;
  c.window = window;
  c.snapshot_schedule = std::move(schedule);
  c.stopword_ids = std::move(stop);
  c.anchor = anchor;
  return c;
}

const CountVector& counts_of(const CountSnapshot& s, const std::string& verb) {
  for (const auto& v : s.verbs) {
    if (v.verb_id == verb) return v.counts;
  }
  throw std::runtime_error("verb not in snapshot: " + verb);
}

}  // namespace

TEST_CASE("geometric schedule") {
  CHECK(geometric_schedule(1000, 4) == std::vector<std::uint64_t>{125, 250, 500, 1000});
  CHECK(geometric_schedule(3, 5) == std::vector<std::uint64_t>{1, 3});
  CHECK_THROWS(geometric_schedule(0, 3));
}

TEST_CASE("stream_count hand traces") {
  SUBCASE("empty corpus gives zero counts") {
    const std::vector<TokenId> tokens;
    const auto snaps = stream_count(tokens, {}, 5, config(3, {10}), 1, {"v"});
    REQUIRE(snaps.size() == 1);
    CHECK(snaps[0].tokens_seen == 0);
    CHECK(counts_of(snaps[0], "v").sum() == 0);
  }
  SUBCASE("verb, stop word, content word") {
    // tokens: v=4, the=0, a=1, b=2; the verb sits at position 0
    const std::vector<TokenId> tokens = {4, 0, 1, 2, 3};
    const std::vector<FrameMatch> m = {{"v", 0, 1}};
    SUBCASE("the stop word occupies a window slot") {
      const auto snaps = stream_count(tokens, m, 5, config(2, {100}));
      const auto& c = counts_of(snaps.back(), "v");
      CHECK(c(1) == 1);
      CHECK(c(2) == 0);
      CHECK(c(0) == 0);
    }
    SUBCASE("snapshots only see the corpus prefix") {
      const auto snaps = stream_count(tokens, m, 5, config(3, {2, 3, 100}));
      REQUIRE(snaps.size() == 3);
      CHECK(snaps[0].tokens_seen == 2);
      CHECK(counts_of(snaps[0], "v").sum() == 0);
      CHECK(counts_of(snaps[1], "v").sum() == 1);
      CHECK(snaps[2].tokens_seen == 5);
      CHECK(counts_of(snaps[2], "v")(2) == 1);
      CHECK(counts_of(snaps[2], "v").sum() == 2);
    }
    SUBCASE("anchoring after the preposition shifts the window") {
      const auto snaps = stream_count(tokens, m, 5, config(2, {100}, {0}, WindowAnchor::AfterPreposition));
      const auto& c = counts_of(snaps.back(), "v");
      CHECK(c(1) == 1);
      CHECK(c(2) == 1);
      CHECK(c(3) == 0);
    }
  }
  SUBCASE("overlapping windows count independently") {
    const std::vector<TokenId> tokens = {4, 4, 1, 1};
    const auto snaps = stream_count(tokens, {{"v", 0, 0}, {"v", 1, 1}}, 5, config(3, {100}));
    CHECK(counts_of(snaps.back(), "v")(1) == 4);
    CHECK(counts_of(snaps.back(), "v")(4) == 1);
  }
  SUBCASE("known verbs come first and keep their order") {
    const std::vector<TokenId> tokens = {1, 2, 3};
    const auto snaps = stream_count(tokens, {{"x", 0, 0}}, 5, config(1, {100}), 1, {"b", "a"});
    REQUIRE(snaps[0].verbs.size() == 3);
    CHECK(snaps[0].verbs[0].verb_id == "b");
    CHECK(snaps[0].verbs[2].verb_id == "x");
  }
  SUBCASE("bad input") {
    const std::vector<TokenId> tokens = {1, 9};
    CHECK_THROWS_AS(stream_count(tokens, {}, 5, config(1, {10})), InputError);
    const std::vector<TokenId> ok = {1, 2};
    CHECK_THROWS_AS(stream_count(ok, {{"v", 5, 5}}, 5, config(1, {10})), InputError);
    CHECK_THROWS(stream_count(ok, {}, 5, config(1, {10, 5})));
  }
}

TEST_CASE("sharded counting equals single-shard counting") {
  SyntheticCorpusSpec spec;
  spec.tokens = 200'000;
  spec.vocab_size = 500;
  spec.class_support = 100;
  const auto corpus = make_synthetic_corpus(spec);
  const auto cfg = config(10, geometric_schedule(corpus.tokens.size(), 6), corpus.stopword_ids,
                          WindowAnchor::AfterPreposition);
  const auto one = stream_count(corpus.tokens, corpus.matches, corpus.vocab_size, cfg, 1, corpus.verbs);
  for (std::size_t shards : {2u, 4u, 7u}) {
    const auto many = stream_count(corpus.tokens, corpus.matches, corpus.vocab_size, cfg, shards, corpus.verbs);
    REQUIRE(many.size() == one.size());
    for (std::size_t k = 0; k < one.size(); ++k) {
      CHECK(many[k].tokens_seen == one[k].tokens_seen);
      for (std::size_t v = 0; v < one[k].verbs.size(); ++v) CHECK(many[k].verbs[v].counts == one[k].verbs[v].counts);
    }
  }
}

TEST_CASE("smooth_normalize") {
  CountVector c(2);
  c << 2, 0;
  const auto d = smooth_normalize(c, 0.5);
  CHECK(d(0) == doctest::Approx(2.5 / 3));
  CHECK(d(1) == doctest::Approx(0.5 / 3));
  const auto u = smooth_normalize(CountVector::Zero(4), 0.5);
  for (int i = 0; i < 4; ++i) CHECK(u(i) == 0.25);
  CHECK_THROWS(smooth_normalize(c, 0.0));
}

TEST_CASE("baseline divergence curves") {
  const std::map<std::string, std::string> class_of = {{"a1", "A"}, {"a2", "A"}, {"b1", "B"}, {"b2", "B"}};
  std::mt19937_64 rng(31);
  const int vocab = 40;
  // A verbs sample tokens 0..19, B verbs tokens 20..39.
  auto sample = [&](int lo, std::size_t n) {
    CountVector c = CountVector::Zero(vocab);
    std::uniform_int_distribution<int> u(lo, lo + 19);
    for (std::size_t i = 0; i < n; ++i) c(u(rng)) += 1;
    return c;
  };
  std::vector<CountSnapshot> snaps;
  CountVector a1 = CountVector::Zero(vocab), a2 = a1, b1 = a1, b2 = a1;
  std::uint64_t seen = 0;
  for (std::size_t n : {0u, 20u, 200u, 2000u, 20000u}) {
    a1 += sample(0, n);
    a2 += sample(0, n);
    b1 += sample(20, n);
    b2 += sample(20, n);
    seen += n + 1;
    snaps.push_back({seen, {{"a1", a1}, {"a2", a2}, {"b1", b1}, {"b2", b2}, {"other", a1}}});
  }
  const auto curves = baseline_divergence_curves(snaps, class_of, "A", "B", 0.5);
  REQUIRE(curves.snapshots.size() == 5);
  CHECK(curves.snapshots[0].within.mean == 0.0);
  CHECK(curves.snapshots[0].between.mean == 0.0);
  for (std::size_t i = 2; i < 5; ++i) {
    CHECK(curves.snapshots[i].within.mean < curves.snapshots[i - 1].within.mean);
    CHECK(curves.snapshots[i].between.mean > curves.snapshots[i - 1].between.mean);
  }
  CHECK(curves.snapshots.back().between.mean > 0.95);
  CHECK(curves.snapshots.back().grid.labels.size() == 4);
  CHECK(curves.series.size() == 4);
  CHECK(curves.series[0].metric_name == "baseline/within");
  CHECK(curves.series[2].metric_name == "baseline/within/A");

  CHECK_THROWS_AS(baseline_divergence_curves({snaps[0]}, class_of, "A", "B", 0.5), InputError);
}

TEST_CASE("token and match files round trip") {
  TempDir dir("corpus_io");
  const std::vector<TokenId> tokens = {0, 5, 70000, 3};
  write_token_file(dir.path / "t.bin", tokens);
  CHECK(read_token_file(dir.path / "t.bin") == tokens);
  const std::vector<FrameMatch> m = {{"give", 1, 2}, {"go", 10, 11}};
  write_match_index(dir.path / "m.tsv", m);
  const auto back = read_match_index(dir.path / "m.tsv");
  REQUIRE(back.size() == 2);
  CHECK(back[1].verb_id == "go");
  CHECK(back[1].prep_pos == 11);
  std::ofstream(dir.path / "stop.txt") << "# ids\n0\n262\n\n13\n";
  CHECK(read_stopword_ids(dir.path / "stop.txt") == std::set<TokenId>{0, 13, 262});
}
