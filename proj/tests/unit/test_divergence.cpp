#include "fixtures.hpp"

#include "lmtraj/divergence.hpp"
#include "lmtraj/tidy_io.hpp"

#include <doctest.h>

#include <cmath>

using namespace lmtraj;
using namespace lmtraj::test;

namespace {

// Direct evaluation of 0.5 KL(p||m) + 0.5 KL(q||m) in bits.
double jsd_oracle(const std::vector<double>& p, const std::vector<double>& q) {
  double kl_p = 0.0, kl_q = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0) kl_p += p[i] * (std::log(p[i]) - std::log(m)) / std::log(2.0);
    if (q[i] > 0) kl_q += q[i] * (std::log(q[i]) - std::log(m)) / std::log(2.0);
  }
  return 0.5 * kl_p + 0.5 * kl_q;
}

VocabDistribution vec(std::vector<double> v) { return Eigen::Map<VocabDistribution>(v.data(), static_cast<Eigen::Index>(v.size())); }

}  // namespace

TEST_CASE("jsd reference values") {
  CHECK(jsd(vec({0.3, 0.7}), vec({0.3, 0.7})) == 0.0);
  CHECK(jsd(vec({1, 0}), vec({0, 1})) == 1.0);
  const double oracle = jsd_oracle({0.5, 0.5}, {1, 0});
  CHECK(std::abs(oracle - 0.311278) < 1e-6);
  CHECK(std::abs(jsd(vec({0.5, 0.5}), vec({1, 0})) - oracle) < 1e-12);
  CHECK_THROWS_AS(jsd(vec({1}), vec({0.5, 0.5})), std::invalid_argument);
}

TEST_CASE("jsd is symmetric, bounded and matches the oracle on random pairs") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial) * 7;
    const auto p = random_simplex(n, rng);
    auto q = random_simplex(n, rng);
    if (trial % 5 == 0) q[0] = 0.0;  // zeros on one side
    const double d = jsd(vec(p), vec(q));
    CHECK(std::abs(d - jsd(vec(q), vec(p))) <= 1e-12);
    CHECK(d >= 0.0);
    CHECK(d <= 1.0);
    CHECK(std::abs(d - jsd_oracle(p, q)) < 1e-12);
    CHECK(jsd(vec(p), vec(p)) == 0.0);
  }
}

TEST_CASE("jsd accepts float storage") {
  Eigen::VectorXf p(2), q(2);
  p << 0.5f, 0.5f;
  q << 1.0f, 0.0f;
  CHECK(std::abs(jsd(p, q) - 0.311278) < 1e-6);
}

namespace {

// Two classes whose verbs differ only across classes, plus per-verb noise.
DistributionDump block_dump() {
  std::vector<PrefixRecord> prefixes;
  for (int c = 0; c < 2; ++c) {
    for (int v = 0; v < 3; ++v) {
      const std::string cls = c == 0 ? "a" : "b";
      prefixes.push_back(prefix(cls + std::to_string(v), cls + "_v" + std::to_string(v), cls));
    }
  }
  return make_dump(6, {0}, prefixes, [](std::size_t, std::size_t i) {
    std::vector<double> w(6, 1.0);
    w[i < 3 ? 0 : 1] += 5.0;
    w[2 + i % 3] += 0.2;
    return w;
  });
}

}  // namespace

TEST_CASE("pairwise_grid") {
  SUBCASE("identical profiles give an all-zero grid") {
    const std::vector<PrefixRecord> ps = {prefix("x", "x", "a"), prefix("y", "y", "a"), prefix("z", "z", "b")};
    const auto dump = make_dump(3, {0}, ps, [](std::size_t, std::size_t) { return std::vector<double>{1, 2, 3}; });
    const auto g = pairwise_grid(dump, 0, class_labels(dump, {"a", "b"}));
    CHECK(g.values.cwiseAbs().maxCoeff() == 0.0);
    g.check();
  }
  SUBCASE("two labels give the jsd of their profiles") {
    const std::vector<PrefixRecord> ps = {prefix("x", "x", "a"), prefix("y", "y", "b")};
    const auto dump = make_dump(2, {0}, ps, [](std::size_t, std::size_t i) {
      return i == 0 ? std::vector<double>{1, 1} : std::vector<double>{1, 0};
    });
    const auto g = pairwise_grid(dump, 0, class_labels(dump, {"a", "b"}));
    CHECK(std::abs(g.values(0, 1) - jsd_oracle({0.5, 0.5}, {1, 0})) < 1e-7);
    CHECK(g.values(0, 1) == g.values(1, 0));
  }
  SUBCASE("between-class block exceeds within-class block") {
    const auto dump = block_dump();
    const auto g = pairwise_grid(dump, 0, class_labels(dump, {"a", "b"}));
    double max_within = 0.0, min_between = 1.0;
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) {
        if (i == j) continue;
        if ((i < 3) == (j < 3)) max_within = std::max(max_within, g.values(i, j));
        else min_between = std::min(min_between, g.values(i, j));
      }
    }
    CHECK(min_between > max_within);
  }
  SUBCASE("label permutation permutes rows and columns") {
    const auto dump = block_dump();
    auto labels = class_labels(dump, {"a", "b"});
    const auto g = pairwise_grid(dump, 0, labels);
    auto permuted = labels;
    std::reverse(permuted.begin(), permuted.end());
    const auto h = pairwise_grid(dump, 0, permuted);
    const int n = static_cast<int>(labels.size());
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) CHECK(g.values(i, j) == h.values(n - 1 - i, n - 1 - j));
    }
  }
  SUBCASE("serial and parallel grids agree") {
    const auto dump = block_dump();
    const auto labels = class_labels(dump, {"a", "b"});
    CHECK(pairwise_grid(dump, 0, labels, true).values == pairwise_grid(dump, 0, labels, false).values);
  }
  SUBCASE("unknown verb propagates the profile error") {
    const auto dump = block_dump();
    CHECK_THROWS(pairwise_grid(dump, 0, {Label{"nope", "a", ""}, Label{"a_v0", "a", ""}}));
  }
}

TEST_CASE("class_contiguous orders labels by class, keeping first-seen order") {
  const auto out = class_contiguous({{"x", "b", ""}, {"y", "a", ""}, {"z", "b", ""}});
  CHECK(out[0].verb_id == "x");
  CHECK(out[1].verb_id == "z");
  CHECK(out[2].verb_id == "y");
}

namespace {

DivergenceGrid constant_block_grid(int na, int nb, double within, double between) {
  DivergenceGrid g;
  for (int i = 0; i < na; ++i) g.labels.push_back({"a" + std::to_string(i), "A", ""});
  for (int i = 0; i < nb; ++i) g.labels.push_back({"b" + std::to_string(i), "B", ""});
  const int n = na + nb;
  g.values = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) g.values(i, j) = ((i < na) == (j < na)) ? within : between;
    }
  }
  return g;
}

}  // namespace

TEST_CASE("split_in_between") {
  SUBCASE("class sizes 3 and 2") {
    const auto s = split_in_between(constant_block_grid(3, 2, 0.0, 0.0), "a1", "A", "B");
    CHECK(s.same.size() == 2);
    CHECK(s.other.size() == 2);
    for (double v : s.same) CHECK(v == 0.0);
    for (double v : s.other) CHECK(v == 0.0);
  }
  SUBCASE("block values") {
    const auto s = split_in_between(constant_block_grid(3, 2, 0.1, 0.4), "a0", "A", "B");
    for (double v : s.same) CHECK(v == 0.1);
    for (double v : s.other) CHECK(v == 0.4);
  }
  SUBCASE("errors") {
    const auto g = constant_block_grid(3, 2, 0.1, 0.4);
    CHECK_THROWS(split_in_between(g, "zz", "A", "B"));
    CHECK_THROWS(split_in_between(g, "b0", "A", "B"));
    CHECK_THROWS(split_in_between(g, "a0", "A", "C"));
  }
}

TEST_CASE("export_grid writes a labelled CSV and a JSON sidecar") {
  TempDir dir("grid");
  auto g = constant_block_grid(2, 2, 0.1, 0.4);
  g.step = 300;
  export_grid(g, dir.path / "g.csv", dir.path / "g.json");
  const auto csv = read_text(dir.path / "g.csv");
  CHECK(csv.rfind("label,a0,a1,b0,b1\n", 0) == 0);
  CHECK(csv.find("a0,0,0.1,0.4,0.4\n") != std::string::npos);
  const auto j = nlohmann::json::parse(read_text(dir.path / "g.json"));
  CHECK(j["step"] == 300);
  CHECK(j["units"] == "bits");
  CHECK(j["labels"][2]["class_id"] == "B");
  CHECK(validate_output_dir(dir.path).empty());
}
