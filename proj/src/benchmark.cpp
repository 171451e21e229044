#include "lmtraj/benchmark.hpp"

#include "lmtraj/lexicon.hpp"

#include <json.hpp>

#include <cctype>
#include <fstream>
#include <sstream>

namespace lmtraj {

namespace {

std::vector<std::string> split_words(const std::string& sentence) {
  std::vector<std::string> out;
  std::istringstream in(sentence);
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::string strip_punct(std::string w) {
  while (!w.empty() && std::ispunct(static_cast<unsigned char>(w.back())) && w.back() != '\'') w.pop_back();
  return w;
}

}  // namespace

BenchmarkLoadResult load_benchmark_pairs(std::istream& in, const BenchmarkOptions& options) {
  BenchmarkLoadResult result;
  std::string line;
  std::size_t line_no = 0;
  auto skip = [&](const std::string& why) {
    ++result.skipped;
    result.diagnostics.push_back("line " + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      skip(std::string("malformed JSON: ") + e.what());
      continue;
    }
    if (!j.is_object() || !j.contains(options.good_field) || !j.contains(options.bad_field) ||
        !j[options.good_field].is_string() || !j[options.bad_field].is_string()) {
      skip("missing " + options.good_field + " or " + options.bad_field);
      continue;
    }
    const auto good = split_words(j[options.good_field].get<std::string>());
    const auto bad = split_words(j[options.bad_field].get<std::string>());
    if (good.size() != bad.size() || good.empty()) {
      skip("members differ in length");
      continue;
    }
    std::vector<std::size_t> diff;
    for (std::size_t i = 0; i < good.size(); ++i) {
      if (strip_punct(good[i]) != strip_punct(bad[i])) diff.push_back(i);
    }
    if (diff.size() != 1) {
      skip("expected one differing word, found " + std::to_string(diff.size()));
      continue;
    }
    const std::size_t k = diff.front();
    std::string pair_id = "line" + std::to_string(line_no);
    if (j.contains(options.pair_field)) {
      const auto& p = j[options.pair_field];
      pair_id = p.is_string() ? p.get<std::string>() : p.dump();
    }
    auto member = [&](const std::vector<std::string>& w, const std::string& category) {
      std::string text;
      for (std::size_t i = 0; i <= k; ++i) {
        if (i > 0) text += ' ';
        text += i == k ? strip_punct(w[i]) : w[i];
      }
      return PrefixRecord{pair_id + ":" + category, text, to_lower(strip_punct(w[k])), category, category,
                          static_cast<int>(k + 1), pair_id};
    };
    result.records.push_back(member(good, options.good_category));
    result.records.push_back(member(bad, options.bad_category));
  }
  return result;
}

BenchmarkLoadResult load_benchmark_file(const std::filesystem::path& path, const BenchmarkOptions& options) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open benchmark file " + path.string());
  return load_benchmark_pairs(in, options);
}

}  // namespace lmtraj
