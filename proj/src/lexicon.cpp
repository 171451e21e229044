#include "lmtraj/lexicon.hpp"

#include "lmtraj/types.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#ifndef LMTRAJ_DATA_DIR
#define LMTRAJ_DATA_DIR "data"
#endif

namespace lmtraj {

std::string to_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

VerbLexicon::VerbLexicon(std::vector<LexiconEntry> entries) : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    auto& e = entries_[i];
    if (e.lemma.empty() || e.class_id.empty()) throw InputError("lexicon entry without lemma or class");
    if (e.past.empty()) throw InputError("lexicon entry " + e.lemma + " has no simple-past form");
    if (!by_lemma_.emplace(e.lemma, i).second) throw InputError("duplicate lexicon lemma " + e.lemma);
    if (std::find(e.forms.begin(), e.forms.end(), e.lemma) == e.forms.end()) e.forms.insert(e.forms.begin(), e.lemma);
    for (auto& f : e.forms) {
      f = to_lower(f);
      by_form_.emplace(f, i);
    }
  }
}

VerbLexicon VerbLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open lexicon " + path.string());
  std::vector<LexiconEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string col; std::getline(ss, col, '\t');) cols.push_back(col);
    if (cols.size() < 3) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected lemma, class, past");
    }
    LexiconEntry e{cols[0], cols[1], cols[2], {}, 0};
    if (cols.size() > 3) {
      std::stringstream fs(cols[3]);
      for (std::string f; std::getline(fs, f, ',');) {
        if (!f.empty()) e.forms.push_back(f);
      }
    }
    if (cols.size() > 4 && !cols[4].empty()) e.expected_count = std::stoi(cols[4]);
    entries.push_back(std::move(e));
  }
  return VerbLexicon(std::move(entries));
}

std::filesystem::path VerbLexicon::bundled_path() { return std::filesystem::path(LMTRAJ_DATA_DIR) / "lexicon.tsv"; }

const LexiconEntry* VerbLexicon::find(const std::string& lemma) const {
  auto it = by_lemma_.find(lemma);
  return it == by_lemma_.end() ? nullptr : &entries_[it->second];
}

const LexiconEntry& VerbLexicon::at(const std::string& lemma) const {
  const auto* e = find(lemma);
  if (e == nullptr) throw InputError("verb " + lemma + " is not in the lexicon");
  return *e;
}

std::vector<std::string> VerbLexicon::lemmas(const std::string& class_id) const {
  std::vector<std::string> out;
  for (const auto& e : entries_) {
    if (e.class_id == class_id) out.push_back(e.lemma);
  }
  return out;
}

std::vector<std::string> VerbLexicon::classes() const {
  std::vector<std::string> out;
  for (const auto& e : entries_) {
    if (std::find(out.begin(), out.end(), e.class_id) == out.end()) out.push_back(e.class_id);
  }
  return out;
}

std::vector<std::string> VerbLexicon::lemmas_for_form(const std::string& form, const std::string& class_id) const {
  std::vector<std::string> out;
  auto [lo, hi] = by_form_.equal_range(to_lower(form));
  for (auto it = lo; it != hi; ++it) {
    const auto& e = entries_[it->second];
    if (e.class_id == class_id) out.push_back(e.lemma);
  }
  return out;
}

std::map<std::string, std::string> VerbLexicon::class_map() const {
  std::map<std::string, std::string> out;
  for (const auto& e : entries_) out[e.lemma] = e.class_id;
  return out;
}

}  // namespace lmtraj
