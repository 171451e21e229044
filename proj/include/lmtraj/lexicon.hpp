#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lmtraj {

struct LexiconEntry {
  std::string lemma;
  std::string class_id;
  std::string past;                // simple past used by the relative-clause templates
  std::vector<std::string> forms;  // lowercase surface forms, lemma included
  int expected_count = 0;          // sentences reported for the verb in the source dataset
};

class VerbLexicon {
 public:
  VerbLexicon() = default;
  explicit VerbLexicon(std::vector<LexiconEntry> entries);

  // TSV columns: lemma, class, past, comma-separated forms, expected count.
  // Lines starting with '#' are comments.
  static VerbLexicon load(const std::filesystem::path& path);
  static std::filesystem::path bundled_path();
  static VerbLexicon bundled() { return load(bundled_path()); }

  const std::vector<LexiconEntry>& entries() const { return entries_; }
  const LexiconEntry* find(const std::string& lemma) const;
  const LexiconEntry& at(const std::string& lemma) const;
  std::vector<std::string> lemmas(const std::string& class_id) const;
  std::vector<std::string> classes() const;
  // Lemmas of the class having this lowercase surface form.
  std::vector<std::string> lemmas_for_form(const std::string& form, const std::string& class_id) const;
  std::map<std::string, std::string> class_map() const;

 private:
  std::vector<LexiconEntry> entries_;
  std::map<std::string, std::size_t> by_lemma_;
  std::multimap<std::string, std::size_t> by_form_;
};

std::string to_lower(std::string s);

}  // namespace lmtraj
