#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lmtraj {

struct ConlluToken {
  int id = 0;  // 1-based
  std::string form;
  std::string lemma;
  std::string upos;
  std::string xpos;
  std::string feats;
  int head = 0;  // 0 is the root
  std::string deprel;
  std::string deps;
  std::string misc;

  bool space_after() const;
};

struct ParsedSentence {
  std::string sent_id;
  std::string text;
  // From a "# source_id = ..." comment; defaults to sent_id.
  std::string source_id;
  std::vector<ConlluToken> tokens;

  // Lookup by 1-based CoNLL-U id.
  const ConlluToken& at(int id) const { return tokens.at(static_cast<std::size_t>(id - 1)); }
  std::vector<int> children(int id) const;
  // Ids of the subtree rooted at id, ascending.
  std::vector<int> subtree(int id) const;
  // Surface text of tokens [first, last] honouring SpaceAfter=No.
  std::string span_text(int first, int last) const;

  // Throws InputError unless ids are 1..n, heads are in range and there is
  // exactly one root.
  void check() const;
};

struct ConlluDiagnostic {
  std::size_t line = 0;
  std::string sent_id;
  std::string message;
};

struct ConlluReadResult {
  std::vector<ParsedSentence> sentences;
  std::vector<ConlluDiagnostic> diagnostics;
};

// Multiword-token ranges and empty nodes are ignored. Malformed sentences are
// skipped and reported. Sentences without a sent_id get "<source>:<n>".
ConlluReadResult read_conllu(std::istream& in, const std::string& source_name = "conllu");
ConlluReadResult read_conllu_file(const std::filesystem::path& path);

std::string write_conllu(const std::vector<ParsedSentence>& sentences);

}  // namespace lmtraj
