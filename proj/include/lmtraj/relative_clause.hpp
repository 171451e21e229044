#pragma once

#include "lmtraj/frames.hpp"

namespace lmtraj {

inline const std::vector<std::string> kEmbeddingVerbs = {"thinks", "believes", "knows",   "says",  "claims",
                                                         "announces", "states", "reports", "reveals"};

inline const std::string kGapCondition = "gap";
inline const std::string kNoGapCondition = "no_gap";

// Argument material lifted from a frame sentence.
struct RcArguments {
  std::string subject;
  std::string verb_past;
  std::string object;  // empty for classes that take no object in the template
  std::string preposition;
};

// "The person that SUBJ V-ed [OBJ] PREP"
std::string gap_prefix(const RcArguments& a);
// "The person EMB that SUBJ V-ed [OBJ] PREP"
std::string no_gap_prefix(const RcArguments& a, const std::string& embedding_verb);

struct RcPairResult {
  std::vector<PrefixRecord> records;
  std::size_t sentences_used = 0;
  std::size_t no_frame = 0;           // no frame of a requested class in the sentence
  std::size_t missing_argument = 0;   // no subject (or no object where one is required)
  std::size_t noncontiguous = 0;      // argument subtree with gaps
  std::vector<std::string> diagnostics;
};

/// For each sentence with a frame of one of the given classes, lifts the
/// nsubj subtree (and for to_dative the obj subtree plus any verb particle)
/// as contiguous spans and emits one gap prefix and one no-gap prefix per
/// embedding verb. Members of a pair share source_id; the verb is the lemma's
/// simple past from the lexicon. A sentence-initial subject that is not a
/// proper noun is lowercased.
RcPairResult generate_rc_pairs(const std::vector<ParsedSentence>& sentences, const VerbLexicon& lexicon,
                               const std::vector<std::string>& embedding_verbs = {"thinks"},
                               const std::vector<std::string>& classes = {"to_dative", "reciprocal"});

}  // namespace lmtraj
