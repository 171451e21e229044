#pragma once

#include "lmtraj/conllu.hpp"
#include "lmtraj/lexicon.hpp"
#include "lmtraj/types.hpp"

#include <filesystem>
#include <map>
#include <optional>

namespace lmtraj {

// "... VERB ... PREP the __" for one verb class.
struct FramePattern {
  std::string class_id;
  std::string preposition;

  // to_dative and motion take "to"; reciprocal and spray_load take "with".
  static FramePattern for_class(const std::string& class_id);
};

std::vector<FramePattern> default_patterns();

struct FrameHit {
  int verb = 0;  // CoNLL-U id of the verb
  int prep = 0;  // CoNLL-U id of the preposition; "the" follows it
  std::string lemma;
};

// Surface stage: a lexicon form of the class followed later by "PREP the".
std::vector<FrameHit> surface_matches(const ParsedSentence& s, const VerbLexicon& lexicon, const FramePattern& p);

// Parse stage: a VERB whose lemma is in the class governs PREP, either
// directly or through the oblique noun PREP marks, and "the" follows PREP.
std::vector<FrameHit> parse_matches(const ParsedSentence& s, const VerbLexicon& lexicon, const FramePattern& p);

// Hits found by both stages, in parse order.
std::vector<FrameHit> frame_hits(const ParsedSentence& s, const VerbLexicon& lexicon, const FramePattern& p);

struct ReviewItem {
  std::string prefix_id;
  std::string sentence_id;
  std::string verb_id;
  std::string class_id;
  std::string reason;
  std::string text;  // candidate prefix ending in "PREP the"
  int target_offset = 0;
};

struct FrameFilterResult {
  std::vector<PrefixRecord> accepted;
  std::vector<ReviewItem> review;
  std::size_t rejected = 0;  // sentence/pattern combinations with no match at either stage
};

/// Runs both stages for every sentence and pattern. When the stages agree on a
/// (verb, preposition) pair, the prefix up to and including "the" is accepted
/// with target_offset equal to its word count. Candidates found by only one
/// stage go to the review queue. Output follows the sentence order.
FrameFilterResult filter_frames(const std::vector<ParsedSentence>& sentences, const VerbLexicon& lexicon,
                                const std::vector<FramePattern>& patterns);

// Words of tokens [1, last] joined by single spaces.
std::string prefix_text(const ParsedSentence& s, int last);

// Review queue TSV with an empty "decision" column to be filled with accept or
// reject outside the tool.
void write_review_queue(const std::filesystem::path& path, const std::vector<ReviewItem>& items);
std::vector<ReviewItem> read_review_queue(const std::filesystem::path& path,
                                          std::map<std::string, std::string>* decisions = nullptr);

// Second pass: appends reviewed items marked "accept". Items without a decision
// are returned in pending.
std::vector<PrefixRecord> merge_review(const std::vector<PrefixRecord>& accepted, const std::filesystem::path& queue,
                                       std::vector<ReviewItem>* pending = nullptr);

}  // namespace lmtraj
