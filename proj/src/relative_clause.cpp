#include "lmtraj/relative_clause.hpp"

#include <algorithm>

namespace lmtraj {

namespace {

bool contiguous(const std::vector<int>& ids) {
  for (std::size_t i = 1; i < ids.size(); ++i) {
    if (ids[i] != ids[i - 1] + 1) return false;
  }
  return !ids.empty();
}

std::optional<int> child_with(const ParsedSentence& s, int head, std::string_view deprel) {
  for (int c : s.children(head)) {
    if (s.at(c).deprel == deprel) return c;
  }
  return std::nullopt;
}

std::string words(const ParsedSentence& s, const std::vector<int>& ids, bool lower_first) {
  std::string out;
  for (int id : ids) {
    if (!out.empty()) out += ' ';
    out += (lower_first && id == ids.front()) ? to_lower(s.at(id).form) : s.at(id).form;
  }
  return out;
}

std::string clause(const RcArguments& a) {
  std::string out = a.subject + " " + a.verb_past;
  if (!a.object.empty()) out += " " + a.object;
  return out + " " + a.preposition;
}

}  // namespace

std::string gap_prefix(const RcArguments& a) { return "The person that " + clause(a); }

std::string no_gap_prefix(const RcArguments& a, const std::string& embedding_verb) {
  return "The person " + embedding_verb + " that " + clause(a);
}

RcPairResult generate_rc_pairs(const std::vector<ParsedSentence>& sentences, const VerbLexicon& lexicon,
                               const std::vector<std::string>& embedding_verbs,
                               const std::vector<std::string>& classes) {
  if (embedding_verbs.empty()) throw InputError("at least one embedding verb is required");
  RcPairResult result;
  auto word_count = [](const std::string& text) {
    return static_cast<int>(std::count(text.begin(), text.end(), ' ') + 1);
  };
  for (const auto& s : sentences) {
    std::optional<FrameHit> hit;
    std::string class_id;
    for (const auto& c : classes) {
      const auto hits = frame_hits(s, lexicon, FramePattern::for_class(c));
      if (!hits.empty()) {
        hit = hits.front();
        class_id = c;
        break;
      }
    }
    if (!hit) {
      ++result.no_frame;
      continue;
    }
    const bool needs_object = class_id == "to_dative";
    const auto subj = child_with(s, hit->verb, "nsubj");
    const auto obj = child_with(s, hit->verb, "obj");
    if (!subj || (needs_object && !obj)) {
      ++result.missing_argument;
      result.diagnostics.push_back(s.sent_id + ": missing " + std::string(!subj ? "subject" : "object"));
      continue;
    }
    const auto subj_ids = s.subtree(*subj);
    std::vector<int> tail_ids;
    if (needs_object) {
      tail_ids = s.subtree(*obj);
      if (!contiguous(tail_ids)) {
        ++result.noncontiguous;
        result.diagnostics.push_back(s.sent_id + ": object span is not contiguous");
        continue;
      }
    }
    if (!contiguous(subj_ids)) {
      ++result.noncontiguous;
      result.diagnostics.push_back(s.sent_id + ": subject span is not contiguous");
      continue;
    }
    for (int c : s.children(hit->verb)) {
      if (s.at(c).deprel == "compound:prt") tail_ids.push_back(c);
    }
    std::sort(tail_ids.begin(), tail_ids.end());

    const bool lower = subj_ids.front() == 1 && s.at(1).upos != "PROPN";
    const RcArguments args{words(s, subj_ids, lower), lexicon.at(hit->lemma).past, words(s, tail_ids, false),
                           to_lower(s.at(hit->prep).form)};
    const std::string source = s.sent_id;
    const std::string gap = gap_prefix(args);
    result.records.push_back(
        PrefixRecord{source + ":" + kGapCondition, gap, hit->lemma, class_id, kGapCondition, word_count(gap), source});
    for (const auto& emb : embedding_verbs) {
      const std::string text = no_gap_prefix(args, emb);
      result.records.push_back(PrefixRecord{source + ":" + kNoGapCondition + ":" + emb, text, hit->lemma, class_id,
                                            kNoGapCondition, word_count(text), source});
    }
    ++result.sentences_used;
  }
  return result;
}

}  // namespace lmtraj
