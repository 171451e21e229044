#include "lmtraj/frames.hpp"

#include "lmtraj/tidy_io.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace lmtraj {

namespace {

bool is_word(const ParsedSentence& s, int id, std::string_view word) {
  return id >= 1 && id <= static_cast<int>(s.tokens.size()) && to_lower(s.at(id).form) == word;
}

bool same_hit(const FrameHit& a, const FrameHit& b) { return a.verb == b.verb && a.prep == b.prep; }

std::string tsv_clean(std::string s) {
  std::replace(s.begin(), s.end(), '\t', ' ');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

FramePattern FramePattern::for_class(const std::string& class_id) {
  if (class_id == "to_dative" || class_id == "motion") return {class_id, "to"};
  if (class_id == "reciprocal" || class_id == "spray_load") return {class_id, "with"};
  throw InputError("no frame pattern for class " + class_id);
}

std::vector<FramePattern> default_patterns() {
  return {FramePattern::for_class("to_dative"), FramePattern::for_class("motion"),
          FramePattern::for_class("reciprocal"), FramePattern::for_class("spray_load")};
}

std::vector<FrameHit> surface_matches(const ParsedSentence& s, const VerbLexicon& lexicon, const FramePattern& p) {
  std::vector<FrameHit> out;
  const int n = static_cast<int>(s.tokens.size());
  for (int v = 1; v <= n; ++v) {
    const auto lemmas = lexicon.lemmas_for_form(s.at(v).form, p.class_id);
    if (lemmas.empty()) continue;
    for (int q = v + 1; q < n; ++q) {
      if (is_word(s, q, p.preposition) && is_word(s, q + 1, "the")) out.push_back({v, q, lemmas.front()});
    }
  }
  return out;
}

std::vector<FrameHit> parse_matches(const ParsedSentence& s, const VerbLexicon& lexicon, const FramePattern& p) {
  std::vector<FrameHit> out;
  const int n = static_cast<int>(s.tokens.size());
  for (int q = 1; q < n; ++q) {
    if (!is_word(s, q, p.preposition) || !is_word(s, q + 1, "the")) continue;
    const auto& prep = s.at(q);
    std::optional<int> verb;
    if (prep.head > 0) {
      const auto& governor = s.at(prep.head);
      if (governor.upos == "VERB") {
        verb = prep.head;
      } else if (governor.head > 0 && governor.deprel.rfind("obl", 0) == 0 && s.at(governor.head).upos == "VERB") {
        verb = governor.head;
      }
    }
    if (!verb || *verb >= q) continue;
    const auto* entry = lexicon.find(s.at(*verb).lemma);
    if (entry == nullptr || entry->class_id != p.class_id) continue;
    out.push_back({*verb, q, entry->lemma});
  }
  return out;
}

std::vector<FrameHit> frame_hits(const ParsedSentence& s, const VerbLexicon& lexicon, const FramePattern& p) {
  const auto surface = surface_matches(s, lexicon, p);
  std::vector<FrameHit> out;
  for (const auto& h : parse_matches(s, lexicon, p)) {
    if (std::any_of(surface.begin(), surface.end(), [&](const FrameHit& x) { return same_hit(x, h); })) {
      out.push_back(h);
    }
  }
  return out;
}

std::string prefix_text(const ParsedSentence& s, int last) {
  std::string out;
  for (int i = 1; i <= last; ++i) {
    if (i > 1) out += ' ';
    out += s.at(i).form;
  }
  return out;
}

FrameFilterResult filter_frames(const std::vector<ParsedSentence>& sentences, const VerbLexicon& lexicon,
                                const std::vector<FramePattern>& patterns) {
  FrameFilterResult result;
  for (const auto& s : sentences) {
    for (const auto& p : patterns) {
      const auto surface = surface_matches(s, lexicon, p);
      const auto parsed = parse_matches(s, lexicon, p);
      const FrameHit* agreed = nullptr;
      for (const auto& h : parsed) {
        if (std::any_of(surface.begin(), surface.end(), [&](const FrameHit& x) { return same_hit(x, h); })) {
          agreed = &h;
          break;
        }
      }
      auto make_id = [&](const FrameHit& h) {
        return s.sent_id + ":" + p.class_id + ":" + std::to_string(h.verb) + "-" + std::to_string(h.prep);
      };
      if (agreed != nullptr) {
        result.accepted.push_back(PrefixRecord{make_id(*agreed), prefix_text(s, agreed->prep + 1), agreed->lemma,
                                               p.class_id, "", agreed->prep + 1, ""});
        continue;
      }
      if (surface.empty() && parsed.empty()) {
        ++result.rejected;
        continue;
      }
      // One stage fired without the other; the first candidate of each stage
      // is queued so an annotator sees the sentence once per reason.
      if (!surface.empty()) {
        const auto& h = surface.front();
        result.review.push_back({make_id(h), s.sent_id, h.lemma, p.class_id,
                                 "surface match not supported by the parse", prefix_text(s, h.prep + 1), h.prep + 1});
      }
      if (!parsed.empty()) {
        const auto& h = parsed.front();
        result.review.push_back({make_id(h), s.sent_id, h.lemma, p.class_id,
                                 "parse match with an unlisted surface form", prefix_text(s, h.prep + 1), h.prep + 1});
      }
    }
  }
  return result;
}

void write_review_queue(const std::filesystem::path& path, const std::vector<ReviewItem>& items) {
  std::ostringstream out;
  out << "prefix_id\tsentence_id\tverb_id\tclass_id\treason\ttarget_offset\ttext\tdecision\n";
  for (const auto& r : items) {
    out << tsv_clean(r.prefix_id) << '\t' << tsv_clean(r.sentence_id) << '\t' << r.verb_id << '\t' << r.class_id
        << '\t' << r.reason << '\t' << r.target_offset << '\t' << tsv_clean(r.text) << "\t\n";
  }
  write_text_atomic(path, out.str());
}

std::vector<ReviewItem> read_review_queue(const std::filesystem::path& path,
                                          std::map<std::string, std::string>* decisions) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open review queue " + path.string());
  std::vector<ReviewItem> items;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 || line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string col; std::getline(ss, col, '\t');) cols.push_back(col);
    if (cols.size() < 7) throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected 8 columns");
    ReviewItem r{cols[0], cols[1], cols[2], cols[3], cols[4], cols[6], std::stoi(cols[5])};
    if (decisions != nullptr && cols.size() > 7 && !cols[7].empty()) (*decisions)[r.prefix_id] = to_lower(cols[7]);
    items.push_back(std::move(r));
  }
  return items;
}

std::vector<PrefixRecord> merge_review(const std::vector<PrefixRecord>& accepted, const std::filesystem::path& queue,
                                       std::vector<ReviewItem>* pending) {
  std::map<std::string, std::string> decisions;
  const auto items = read_review_queue(queue, &decisions);
  std::vector<PrefixRecord> out = accepted;
  std::set<std::string> seen;
  for (const auto& r : out) seen.insert(r.prefix_id);
  for (const auto& item : items) {
    auto it = decisions.find(item.prefix_id);
    if (it == decisions.end()) {
      if (pending != nullptr) pending->push_back(item);
      continue;
    }
    if (it->second == "reject") continue;
    if (it->second != "accept") {
      throw InputError("review decision for " + item.prefix_id + " must be accept or reject, got " + it->second);
    }
    if (seen.insert(item.prefix_id).second) {
      out.push_back(PrefixRecord{item.prefix_id, item.text, item.verb_id, item.class_id, "", item.target_offset, ""});
    }
  }
  return out;
}

}  // namespace lmtraj
