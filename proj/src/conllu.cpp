#include "lmtraj/conllu.hpp"

#include "lmtraj/types.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace lmtraj {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

std::optional<int> parse_int(const std::string& s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace

bool ConlluToken::space_after() const { return misc.find("SpaceAfter=No") == std::string::npos; }

std::vector<int> ParsedSentence::children(int id) const {
  std::vector<int> out;
  for (const auto& t : tokens) {
    if (t.head == id) out.push_back(t.id);
  }
  return out;
}

std::vector<int> ParsedSentence::subtree(int id) const {
  std::vector<bool> in(tokens.size() + 1, false);
  std::function<void(int)> visit = [&](int node) {
    in[static_cast<std::size_t>(node)] = true;
    for (int c : children(node)) {
      if (!in[static_cast<std::size_t>(c)]) visit(c);
    }
  };
  visit(id);
  std::vector<int> out;
  for (std::size_t i = 1; i < in.size(); ++i) {
    if (in[i]) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::string ParsedSentence::span_text(int first, int last) const {
  std::string out;
  for (int i = first; i <= last; ++i) {
    const auto& t = at(i);
    out += t.form;
    if (i < last && t.space_after()) out += ' ';
  }
  return out;
}

void ParsedSentence::check() const {
  if (tokens.empty()) throw InputError("sentence " + sent_id + " has no tokens");
  int roots = 0;
  const auto n = static_cast<int>(tokens.size());
  for (int i = 0; i < n; ++i) {
    const auto& t = tokens[static_cast<std::size_t>(i)];
    if (t.id != i + 1) throw InputError("sentence " + sent_id + ": token ids are not 1.." + std::to_string(n));
    if (t.head < 0 || t.head > n) {
      throw InputError("sentence " + sent_id + ": head " + std::to_string(t.head) + " of token " +
                       std::to_string(t.id) + " out of range");
    }
    if (t.head == t.id) throw InputError("sentence " + sent_id + ": token " + std::to_string(t.id) + " heads itself");
    if (t.head == 0) ++roots;
  }
  if (roots != 1) throw InputError("sentence " + sent_id + ": expected one root, found " + std::to_string(roots));
  // Every token must reach the root without a cycle.
  for (const auto& t : tokens) {
    int node = t.id;
    for (int hops = 0; node != 0; ++hops) {
      if (hops > n) throw InputError("sentence " + sent_id + ": dependency cycle at token " + std::to_string(t.id));
      node = at(node).head;
    }
  }
}

ConlluReadResult read_conllu(std::istream& in, const std::string& source_name) {
  ConlluReadResult result;
  ParsedSentence current;
  std::size_t block_start = 1;
  std::size_t line_no = 0;
  std::size_t sentence_no = 0;
  std::string block_error;
  std::optional<std::string> source_comment;

  auto finish = [&]() {
    const bool empty = current.tokens.empty() && current.sent_id.empty() && block_error.empty();
    if (!empty) {
      ++sentence_no;
      if (current.sent_id.empty()) current.sent_id = source_name + ":" + std::to_string(sentence_no);
      current.source_id = source_comment.value_or(current.sent_id);
      if (block_error.empty()) {
        try {
          current.check();
        } catch (const InputError& e) {
          block_error = e.what();
        }
      }
      if (block_error.empty()) {
        result.sentences.push_back(std::move(current));
      } else {
        result.diagnostics.push_back({block_start, current.sent_id, block_error});
      }
    }
    current = ParsedSentence{};
    block_error.clear();
    source_comment.reset();
    block_start = line_no + 1;
  };

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      finish();
      continue;
    }
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) {
        const auto key = trim(line.substr(1, eq - 1));
        const auto value = trim(line.substr(eq + 1));
        if (key == "sent_id") current.sent_id = value;
        else if (key == "text") current.text = value;
        else if (key == "source_id") source_comment = value;
      }
      continue;
    }
    if (!block_error.empty()) continue;
    const auto cols = split_tabs(line);
    if (cols.size() != 10) {
      block_error = "line " + std::to_string(line_no) + ": expected 10 columns, found " + std::to_string(cols.size());
      continue;
    }
    if (cols[0].find_first_of("-.") != std::string::npos) continue;
    const auto id = parse_int(cols[0]);
    const auto head = parse_int(cols[6]);
    if (!id || !head) {
      block_error = "line " + std::to_string(line_no) + ": non-integer id or head";
      continue;
    }
    current.tokens.push_back({*id, cols[1], cols[2], cols[3], cols[4], cols[5], *head, cols[7], cols[8], cols[9]});
  }
  finish();
  return result;
}

ConlluReadResult read_conllu_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open CoNLL-U file " + path.string());
  return read_conllu(in, path.stem().string());
}

std::string write_conllu(const std::vector<ParsedSentence>& sentences) {
  std::ostringstream out;
  for (const auto& s : sentences) {
    out << "# sent_id = " << s.sent_id << '\n';
    if (!s.source_id.empty() && s.source_id != s.sent_id) out << "# source_id = " << s.source_id << '\n';
    if (!s.text.empty()) out << "# text = " << s.text << '\n';
    for (const auto& t : s.tokens) {
      out << t.id << '\t' << t.form << '\t' << t.lemma << '\t' << t.upos << '\t' << t.xpos << '\t' << t.feats << '\t'
          << t.head << '\t' << t.deprel << '\t' << t.deps << '\t' << t.misc << '\n';
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace lmtraj
