#include "lmtraj/tidy_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace lmtraj {

namespace fs = std::filesystem;

void write_text_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = fs::path(path).concat(".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_json_atomic(const fs::path& path, const nlohmann::json& j) { write_text_atomic(path, j.dump(2) + "\n"); }

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

namespace {

double parse_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw InputError("not a number: '" + s + "'");
  return v;
}

Step parse_step(const std::string& s) {
  Step v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw InputError("not an integer step: '" + s + "'");
  return v;
}

std::vector<std::string> lines_of(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    out.emplace_back(text.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

}  // namespace

std::string series_csv(const std::vector<TrajectorySeries>& series) {
  std::ostringstream out;
  out << kSeriesHeader << '\n';
  for (const auto& s : series) {
    for (const auto& p : s.points) {
      out << csv_escape(s.run_id) << ',' << csv_escape(s.metric_name) << ',' << p.step << ',' << format_double(p.value)
          << ',';
      if (p.dispersion) out << format_double(*p.dispersion);
      out << '\n';
    }
  }
  return out.str();
}

std::vector<TrajectorySeries> parse_series_csv(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty() || lines.front() != kSeriesHeader) throw InputError("series CSV: unexpected header");
  std::vector<TrajectorySeries> out;
  std::map<std::pair<std::string, std::string>, std::size_t> where;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = split_csv_line(lines[i]);
    if (f.size() != 5) throw InputError("series CSV line " + std::to_string(i + 1) + ": expected 5 fields");
    const auto key = std::make_pair(f[0], f[1]);
    auto it = where.find(key);
    if (it == where.end()) {
      it = where.emplace(key, out.size()).first;
      out.push_back(TrajectorySeries{f[0], f[1], {}});
    }
    SeriesPoint p;
    p.step = parse_step(f[2]);
    p.value = parse_double(f[3]);
    if (!f[4].empty()) p.dispersion = parse_double(f[4]);
    out[it->second].points.push_back(p);
  }
  return out;
}

nlohmann::json series_json(const TrajectorySeries& s) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : s.points) {
    nlohmann::json e{{"step", p.step}, {"value", std::isfinite(p.value) ? nlohmann::json(p.value) : nlohmann::json()}};
    if (p.dispersion) e["dispersion"] = *p.dispersion;
    pts.push_back(std::move(e));
  }
  return {{"run_id", s.run_id}, {"metric", s.metric_name}, {"points", pts}};
}

namespace {

void check_grid_csv(const fs::path& file, const std::vector<std::string>& lines, std::vector<SchemaProblem>& problems) {
  const auto header = split_csv_line(lines.front());
  const std::size_t n = header.size() - 1;
  std::vector<std::vector<double>> m;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = split_csv_line(lines[i]);
    if (f.size() != n + 1) {
      problems.push_back({file, "row " + std::to_string(i) + " has wrong width"});
      return;
    }
    if (f[0] != header[m.size() + 1]) problems.push_back({file, "row label '" + f[0] + "' does not match column order"});
    std::vector<double> row;
    for (std::size_t j = 1; j < f.size(); ++j) row.push_back(parse_double(f[j]));
    m.push_back(std::move(row));
  }
  if (m.size() != n) {
    problems.push_back({file, "grid is not square"});
    return;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (m[i][i] != 0.0) problems.push_back({file, "non-zero diagonal at " + header[i + 1]});
    for (std::size_t j = 0; j < n; ++j) {
      if (j > i && m[i][j] != m[j][i]) problems.push_back({file, "asymmetric entry (" + header[i + 1] + ", " + header[j + 1] + ")"});
      if (!(m[i][j] >= 0.0 && m[i][j] <= 1.0)) problems.push_back({file, "entry outside [0,1]"});
    }
  }
}

}  // namespace

std::vector<SchemaProblem> validate_output_dir(const fs::path& dir) {
  std::vector<SchemaProblem> problems;
  if (!fs::is_directory(dir)) {
    problems.push_back({dir, "not a directory"});
    return problems;
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    const auto ext = file.extension().string();
    try {
      if (ext == ".json") {
        if (!nlohmann::json::accept(read_text(file))) problems.push_back({file, "invalid JSON"});
      } else if (ext == ".csv") {
        const auto lines = lines_of(read_text(file));
        if (lines.empty()) {
          problems.push_back({file, "empty CSV"});
          continue;
        }
        if (lines.front() == kSeriesHeader) {
          for (const auto& s : parse_series_csv(read_text(file))) {
            s.check();
          }
        } else if (lines.front().rfind("label,", 0) == 0) {
          check_grid_csv(file, lines, problems);
        } else {
          const std::size_t width = split_csv_line(lines.front()).size();
          for (std::size_t i = 1; i < lines.size(); ++i) {
            if (!lines[i].empty() && split_csv_line(lines[i]).size() != width) {
              problems.push_back({file, "line " + std::to_string(i + 1) + " width differs from header"});
            }
          }
        }
      }
    } catch (const std::exception& e) {
      problems.push_back({file, e.what()});
    }
  }
  return problems;
}

}  // namespace lmtraj
