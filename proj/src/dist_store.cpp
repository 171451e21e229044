#include "lmtraj/dist_store.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

namespace lmtraj {

namespace fs = std::filesystem;
using nlohmann::json;

void CheckpointIndex::check() const {
  if (steps.empty()) throw InputError("checkpoint index for run '" + run_id + "' is empty");
  for (std::size_t i = 1; i < steps.size(); ++i) {
    if (steps[i] <= steps[i - 1]) {
      throw InputError("checkpoint steps must be strictly increasing (run '" + run_id + "', step " +
                       std::to_string(steps[i]) + ")");
    }
  }
}

std::optional<std::size_t> CheckpointIndex::position(Step step) const {
  auto it = std::lower_bound(steps.begin(), steps.end(), step);
  if (it == steps.end() || *it != step) return std::nullopt;
  return static_cast<std::size_t>(it - steps.begin());
}

void TrajectorySeries::check() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i > 0 && points[i].step <= points[i - 1].step) {
      throw InputError("series '" + metric_name + "': steps not strictly increasing");
    }
    if (points[i].dispersion && *points[i].dispersion < 0.0) {
      throw InputError("series '" + metric_name + "': negative dispersion");
    }
  }
}

std::vector<double> TrajectorySeries::values() const {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.value);
  return out;
}

std::vector<Step> TrajectorySeries::steps() const {
  std::vector<Step> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.step);
  return out;
}

void to_json(json& j, const PrefixRecord& r) {
  j = json{{"prefix_id", r.prefix_id},       {"text", r.text},
           {"verb_id", r.verb_id},           {"class_id", r.class_id},
           {"condition_id", r.condition_id}, {"target_offset", r.target_offset}};
  if (!r.source_id.empty()) j["source_id"] = r.source_id;
}

void from_json(const json& j, PrefixRecord& r) {
  r.prefix_id = j.at("prefix_id").get<std::string>();
  r.text = j.value("text", "");
  r.verb_id = j.at("verb_id").get<std::string>();
  r.class_id = j.value("class_id", "");
  r.condition_id = j.value("condition_id", "");
  r.target_offset = j.value("target_offset", 0);
  r.source_id = j.value("source_id", "");
}

DumpManifest read_manifest(const fs::path& dump_dir) {
  const fs::path file = dump_dir / "manifest.json";
  std::ifstream in(file);
  if (!in) throw DumpError("cannot read manifest: " + file.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DumpError("malformed manifest " + file.string() + ": " + e.what());
  }
  DumpManifest m;
  try {
    m.vocab_size = j.at("vocab_size").get<int>();
    m.index.run_id = j.value("run_id", "");
    m.index.steps = j.at("steps").get<std::vector<Step>>();
    m.prefixes = j.at("prefixes").get<std::vector<PrefixRecord>>();
    if (j.contains("metadata")) m.metadata = j["metadata"];
  } catch (const json::exception& e) {
    throw DumpError("manifest " + file.string() + " missing required field: " + e.what());
  }
  if (m.vocab_size <= 0) throw DumpError("manifest vocab_size must be positive");
  try {
    m.index.check();
  } catch (const InputError& e) {
    throw DumpError(e.what());
  }
  std::set<std::string> ids;
  for (const auto& p : m.prefixes) {
    if (!ids.insert(p.prefix_id).second) throw DumpError("duplicate prefix_id '" + p.prefix_id + "'");
  }
  return m;
}

void write_manifest(const fs::path& dump_dir, const DumpManifest& m) {
  fs::create_directories(dump_dir);
  json j{{"vocab_size", m.vocab_size},
         {"run_id", m.index.run_id},
         {"steps", m.index.steps},
         {"prefixes", m.prefixes}};
  if (!m.metadata.empty()) j["metadata"] = m.metadata;
  const fs::path tmp = dump_dir / "manifest.json.tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw DumpError("cannot write " + tmp.string());
    out << j.dump(2) << '\n';
  }
  fs::rename(tmp, dump_dir / "manifest.json");
}

fs::path step_file(const fs::path& dump_dir, Step step) {
  return dump_dir / ("step_" + std::to_string(step) + ".f32");
}

namespace {

std::uint32_t byteswap32(std::uint32_t v) {
  return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

void to_little_endian(std::span<float> values) {
  if constexpr (std::endian::native == std::endian::big) {
    for (float& f : values) {
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      bits = byteswap32(bits);
      std::memcpy(&f, &bits, 4);
    }
  }
}

}  // namespace

StepMatrix read_step_matrix(const fs::path& file, Eigen::Index rows, Eigen::Index cols) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DumpError("missing step file: " + file.string());
  const auto bytes = fs::file_size(file);
  const auto expected = static_cast<std::uintmax_t>(rows) * static_cast<std::uintmax_t>(cols) * 4u;
  if (bytes != expected) {
    throw DumpError("step file " + file.string() + " has " + std::to_string(bytes) + " bytes, expected " +
                    std::to_string(expected));
  }
  StepMatrix m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(expected));
  if (!in) throw DumpError("short read on " + file.string());
  to_little_endian(std::span<float>(m.data(), static_cast<std::size_t>(m.size())));
  return m;
}

void write_step_matrix(const fs::path& file, const StepMatrix& m) {
  StepMatrix copy = m;
  to_little_endian(std::span<float>(copy.data(), static_cast<std::size_t>(copy.size())));
  const fs::path tmp = fs::path(file).concat(".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DumpError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(copy.data()), static_cast<std::streamsize>(copy.size() * 4));
  }
  fs::rename(tmp, file);
}

void write_dump(const fs::path& dump_dir, const DumpManifest& manifest,
                const std::function<StepMatrix(Step)>& matrix_for_step) {
  manifest.index.check();
  fs::create_directories(dump_dir);
  for (Step s : manifest.index.steps) {
    StepMatrix m = matrix_for_step(s);
    if (m.rows() != static_cast<Eigen::Index>(manifest.prefixes.size()) || m.cols() != manifest.vocab_size) {
      throw DumpError("write_dump: step " + std::to_string(s) + " matrix has wrong shape");
    }
    write_step_matrix(step_file(dump_dir, s), m);
  }
  write_manifest(dump_dir, manifest);
}

std::string to_string(ValidationIssue::Kind kind) {
  switch (kind) {
    case ValidationIssue::Kind::RowSum: return "row_sum";
    case ValidationIssue::Kind::NegativeEntry: return "negative_entry";
    case ValidationIssue::Kind::NonFinite: return "non_finite";
    case ValidationIssue::Kind::Shape: return "shape";
    case ValidationIssue::Kind::MissingFile: return "missing_file";
    case ValidationIssue::Kind::Manifest: return "manifest";
  }
  return "unknown";
}

bool ValidationReport::fatal() const {
  return std::any_of(issues.begin(), issues.end(), [](const ValidationIssue& i) {
    return i.kind == ValidationIssue::Kind::MissingFile || i.kind == ValidationIssue::Kind::Shape ||
           i.kind == ValidationIssue::Kind::Manifest;
  });
}

json ValidationReport::to_json() const {
  json arr = json::array();
  for (const auto& i : issues) {
    json e{{"kind", to_string(i.kind)}, {"detail", i.detail}};
    e["step"] = i.step ? json(*i.step) : json(nullptr);
    if (!i.prefix_id.empty()) e["prefix_id"] = i.prefix_id;
    arr.push_back(std::move(e));
  }
  return json{{"ok", issues.empty()}, {"fatal", fatal()}, {"issues", arr}};
}

ValidationReport validate_dump(const fs::path& dump_dir) {
  const DumpManifest m = read_manifest(dump_dir);
  ValidationReport report;
  const auto rows = static_cast<Eigen::Index>(m.prefixes.size());
  const std::uintmax_t expected_bytes = static_cast<std::uintmax_t>(rows) * static_cast<std::uintmax_t>(m.vocab_size) * 4u;
  for (Step s : m.index.steps) {
    const fs::path file = step_file(dump_dir, s);
    if (!fs::exists(file)) {
      report.issues.push_back({ValidationIssue::Kind::MissingFile, s, "", "missing " + file.filename().string()});
      continue;
    }
    const auto bytes = fs::file_size(file);
    if (bytes != expected_bytes) {
      report.issues.push_back({ValidationIssue::Kind::Shape, s, "",
                               file.filename().string() + " holds " + std::to_string(bytes) + " bytes, expected " +
                                   std::to_string(expected_bytes) + " (" + std::to_string(rows) + " x " +
                                   std::to_string(m.vocab_size) + " float32)"});
      continue;
    }
    const StepMatrix mat = read_step_matrix(file, rows, m.vocab_size);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const auto row = mat.row(r);
      const std::string& pid = m.prefixes[static_cast<std::size_t>(r)].prefix_id;
      if (!row.allFinite()) {
        report.issues.push_back({ValidationIssue::Kind::NonFinite, s, pid, "row contains NaN or Inf"});
        continue;
      }
      if ((row.array() < 0.0f).any()) {
        report.issues.push_back({ValidationIssue::Kind::NegativeEntry, s, pid, "row contains negative mass"});
      }
      const double sum = row.cast<double>().sum();
      if (std::abs(sum - 1.0) > kRowSumTolerance) {
        report.issues.push_back({ValidationIssue::Kind::RowSum, s, pid, "row sums to " + std::to_string(sum)});
      }
    }
  }
  return report;
}

DistributionDump::DistributionDump(fs::path dump_dir, std::size_t cache_steps)
    : dir_(std::move(dump_dir)), manifest_(read_manifest(dir_)), cache_steps_(std::max<std::size_t>(1, cache_steps)) {}

DistributionDump::DistributionDump(DumpManifest manifest, std::map<Step, StepMatrix> in_memory)
    : manifest_(std::move(manifest)), cache_steps_(in_memory.size() + 1), in_memory_(true) {
  manifest_.index.check();
  for (auto& [step, m] : in_memory) {
    if (m.rows() != static_cast<Eigen::Index>(manifest_.prefixes.size()) || m.cols() != manifest_.vocab_size) {
      throw DumpError("in-memory step " + std::to_string(step) + " has wrong shape");
    }
    cache_.emplace(step, std::make_shared<const StepMatrix>(std::move(m)));
  }
  for (Step s : manifest_.index.steps) {
    if (!cache_.count(s)) throw DumpError("in-memory dump lacks step " + std::to_string(s));
  }
}

std::shared_ptr<const StepMatrix> DistributionDump::step_matrix(Step step) const {
  if (!manifest_.index.position(step)) {
    throw InputError("step " + std::to_string(step) + " not in checkpoint index of run '" + run_id() + "'");
  }
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(step); it != cache_.end()) {
      if (!in_memory_) {
        lru_.erase(std::remove(lru_.begin(), lru_.end(), step), lru_.end());
        lru_.push_back(step);
      }
      return it->second;
    }
  }
  auto loaded = std::make_shared<const StepMatrix>(
      read_step_matrix(step_file(dir_, step), static_cast<Eigen::Index>(manifest_.prefixes.size()), manifest_.vocab_size));
  std::lock_guard lock(mutex_);
  auto [it, inserted] = cache_.emplace(step, loaded);
  if (inserted) {
    lru_.push_back(step);
    while (lru_.size() > cache_steps_) {
      cache_.erase(lru_.front());
      lru_.erase(lru_.begin());
    }
  }
  return it->second;
}

VocabDistribution promote_row(const Eigen::Ref<const Eigen::RowVectorXf>& row) {
  VocabDistribution d = row.transpose().cast<double>();
  if (!d.allFinite() || (d.array() < 0.0).any()) throw DumpError("row is not a distribution (negative or non-finite mass)");
  const double sum = d.sum();
  if (std::abs(sum - 1.0) > kRowSumTolerance) {
    throw DumpError("row sums to " + std::to_string(sum) + ", outside tolerance");
  }
  d /= sum;
  return d;
}

VocabDistribution DistributionDump::distribution(Step step, std::size_t prefix_index) const {
  if (prefix_index >= manifest_.prefixes.size()) throw InputError("prefix index out of range");
  const auto m = step_matrix(step);
  try {
    return promote_row(m->row(static_cast<Eigen::Index>(prefix_index)));
  } catch (const DumpError& e) {
    throw DumpError("step " + std::to_string(step) + ", prefix '" + manifest_.prefixes[prefix_index].prefix_id +
                    "': " + e.what());
  }
}

std::vector<std::size_t> DistributionDump::prefix_indices(const std::string& verb_id,
                                                          const std::optional<std::string>& condition) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < manifest_.prefixes.size(); ++i) {
    const auto& p = manifest_.prefixes[i];
    if (p.verb_id == verb_id && (!condition || p.condition_id == *condition)) out.push_back(i);
  }
  return out;
}

std::vector<std::string> DistributionDump::verbs(const std::optional<std::string>& class_id) const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& p : manifest_.prefixes) {
    if (class_id && p.class_id != *class_id) continue;
    if (seen.insert(p.verb_id).second) out.push_back(p.verb_id);
  }
  return out;
}

std::string DistributionDump::class_of(const std::string& verb_id) const {
  for (const auto& p : manifest_.prefixes) {
    if (p.verb_id == verb_id) return p.class_id;
  }
  throw InputError("verb '" + verb_id + "' not in prefix table");
}

VocabDistribution verb_profile(const DistributionDump& dump, const std::string& verb_id, Step step,
                               const std::optional<std::string>& condition) {
  const auto rows = dump.prefix_indices(verb_id, condition);
  if (rows.empty()) {
    throw InputError("verb '" + verb_id + "' has no prefixes" +
                     (condition ? " with condition '" + *condition + "'" : std::string(" (no condition filter)")) +
                     " at step " + std::to_string(step));
  }
  const auto m = dump.step_matrix(step);
  std::vector<VocabDistribution> dists;
  dists.reserve(rows.size());
  for (std::size_t r : rows) {
    try {
      dists.push_back(promote_row(m->row(static_cast<Eigen::Index>(r))));
    } catch (const DumpError& e) {
      throw DumpError("step " + std::to_string(step) + ", prefix '" + dump.prefixes()[r].prefix_id + "': " + e.what());
    }
  }
  return mean_distribution(dists);
}

VocabDistribution label_profile(const DistributionDump& dump, const Label& label, Step step) {
  return verb_profile(dump, label.verb_id, step,
                      label.condition_id.empty() ? std::nullopt : std::optional<std::string>(label.condition_id));
}

}  // namespace lmtraj
