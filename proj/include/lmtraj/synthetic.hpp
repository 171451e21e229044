#pragma once

#include "lmtraj/dist_store.hpp"
#include "lmtraj/exemplar_baseline.hpp"

#include <map>

namespace lmtraj {

// Seeded dump whose verb profiles follow a softmax over
//   base + a(t) * class_direction + b(t) * verb_direction + prefix_noise
// where a(t) switches on at class_onset and b(t) at item_onset (checkpoint
// indices), each ramping linearly to full amplitude over `ramp` checkpoints.
//
// With with_minimal_pairs, every prefix is emitted twice under the conditions
// "no_gap" and "gap" sharing a source_id; the gap member adds a shared
// condition direction switched on at pair_onset[class] (defaults to
// item_onset).
struct SyntheticDumpSpec {
  std::vector<std::string> classes = {"class_a", "class_b"};
  std::size_t verbs_per_class = 8;
  std::size_t prefixes_per_verb = 4;
  std::size_t checkpoints = 60;
  Step first_step = 0;
  Step step_spacing = 10;
  int vocab_size = 1000;
  std::size_t class_onset = 10;
  std::size_t item_onset = 30;
  std::size_t ramp = 2;
  double class_amplitude = 1.0;
  double item_amplitude = 1.0;
  double condition_amplitude = 1.0;
  double prefix_noise = 0.05;
  bool with_minimal_pairs = false;
  std::map<std::string, std::size_t> pair_onset;
  std::string run_id = "synthetic";
  std::uint64_t seed = 1;
};

struct SyntheticDump {
  DumpManifest manifest;
  std::map<Step, StepMatrix> matrices;
};

SyntheticDump make_synthetic_dump(const SyntheticDumpSpec& spec);

// Writes the dump in the on-disk layout and returns its manifest.
DumpManifest write_synthetic_dump(const SyntheticDumpSpec& spec, const std::filesystem::path& dir);

struct SyntheticCorpusSpec {
  std::uint64_t tokens = 10'000'000;
  int vocab_size = 4000;
  std::size_t verbs_per_class = 8;
  std::size_t frame_every = 200;    // mean token spacing between frames
  std::size_t doc_length = 2000;    // tokens per document
  std::size_t class_support = 600;  // context tokens per class generator
  double class_overlap = 0.3;       // fraction of the support shared by both classes
  double burst_a = 0.9;             // within-document context reuse, class A
  double burst_b = 0.0;             // within-document context reuse, class B
  std::size_t window = 10;
  std::uint64_t seed = 7;
};

struct SyntheticCorpus {
  std::vector<TokenId> tokens;
  std::vector<FrameMatch> matches;
  std::vector<std::string> verbs;
  std::map<std::string, std::string> class_of;
  std::set<TokenId> stopword_ids;
  std::string class_a = "class_a";
  std::string class_b = "class_b";
  int vocab_size = 0;
};

// Seeded corpus in which every verb of a class draws frame contexts from one
// shared class generator. Class A re-uses its earlier contexts within a
// document (bursty early counts); documents are independent, so each verb's
// long-run context distribution is its class generator.
SyntheticCorpus make_synthetic_corpus(const SyntheticCorpusSpec& spec);

}  // namespace lmtraj
