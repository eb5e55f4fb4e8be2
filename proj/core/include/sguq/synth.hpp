#pragma once

#include <cstdint>

#include "sguq/embedder.hpp"
#include "sguq/records.hpp"

namespace sguq {

// Deterministic synthetic dataset generator. Correct records place all N
// embeddings around one meaning-direction (concentrated spectrum);
// incorrect records mix spread_neg distinct directions (flat spectrum).
struct SynthSpec {
  int record_count = 0;          // M
  int sample_count = 20;         // N
  int dim = 32;                  // d
  double positive_fraction = 0.5;
  double concentration_pos = 0.05;  // kappa: Gaussian noise scale around a direction
  int spread_neg = 4;               // k >= 2 meaning-directions per negative record
  std::uint64_t seed = 42;
};

struct SynthResult {
  std::vector<GenerationRecord> records;
  std::vector<EmbeddingSet> embeddings;
  DatasetManifest manifest;
};

SynthResult synth_generate(const SynthSpec& spec);

}  // namespace sguq
