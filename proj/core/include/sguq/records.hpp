#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sguq {

// One sampled answer with its per-token natural-log probabilities.
struct Generation {
  std::string text;
  std::vector<double> token_logprobs;  // each <= 0
  std::optional<int> judge_label;      // 0 or 1 when present
};

// One context (question + optional image reference) with its N sampled
// answers and, once labeled, the record-level truthfulness label.
struct GenerationRecord {
  std::string id;
  std::string question;
  std::optional<std::string> image_ref;  // opaque, never dereferenced
  std::string reference_answer;
  std::vector<Generation> generations;
  std::optional<int> label;  // 0 or 1 when present
};

struct DatasetManifest {
  std::string name;
  int sample_count = 0;  // N, fixed dataset-wide
  int record_count = 0;  // M
  std::map<std::string, std::string> generation_config;  // provenance only
};

struct Dataset {
  std::vector<GenerationRecord> records;
  DatasetManifest manifest;
};

// Throws ValidationError naming the record when an invariant fails.
// expected_n, when present, pins the generation count.
void validate_record(const GenerationRecord& record, std::optional<int> expected_n);

// Reads line-delimited records (one JSON object per line, UTF-8).
// N is inferred from the first record when expected_n is absent.
// Errors: ParseError naming the line number; ValidationError naming the
// record id (inconsistent generation count, duplicate id); "empty dataset"
// for an empty file.
Dataset load_records(const std::filesystem::path& path,
                     std::optional<int> expected_n = std::nullopt);

// Canonical serialization: one compact JSON object per line, keys sorted,
// optional fields omitted when absent. load_records(write_records(x)) == x.
void write_records(const std::vector<GenerationRecord>& records,
                   const std::filesystem::path& path);

// Majority vote over per-answer judge labels. Ties resolve to 0: an
// ambiguous record counts as incorrect. Requires every generation to carry
// judge_label (PreconditionError naming the record otherwise).
int majority_label(const GenerationRecord& record);

struct SplitResult {
  std::vector<GenerationRecord> train;
  std::vector<GenerationRecord> test;
};

// Deterministic seeded shuffle, then a ceil(M * train_fraction) / remainder
// partition. train_fraction must lie in the open interval (0, 1).
SplitResult split(const std::vector<GenerationRecord>& records,
                  double train_fraction, std::uint64_t seed);

}  // namespace sguq
