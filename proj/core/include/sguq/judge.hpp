#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sguq/records.hpp"

namespace sguq {

struct JudgeEndpoint {
  std::string base_url;  // full chat-completion endpoint URL
  std::string model_name;
  std::string auth_token_env;
  double temperature = 0.0;  // pinned to 0 for deterministic verdicts
  std::chrono::milliseconds timeout{30000};
  int max_retries = 3;
};

// Fixed yes/no grading prompt with the three fields substituted verbatim.
// Empty fields raise ArgumentError.
std::string render_prompt(const std::string& question, const std::string& reference,
                          const std::string& candidate);

// One graded answer: response lowercased and trimmed, leading "yes" -> 1,
// leading "no" -> 0, anything else re-asked once and then LabelError
// carrying the raw response. Transport failures retry up to max_retries.
int judge_answer(const JudgeEndpoint& endpoint, const std::string& question,
                 const std::string& reference, const std::string& candidate);

// Judges every unlabeled answer, then sets each record's label by majority
// vote. Already-judged answers are skipped, so the call is idempotent and
// resumable; when a checkpoint path is given every verdict is appended
// there and replayed on restart.
std::vector<GenerationRecord> label_dataset(
    std::vector<GenerationRecord> records, const JudgeEndpoint& endpoint,
    const std::optional<std::filesystem::path>& checkpoint = std::nullopt);

}  // namespace sguq
