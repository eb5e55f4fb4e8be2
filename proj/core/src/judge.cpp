#include "sguq/judge.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include "http_client.hpp"
#include "json_io.hpp"
#include "sguq/error.hpp"

namespace sguq {

namespace {

std::string trim_lower(const std::string& s) {
  auto begin = s.begin();
  auto end = s.end();
  while (begin != end && std::isspace(static_cast<unsigned char>(*begin))) ++begin;
  while (end != begin && std::isspace(static_cast<unsigned char>(*(end - 1)))) --end;
  std::string out(begin, end);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// -1 when the verdict is neither a leading yes nor a leading no.
int parse_verdict(const std::string& raw) {
  const std::string text = trim_lower(raw);
  if (text.rfind("yes", 0) == 0) return 1;
  if (text.rfind("no", 0) == 0) return 0;
  return -1;
}

std::string ask(const JudgeEndpoint& endpoint, const std::string& prompt) {
  detail::json req;
  req["model"] = endpoint.model_name;
  req["temperature"] = endpoint.temperature;
  req["messages"] = detail::json::array({{{"role", "user"}, {"content", prompt}}});
  const std::string body =
      detail::post_json(endpoint.base_url, req.dump(), endpoint.auth_token_env,
                        endpoint.timeout, endpoint.max_retries, "judge");
  const detail::json resp = detail::parse_object(body, "judge response");
  try {
    return resp.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const detail::json::exception& e) {
    throw ParseError(std::string("judge response shape: ") + e.what());
  }
}

using CheckpointKey = std::pair<std::string, std::size_t>;

std::map<CheckpointKey, int> load_checkpoint(const std::filesystem::path& path) {
  std::map<CheckpointKey, int> seen;
  if (!std::filesystem::exists(path)) return seen;
  detail::for_each_jsonl(path, [&](std::size_t, const detail::json& j) {
    seen[{j.at("record_id").get<std::string>(), j.at("answer_index").get<std::size_t>()}] =
        j.at("label").get<int>();
  });
  return seen;
}

}  // namespace

std::string render_prompt(const std::string& question, const std::string& reference,
                          const std::string& candidate) {
  if (question.empty()) throw ArgumentError("render_prompt: empty question");
  if (reference.empty()) throw ArgumentError("render_prompt: empty reference answer");
  if (candidate.empty()) throw ArgumentError("render_prompt: empty candidate answer");
  std::string prompt;
  prompt.reserve(256 + question.size() + reference.size() + candidate.size());
  prompt += "We are assessing the quality of answers to the following question: ";
  prompt += question;
  prompt += ".\nThe expected answer is: ";
  prompt += reference;
  prompt += ".\nThe proposed answer is: ";
  prompt += candidate;
  prompt += ".\nWithin the context of the question, does the proposed answer mean the "
            "same as the expected answer?\nRespond only with yes or no.\nResponse:";
  return prompt;
}

int judge_answer(const JudgeEndpoint& endpoint, const std::string& question,
                 const std::string& reference, const std::string& candidate) {
  const std::string prompt = render_prompt(question, reference, candidate);
  std::string raw = ask(endpoint, prompt);
  int verdict = parse_verdict(raw);
  if (verdict < 0) {
    // One re-ask for the occasional decorated verdict, then give up.
    raw = ask(endpoint, prompt);
    verdict = parse_verdict(raw);
  }
  if (verdict < 0)
    throw LabelError("unparseable judge verdict: \"" + raw + "\"");
  return verdict;
}

std::vector<GenerationRecord> label_dataset(
    std::vector<GenerationRecord> records, const JudgeEndpoint& endpoint,
    const std::optional<std::filesystem::path>& checkpoint) {
  std::map<CheckpointKey, int> done;
  std::ofstream log;
  if (checkpoint) {
    done = load_checkpoint(*checkpoint);
    log.open(*checkpoint, std::ios::app);
    if (!log) throw IoError("cannot open checkpoint " + checkpoint->string());
  }

  for (auto& record : records) {
    for (std::size_t i = 0; i < record.generations.size(); ++i) {
      auto& generation = record.generations[i];
      if (generation.judge_label) continue;  // idempotent: never re-judge
      if (const auto it = done.find({record.id, i}); it != done.end()) {
        generation.judge_label = it->second;
        continue;
      }
      int verdict;
      try {
        verdict = judge_answer(endpoint, record.question, record.reference_answer,
                               generation.text);
      } catch (const Error& e) {
        throw Error(e.kind(), "record " + record.id + ", answer " + std::to_string(i) +
                                  ": " + e.what());
      }
      generation.judge_label = verdict;
      if (checkpoint) {
        detail::json j;
        j["record_id"] = record.id;
        j["answer_index"] = i;
        j["label"] = verdict;
        log << j.dump() << '\n';
        log.flush();
      }
    }
    record.label = majority_label(record);
  }
  return records;
}

}  // namespace sguq
