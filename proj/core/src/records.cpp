#include "sguq/records.hpp"

#include <cmath>
#include <unordered_set>

#include "json_io.hpp"
#include "sguq/error.hpp"
#include "sguq/rng.hpp"

namespace sguq {

namespace detail {
namespace {

json generation_to_json(const Generation& g) {
  json j;
  j["text"] = g.text;
  j["token_logprobs"] = g.token_logprobs;
  if (g.judge_label) j["judge_label"] = *g.judge_label;
  return j;
}

json record_to_json(const GenerationRecord& r) {
  json j;
  j["id"] = r.id;
  j["question"] = r.question;
  if (r.image_ref) j["image_ref"] = *r.image_ref;
  j["reference_answer"] = r.reference_answer;
  json gens = json::array();
  for (const auto& g : r.generations) gens.push_back(generation_to_json(g));
  j["generations"] = std::move(gens);
  if (r.label) j["label"] = *r.label;
  return j;
}

int parse_binary(const json& j, const std::string& context) {
  if (!j.is_number_integer())
    throw ValidationError(context + ": expected 0 or 1, got " + j.dump());
  const int v = j.get<int>();
  if (v != 0 && v != 1)
    throw ValidationError(context + ": expected 0 or 1, got " + std::to_string(v));
  return v;
}

GenerationRecord record_from_json(const json& j, std::size_t lineno) {
  const std::string where = "line " + std::to_string(lineno);
  if (!j.is_object()) throw ParseError(where + ": record is not an object");
  GenerationRecord r;
  try {
    r.id = j.at("id").get<std::string>();
    r.question = j.at("question").get<std::string>();
    if (j.contains("image_ref")) r.image_ref = j.at("image_ref").get<std::string>();
    r.reference_answer = j.at("reference_answer").get<std::string>();
    for (const auto& gj : j.at("generations")) {
      Generation g;
      g.text = gj.at("text").get<std::string>();
      g.token_logprobs = gj.at("token_logprobs").get<std::vector<double>>();
      if (gj.contains("judge_label"))
        g.judge_label = parse_binary(gj.at("judge_label"),
                                     "record " + r.id + ": judge_label");
      r.generations.push_back(std::move(g));
    }
    if (j.contains("label"))
      r.label = parse_binary(j.at("label"), "record " + r.id + ": label");
  } catch (const json::exception& e) {
    throw ParseError(where + ": " + e.what());
  }
  return r;
}

}  // namespace
}  // namespace detail

void validate_record(const GenerationRecord& record, std::optional<int> expected_n) {
  if (record.id.empty()) throw ValidationError("record with empty id");
  if (expected_n && static_cast<int>(record.generations.size()) != *expected_n) {
    throw ValidationError("record " + record.id + ": expected " +
                          std::to_string(*expected_n) + " generations, found " +
                          std::to_string(record.generations.size()));
  }
  if (record.label && *record.label != 0 && *record.label != 1)
    throw ValidationError("record " + record.id + ": label must be 0 or 1");
  for (std::size_t i = 0; i < record.generations.size(); ++i) {
    const auto& g = record.generations[i];
    const std::string where =
        "record " + record.id + ", generation " + std::to_string(i);
    if (!g.text.empty() && g.token_logprobs.empty())
      throw ValidationError(where + ": non-empty text with empty token_logprobs");
    for (double lp : g.token_logprobs) {
      if (!std::isfinite(lp) || lp > 0.0)
        throw ValidationError(where + ": token logprob " + std::to_string(lp) +
                              " must be finite and <= 0");
    }
    if (g.judge_label && *g.judge_label != 0 && *g.judge_label != 1)
      throw ValidationError(where + ": judge_label must be 0 or 1");
  }
}

Dataset load_records(const std::filesystem::path& path, std::optional<int> expected_n) {
  Dataset ds;
  ds.manifest.name = path.stem().string();
  std::optional<int> n = expected_n;
  std::unordered_set<std::string> seen;

  detail::for_each_jsonl(path, [&](std::size_t lineno, const detail::json& obj) {
    GenerationRecord r = detail::record_from_json(obj, lineno);
    if (!n) n = static_cast<int>(r.generations.size());
    validate_record(r, n);
    if (!seen.insert(r.id).second)
      throw ValidationError("duplicate record id " + r.id);
    ds.records.push_back(std::move(r));
  });

  if (ds.records.empty()) throw ValidationError("empty dataset: " + path.string());
  if (*n < 2)
    throw ValidationError("dataset sample count must be >= 2, found " +
                          std::to_string(*n));
  ds.manifest.sample_count = *n;
  ds.manifest.record_count = static_cast<int>(ds.records.size());
  return ds;
}

void write_records(const std::vector<GenerationRecord>& records,
                   const std::filesystem::path& path) {
  auto out = detail::open_output(path);
  for (const auto& r : records) out << detail::record_to_json(r).dump() << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

int majority_label(const GenerationRecord& record) {
  int ones = 0;
  int zeros = 0;
  for (std::size_t i = 0; i < record.generations.size(); ++i) {
    const auto& g = record.generations[i];
    if (!g.judge_label)
      throw PreconditionError("record " + record.id + ": generation " +
                              std::to_string(i) + " has no judge_label");
    (*g.judge_label == 1 ? ones : zeros) += 1;
  }
  // Ties count as incorrect.
  return ones > zeros ? 1 : 0;
}

SplitResult split(const std::vector<GenerationRecord>& records, double train_fraction,
                  std::uint64_t seed) {
  if (records.empty()) throw PreconditionError("split: no records");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ArgumentError("train_fraction must lie in (0, 1), got " +
                        std::to_string(train_fraction));

  const std::size_t m = records.size();
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;

  // Fisher-Yates with our own index draw; std::shuffle is not pinned by the
  // standard and would make seeds toolchain-dependent.
  Rng rng(seed);
  for (std::size_t i = m - 1; i > 0; --i) {
    const std::size_t j = rng.index(i + 1);
    std::swap(order[i], order[j]);
  }

  const auto train_size = static_cast<std::size_t>(
      std::ceil(static_cast<double>(m) * train_fraction));
  SplitResult result;
  result.train.reserve(train_size);
  result.test.reserve(m - train_size);
  for (std::size_t i = 0; i < m; ++i) {
    (i < train_size ? result.train : result.test).push_back(records[order[i]]);
  }
  return result;
}

}  // namespace sguq
