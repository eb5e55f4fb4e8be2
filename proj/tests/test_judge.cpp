#include "sguq/judge.hpp"

#include <filesystem>

#include "doctest.h"
#include "json.hpp"
#include "sguq/error.hpp"
#include "stub_server.hpp"

using namespace sguq;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json chat_reply(const std::string& text) {
  return json{{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}}}}};
}

JudgeEndpoint endpoint_for(const testing::StubServer& server) {
  JudgeEndpoint e;
  e.base_url = server.url("/chat");
  e.model_name = "stub-judge";
  e.max_retries = 1;
  return e;
}

GenerationRecord judged_record(const std::string& id, int n) {
  GenerationRecord r;
  r.id = id;
  r.question = "what is 2+2?";
  r.reference_answer = "4";
  for (int i = 0; i < n; ++i)
    r.generations.push_back({"answer " + std::to_string(i), {-0.5}, std::nullopt});
  return r;
}

}  // namespace

TEST_CASE("render_prompt substitutes fields verbatim") {
  const std::string prompt = render_prompt("2+2?", "4", "four");
  CHECK(prompt ==
        "We are assessing the quality of answers to the following question: 2+2?.\n"
        "The expected answer is: 4.\n"
        "The proposed answer is: four.\n"
        "Within the context of the question, does the proposed answer mean the same "
        "as the expected answer?\nRespond only with yes or no.\nResponse:");

  // embedded newlines survive untouched
  const std::string multi = render_prompt("line1\nline2", "ref", "cand");
  CHECK(multi.find("line1\nline2") != std::string::npos);

  CHECK_THROWS_AS(render_prompt("q", "", "c"), ArgumentError);
  CHECK_THROWS_AS(render_prompt("", "r", "c"), ArgumentError);
}

TEST_CASE("judge_answer parses verdicts by leading token") {
  testing::StubServer yes("/chat", [](const json&) { return chat_reply("Yes"); });
  CHECK(judge_answer(endpoint_for(yes), "q", "r", "c") == 1);

  testing::StubServer no("/chat", [](const json&) { return chat_reply(" no."); });
  CHECK(judge_answer(endpoint_for(no), "q", "r", "c") == 0);

  testing::StubServer maybe("/chat", [](const json&) { return chat_reply("maybe"); });
  const auto endpoint = endpoint_for(maybe);
  CHECK_THROWS_WITH_AS(judge_answer(endpoint, "q", "r", "c"),
                       doctest::Contains("maybe"), LabelError);
  CHECK(maybe.calls() == 2);  // one re-ask before giving up
}

TEST_CASE("judge_answer retries transport failures then fails") {
  JudgeEndpoint dead;
  dead.base_url = "http://127.0.0.1:9/chat";
  dead.timeout = std::chrono::milliseconds(200);
  dead.max_retries = 1;
  CHECK_THROWS_AS(judge_answer(dead, "q", "r", "c"), IoError);
}

TEST_CASE("label_dataset takes the majority and honors the tie rule") {
  auto counter = std::make_shared<int>(0);
  testing::StubServer alternating("/chat", [counter](const json&) {
    return chat_reply(((*counter)++ % 2 == 0) ? "yes" : "no");
  });
  const auto endpoint = endpoint_for(alternating);

  auto labeled = label_dataset({judged_record("tie", 20)}, endpoint);
  REQUIRE(labeled.size() == 1);
  CHECK(labeled[0].label == 0);  // 10 yes / 10 no resolves down

  testing::StubServer all_yes("/chat", [](const json&) { return chat_reply("yes"); });
  labeled = label_dataset({judged_record("yes", 20)}, endpoint_for(all_yes));
  CHECK(labeled[0].label == 1);
}

TEST_CASE("label_dataset skips already-judged answers") {
  testing::StubServer server("/chat", [](const json&) { return chat_reply("yes"); });
  auto record = judged_record("done", 20);
  for (auto& g : record.generations) g.judge_label = 1;
  const auto labeled = label_dataset({record}, endpoint_for(server));
  CHECK(server.calls() == 0);
  CHECK(labeled[0].label == 1);
}

TEST_CASE("label_dataset resumes from its checkpoint without re-judging") {
  const auto checkpoint = fs::temp_directory_path() / "sguq_judge.ckpt";
  fs::remove(checkpoint);

  {
    testing::StubServer server("/chat", [](const json&) { return chat_reply("yes"); });
    server.fail_after(7);
    const auto endpoint = endpoint_for(server);
    try {
      label_dataset({judged_record("resume", 20)}, endpoint, checkpoint);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.kind() == "io");
      CHECK(std::string(e.what()).find("resume") != std::string::npos);
    }
    CHECK(server.calls() >= 7);
  }

  testing::StubServer server("/chat", [](const json&) { return chat_reply("yes"); });
  const auto labeled =
      label_dataset({judged_record("resume", 20)}, endpoint_for(server), checkpoint);
  CHECK(labeled[0].label == 1);
  CHECK(server.calls() == 13);  // 20 answers minus 7 checkpointed verdicts
}

TEST_CASE("label_dataset reports failing coordinates") {
  testing::StubServer server("/chat", [](const json&) { return chat_reply("hmm"); });
  const auto endpoint = endpoint_for(server);
  CHECK_THROWS_WITH_AS(label_dataset({judged_record("where", 3)}, endpoint),
                       doctest::Contains("where"), Error);
}
