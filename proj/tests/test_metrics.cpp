#include "sguq/metrics.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "oracles.hpp"
#include "sguq/error.hpp"
#include "sguq/rng.hpp"

using namespace sguq;

namespace {

std::vector<ScoredRecord> scored_from(const std::vector<double>& confidences,
                                      const std::vector<int>& labels) {
  std::vector<ScoredRecord> out;
  for (std::size_t i = 0; i < confidences.size(); ++i)
    out.push_back({"r" + std::to_string(i), confidences[i], labels[i], std::nullopt});
  return out;
}

}  // namespace

TEST_CASE("auroc hand cases") {
  CHECK(auroc(scored_from({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0})) == 1.0);
  CHECK(auroc(scored_from({0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0})) == 0.5);
  CHECK(auroc(scored_from({0.9, 0.8, 0.3, 0.2}, {1, 0, 1, 0})) == 0.75);
  CHECK_THROWS_WITH_AS(auroc(scored_from({0.1, 0.2}, {1, 1})),
                       doctest::Contains("AUROC undefined"), ValidationError);
}

TEST_CASE("auroc is invariant under strictly increasing transforms") {
  Rng rng(3);
  std::vector<double> confidences;
  std::vector<int> labels;
  for (int i = 0; i < 50; ++i) {
    confidences.push_back(rng.gaussian());
    labels.push_back(static_cast<int>(rng.index(2)));
  }
  labels[0] = 1;
  labels[1] = 0;
  const double base = auroc(scored_from(confidences, labels));

  std::vector<double> transformed;
  for (double c : confidences) transformed.push_back(std::exp(0.5 * c) + 3.0);
  CHECK(auroc(scored_from(transformed, labels)) == base);

  // label flip + confidence negation is a symmetry
  std::vector<double> negated;
  std::vector<int> flipped;
  for (double c : confidences) negated.push_back(-c);
  for (int l : labels) flipped.push_back(1 - l);
  CHECK(std::abs(auroc(scored_from(negated, flipped)) - base) < 1e-12);
}

TEST_CASE("auroc equals the O(n^2) pair-counting oracle") {
  Rng rng(101);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng.index(199));
    std::vector<double> confidences;
    std::vector<int> labels;
    for (int i = 0; i < n; ++i) {
      // quantized confidences force plenty of ties
      confidences.push_back(std::round(4.0 * rng.gaussian()) / 4.0);
      labels.push_back(static_cast<int>(rng.index(2)));
    }
    labels[0] = 1;
    if (n > 1) labels[1] = 0;
    const auto scored = scored_from(confidences, labels);
    CHECK(std::abs(auroc(scored) - oracle::pair_count_auroc(scored)) <= 1e-12);
  }
}

TEST_CASE("auarc hand cases") {
  CHECK(auarc(scored_from({0.9, 0.1, 0.5}, {1, 1, 1})) == 1.0);
  CHECK(auarc(scored_from({0.9, 0.1}, {1, 0})) == 0.75);
  CHECK(auarc(scored_from({0.9, 0.1}, {0, 1})) == 0.25);
}

TEST_CASE("auarc breaks confidence ties by record id") {
  std::vector<ScoredRecord> scored = {{"b", 0.5, 0, std::nullopt},
                                      {"a", 0.5, 1, std::nullopt}};
  // "a" (label 1) ranks first: prefix accuracies {1, 0.5}
  CHECK(auarc(scored) == 0.75);
}

TEST_CASE("ece hand cases") {
  // perfect confidence, perfect accuracy
  CHECK(ece(scored_from({1.0, 1.0, 1.0}, {1, 1, 1})).value == 0.0);

  // one bin: confidence 0.8, accuracy 8/10
  {
    std::vector<double> confidences(10, 0.8);
    std::vector<int> labels(10, 1);
    labels[8] = labels[9] = 0;
    CHECK(std::abs(ece(scored_from(confidences, labels)).value) <= 1e-15);
  }

  // two equal bins: (0.9, acc 0.5) and (0.1, acc 0.1)
  {
    std::vector<double> confidences;
    std::vector<int> labels;
    for (int i = 0; i < 10; ++i) {
      confidences.push_back(0.9);
      labels.push_back(i < 5 ? 1 : 0);
    }
    for (int i = 0; i < 10; ++i) {
      confidences.push_back(0.1);
      labels.push_back(i < 1 ? 1 : 0);
    }
    CHECK(std::abs(ece(scored_from(confidences, labels)).value - 0.2) <= 1e-15);
  }
}

TEST_CASE("ece bins are right-inclusive and count every record") {
  const auto scored = scored_from({0.0, 0.1, 0.10000000001, 1.0}, {0, 0, 1, 1});
  const EceResult r = ece(scored);
  CHECK(r.bins[0].count == 2);  // 0.0 and 0.1 both in (.., 0.1]
  CHECK(r.bins[1].count == 1);
  CHECK(r.bins[9].count == 1);
  std::size_t total = 0;
  for (const auto& b : r.bins) total += b.count;
  CHECK(total == scored.size());
}

TEST_CASE("ece rejects out-of-range confidences with a pointer to the mapping") {
  CHECK_THROWS_WITH_AS(ece(scored_from({1.5, 0.2}, {1, 0})),
                       doctest::Contains("calibration_map"), ArgumentError);
}

TEST_CASE("ece is zero when every bin is self-consistent") {
  // two records at 0.5, one correct; four at 0.75, three correct
  std::vector<double> confidences = {0.5, 0.5, 0.75, 0.75, 0.75, 0.75};
  std::vector<int> labels = {1, 0, 1, 1, 1, 0};
  CHECK(std::abs(ece(scored_from(confidences, labels)).value) <= 1e-15);
}

TEST_CASE("calibration_map orients and rescales") {
  const std::vector<double> entropies = {0.0, std::log(2.0)};
  const auto mapped = calibration_map(entropies, ScoreDirection::higher_uncertain);
  CHECK(mapped == std::vector<double>{1.0, 0.0});

  const std::vector<double> already = {0.0, 0.3, 1.0};
  const auto kept = calibration_map(already, ScoreDirection::higher_confident);
  CHECK(kept[0] == 0.0);
  CHECK(kept[1] == doctest::Approx(0.3));
  CHECK(kept[2] == 1.0);

  const std::vector<double> constant = {2.5, 2.5, 2.5};
  const auto degenerate = calibration_map(constant, ScoreDirection::higher_confident);
  CHECK(degenerate == std::vector<double>{0.5, 0.5, 0.5});
}

TEST_CASE("filtered_report keeps both views") {
  // no unsafe record: filtered equals unfiltered
  {
    std::vector<ScoredRecord> scored = {{"a", 0.9, 1, false},
                                        {"b", 0.4, 0, false},
                                        {"c", 0.8, 1, false}};
    const EvalReport r = filtered_report("m", scored);
    REQUIRE(r.auroc_filtered.has_value());
    CHECK(*r.auroc_filtered == r.auroc);
    CHECK_FALSE(r.filtered_degenerate);
  }

  // unsafe records sit at chance; removal cannot hurt
  {
    std::vector<ScoredRecord> scored;
    Rng rng(7);
    for (int i = 0; i < 40; ++i) {
      const int label = static_cast<int>(rng.index(2));
      scored.push_back({"g" + std::to_string(i), label == 1 ? 0.8 : 0.2, label, false});
    }
    for (int i = 0; i < 10; ++i)
      scored.push_back({"u" + std::to_string(i), 0.5, i % 2, true});
    const EvalReport r = filtered_report("m", scored);
    REQUIRE(r.auroc_filtered.has_value());
    CHECK(*r.auroc_filtered >= r.auroc);
    CHECK(*r.auroc_filtered ==
          doctest::Approx(oracle::pair_count_auroc(
              {scored.begin(), scored.begin() + 40})));
  }

  // all-positive filtered subset drops the filtered number
  {
    std::vector<ScoredRecord> scored = {{"a", 0.9, 1, false},
                                        {"b", 0.4, 0, true},
                                        {"c", 0.8, 1, false}};
    const EvalReport r = filtered_report("m", scored);
    CHECK_FALSE(r.auroc_filtered.has_value());
    CHECK(r.filtered_degenerate);
  }

  // missing unsafe flags are a precondition failure
  std::vector<ScoredRecord> missing = {{"a", 0.9, 1, std::nullopt},
                                       {"b", 0.4, 0, false}};
  CHECK_THROWS_AS(filtered_report("m", missing), PreconditionError);
}

TEST_CASE("report files round-trip and the table stays stable") {
  std::vector<ScoredRecord> scored = {{"a", 0.9, 1, false},
                                      {"b", 0.4, 0, true},
                                      {"c", 0.7, 0, false},
                                      {"d", 0.8, 1, false}};
  std::vector<EvalReport> reports = {filtered_report("sgpu", scored),
                                     evaluate_method("pe", scored)};

  const auto dir = std::filesystem::temp_directory_path();
  const auto json_path = dir / "sguq_report.json";
  const auto table_path = dir / "sguq_report.csv";
  write_reports_json(reports, "unit", json_path);
  const auto loaded = load_reports_json(json_path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].method == "sgpu");
  CHECK(loaded[0].auroc == reports[0].auroc);
  CHECK(loaded[0].auroc_filtered == reports[0].auroc_filtered);
  CHECK(loaded[1].reliability_bins.size() == reports[1].reliability_bins.size());

  write_report_table(reports, table_path);
  std::ifstream in(table_path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "method,auroc,auarc,ece,auroc_filtered,n");
}
