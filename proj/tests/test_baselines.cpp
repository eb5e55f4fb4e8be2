#include "sguq/baselines.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"
#include "sguq/error.hpp"
#include "sguq/rng.hpp"
#include "stub_server.hpp"

using namespace sguq;
using nlohmann::json;

namespace {

// Table-driven judge for tracing the greedy rule by hand.
class TableJudge final : public PairwiseJudge {
 public:
  TableJudge(int n, std::map<std::pair<int, int>, bool> table)
      : n_(n), table_(std::move(table)) {}
  PairVerdict compare(int i, int j) override {
    const auto it = table_.find({std::min(i, j), std::max(i, j)});
    const bool eq = it != table_.end() && it->second;
    return {eq ? 1.0 : 0.0, eq};
  }
  int size() const override { return n_; }

 private:
  int n_;
  std::map<std::pair<int, int>, bool> table_;
};

Clustering make_clustering(std::vector<int> assignment) {
  Clustering c;
  c.record_id = "test";
  c.cluster_count = *std::max_element(assignment.begin(), assignment.end()) + 1;
  c.assignment = std::move(assignment);
  return c;
}

}  // namespace

TEST_CASE("log_perplexity definition and edge cases") {
  const std::vector<double> zeros = {0.0, 0.0, 0.0};
  CHECK(log_perplexity(zeros) == 0.0);

  const std::vector<double> single = {-2.0};
  CHECK(log_perplexity(single) == 2.0);

  const std::vector<double> two = {std::log(0.5), std::log(0.25)};
  CHECK(log_perplexity(two) == doctest::Approx(1.5 * std::log(2.0)).epsilon(1e-14));

  CHECK_THROWS_AS(log_perplexity(std::vector<double>{}), ArgumentError);
  const std::vector<double> positive = {0.5};
  CHECK_THROWS_AS(log_perplexity(positive), PreconditionError);
}

TEST_CASE("predictive_entropy is the arithmetic mean") {
  const std::vector<double> zeros(5, 0.0);
  CHECK(predictive_entropy(zeros) == 0.0);
  const std::vector<double> two = {1.0, 3.0};
  CHECK(predictive_entropy(two) == 2.0);

  Rng rng(13);
  std::vector<double> sampled(20);
  double naive = 0.0;
  for (auto& v : sampled) {
    v = std::abs(rng.gaussian());
    naive += v;
  }
  naive /= 20.0;
  CHECK(predictive_entropy(sampled) == doctest::Approx(naive).epsilon(1e-12));
}

TEST_CASE("greedy clustering: unanimous, disjoint and non-transitive cases") {
  TableJudge all(4, {{{0, 1}, true}, {{0, 2}, true}, {{0, 3}, true}});
  const Clustering single = cluster_greedy(all);
  CHECK(single.cluster_count == 1);
  for (int a : single.assignment) CHECK(a == 0);

  TableJudge none(4, {});
  const Clustering identity = cluster_greedy(none);
  CHECK(identity.cluster_count == 4);
  for (int i = 0; i < 4; ++i) CHECK(identity.assignment[static_cast<std::size_t>(i)] == i);

  // A=B, A!=C, B=C: C is compared against A (first member) only.
  TableJudge nontransitive(3, {{{0, 1}, true}, {{1, 2}, true}});
  const Clustering greedy = cluster_greedy(nontransitive);
  CHECK(greedy.assignment == std::vector<int>{0, 0, 1});
  CHECK(greedy.cluster_count == 2);
}

TEST_CASE("greedy clustering is deterministic and idempotent") {
  Rng rng(43);
  const Eigen::MatrixXd rows = oracle::random_unit_rows(10, 4, rng);
  CosineThresholdJudge judge(rows, 0.6);
  const Clustering a = cluster_greedy(judge);
  CosineThresholdJudge judge2(rows, 0.6);
  const Clustering b = cluster_greedy(judge2);
  CHECK(a.assignment == b.assignment);
}

TEST_CASE("cosine judge requires embeddings") {
  CHECK_THROWS_AS(cluster({"a", "b"}, nullptr, CosineThreshold{0.85}), ArgumentError);
}

TEST_CASE("nli judge requires bidirectional entailment") {
  // Entailment probability keyed on (premise, hypothesis) pair text.
  testing::StubServer server("/nli", [](const json& req) {
    const std::string premise = req.at("premise");
    const std::string hypothesis = req.at("hypothesis");
    double p = 0.1;
    if (premise == "p" && hypothesis == "q") p = 0.9;
    if (premise == "q" && hypothesis == "p") p = 0.4;  // one-directional only
    if (premise == "p" && hypothesis == "r") p = 0.9;
    if (premise == "r" && hypothesis == "p") p = 0.8;  // both directions
    return json{{"entailment_prob", p}};
  });
  NliEndpoint endpoint;
  endpoint.base_url = server.url("/nli");

  NliJudge judge(endpoint, {"p", "q", "r"});
  CHECK_FALSE(judge.compare(0, 1).equivalent);
  CHECK(judge.compare(0, 2).equivalent);
  CHECK(judge.compare(0, 2).similarity == doctest::Approx(0.85));

  const Clustering c = cluster({"p", "q", "r"}, endpoint);
  CHECK(c.assignment == std::vector<int>{0, 1, 0});
}

TEST_CASE("pairwise_similarity is symmetric with zero diagonal in [0, 1]") {
  Rng rng(59);
  const Eigen::MatrixXd rows = oracle::random_unit_rows(6, 4, rng);
  CosineThresholdJudge judge(rows, 0.85);
  const Eigen::MatrixXd w = pairwise_similarity(judge);
  CHECK(w.rows() == 6);
  for (int i = 0; i < 6; ++i) {
    CHECK(w(i, i) == 0.0);
    for (int j = 0; j < 6; ++j) {
      CHECK(w(i, j) == w(j, i));
      CHECK(w(i, j) >= 0.0);
      CHECK(w(i, j) <= 1.0);
    }
  }
}

TEST_CASE("semantic_entropy hand cases") {
  const std::vector<double> uniform3 = {-1.0, -1.0, -1.0};
  CHECK(semantic_entropy(make_clustering({0, 0, 0}), uniform3) == 0.0);

  // two clusters, equal sequence probabilities
  const std::vector<double> uniform4 = {-2.0, -2.0, -2.0, -2.0};
  CHECK(semantic_entropy(make_clustering({0, 0, 1, 1}), uniform4) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // probabilities proportional to {0.5, 0.25, 0.25}, clusters {0,1},{2}
  const std::vector<double> lp = {std::log(0.5), std::log(0.25), std::log(0.25)};
  const double expected = -(0.75 * std::log(0.75) + 0.25 * std::log(0.25));
  CHECK(semantic_entropy(make_clustering({0, 0, 1}), lp) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("semantic_entropy invariances") {
  Rng rng(47);
  std::vector<double> lp(6);
  for (auto& v : lp) v = -std::abs(rng.gaussian());
  const Clustering c = make_clustering({0, 1, 0, 2, 1, 0});
  const double base = semantic_entropy(c, lp);

  // softmax shift invariance
  std::vector<double> shifted = lp;
  for (auto& v : shifted) v += 3.7;
  CHECK(semantic_entropy(c, shifted) == doctest::Approx(base).epsilon(1e-12));

  // cluster relabeling invariance (swap labels 0 and 2)
  Clustering relabeled = c;
  for (auto& a : relabeled.assignment) a = a == 0 ? 2 : (a == 2 ? 0 : a);
  CHECK(semantic_entropy(relabeled, lp) == doctest::Approx(base).epsilon(1e-12));

  CHECK(base >= 0.0);
  CHECK(base <= std::log(static_cast<double>(c.cluster_count)) + 1e-12);
}

TEST_CASE("discrete_semantic_entropy hand cases") {
  std::vector<int> one_cluster(20, 0);
  CHECK(discrete_semantic_entropy(make_clustering(one_cluster)) == 0.0);

  std::vector<int> halves;
  for (int i = 0; i < 20; ++i) halves.push_back(i < 10 ? 0 : 1);
  CHECK(discrete_semantic_entropy(make_clustering(halves)) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  std::vector<int> split;  // sizes {10, 5, 5}
  for (int i = 0; i < 20; ++i) split.push_back(i < 10 ? 0 : (i < 15 ? 1 : 2));
  const double expected = 0.5 * std::log(2.0) + 0.5 * std::log(4.0);
  CHECK(discrete_semantic_entropy(make_clustering(split)) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("SE equals DSE under uniform sequence probabilities") {
  Rng rng(53);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 4 + static_cast<int>(rng.index(8));
    std::vector<int> assignment(static_cast<std::size_t>(n));
    int next = 0;
    for (auto& a : assignment) {
      a = static_cast<int>(rng.index(static_cast<std::size_t>(next + 1)));
      if (a == next) ++next;
    }
    const Clustering c = make_clustering(assignment);
    const std::vector<double> uniform(static_cast<std::size_t>(n), -0.5);
    CHECK(semantic_entropy(c, uniform) ==
          doctest::Approx(discrete_semantic_entropy(c)).epsilon(1e-12));
  }
}

TEST_CASE("kle_entropy: disconnected graph gives ln N, strong coupling shrinks it") {
  const int n = 4;
  const Eigen::MatrixXd disconnected = Eigen::MatrixXd::Zero(n, n);
  CHECK(kle_entropy(disconnected, HeatKernel{0.3}) ==
        doctest::Approx(std::log(static_cast<double>(n))).epsilon(1e-12));

  // connected graph, long diffusion time: kernel approaches rank one
  Eigen::MatrixXd full = Eigen::MatrixXd::Ones(n, n);
  full.diagonal().setZero();
  CHECK(kle_entropy(full, HeatKernel{1000.0}) == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("kle_entropy matches the N=2 closed forms") {
  Eigen::MatrixXd w(2, 2);
  w << 0.0, 1.0, 1.0, 0.0;

  // heat kernel, t = 0.3: Laplacian eigenvalues {0, 2}
  const double k2 = std::exp(-0.6);
  const double z = 1.0 + k2;
  const double expected_heat = -(1.0 / z) * std::log(1.0 / z) - (k2 / z) * std::log(k2 / z);
  CHECK(kle_entropy(w, HeatKernel{0.3}) == doctest::Approx(expected_heat).epsilon(1e-12));
  CHECK(kle_entropy(w, HeatKernel{0.3}) == doctest::Approx(0.6500).epsilon(1e-3));

  // Matern defaults nu=1, kappa=1: spectrum transform (2 + mu)^-1
  const double m1 = 1.0 / 2.0, m2 = 1.0 / 4.0;
  const double zm = m1 + m2;
  const double expected_matern =
      -(m1 / zm) * std::log(m1 / zm) - (m2 / zm) * std::log(m2 / zm);
  CHECK(kle_entropy(w, MaternKernel{}) == doctest::Approx(expected_matern).epsilon(1e-12));
}

TEST_CASE("kle_entropy heat entropy decreases in t on a connected graph") {
  Eigen::MatrixXd w(2, 2);
  w << 0.0, 0.7, 0.7, 0.0;
  double previous = std::log(2.0) + 1e-9;
  for (double t : {0.1, 0.3, 1.0, 3.0, 10.0}) {
    const double h = kle_entropy(w, HeatKernel{t});
    CHECK(h < previous);
    CHECK(h >= 0.0);
    previous = h;
  }
}

TEST_CASE("kle_entropy validates its input") {
  Eigen::MatrixXd asym(2, 2);
  asym << 0.0, 0.3, 0.5, 0.0;
  CHECK_THROWS_AS(kle_entropy(asym, HeatKernel{}), ValidationError);

  Eigen::MatrixXd range(2, 2);
  range << 0.0, 1.5, 1.5, 0.0;
  CHECK_THROWS_AS(kle_entropy(range, HeatKernel{}), ValidationError);

  // self-loops are stripped rather than rejected
  Eigen::MatrixXd loops = Eigen::MatrixXd::Identity(3, 3);
  CHECK(kle_entropy(loops, HeatKernel{0.3}) ==
        doctest::Approx(std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("sequence_scores ties log-perplexities to their mean") {
  GenerationRecord r;
  r.id = "seq";
  r.question = "q";
  r.reference_answer = "a";
  r.generations.push_back({"x", {-1.0, -1.0}, std::nullopt});
  r.generations.push_back({"y", {-3.0}, std::nullopt});
  const SequenceScore s = sequence_scores(r);
  CHECK(s.per_answer_logppl == std::vector<double>{1.0, 3.0});
  CHECK(s.predictive_entropy == 2.0);
}

TEST_CASE("clustering file round-trip validates indices") {
  std::vector<Clustering> cs = {make_clustering({0, 1, 0, 2})};
  cs[0].record_id = "c0";
  const auto path = std::filesystem::temp_directory_path() / "sguq_clusters.jsonl";
  save_clusterings(cs, path);
  const auto loaded = load_clusterings(path);
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].assignment == cs[0].assignment);
  CHECK(loaded[0].cluster_count == 3);

  std::ofstream out(path);
  out << R"({"id":"gap","assignment":[0,2,2]})" << '\n';  // index 1 unused
  out.close();
  CHECK_THROWS_AS(load_clusterings(path), ValidationError);
}
