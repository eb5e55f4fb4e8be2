#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sguq/records.hpp"

namespace sguq {

// Per-record token-probability summary.
struct SequenceScore {
  std::string record_id;
  std::vector<double> per_answer_logppl;  // each >= 0
  double predictive_entropy = 0.0;        // mean of per_answer_logppl
};

// Partition of a record's N answers into K meaning-clusters.
struct Clustering {
  std::string record_id;
  std::vector<int> assignment;  // N indices in [0, K)
  int cluster_count = 0;

  int size() const { return static_cast<int>(assignment.size()); }
};

struct PairVerdict {
  double similarity;  // in [0, 1]
  bool equivalent;
};

// Abstract pairwise answer comparison. compare(i, j) is an ordered query;
// concrete judges define its symmetry.
class PairwiseJudge {
 public:
  virtual ~PairwiseJudge() = default;
  virtual PairVerdict compare(int i, int j) = 0;
  virtual int size() const = 0;
};

// Cosine similarity on unit-norm rows, clamped into [0, 1]; equivalent
// when similarity >= tau. Symmetric by construction.
class CosineThresholdJudge final : public PairwiseJudge {
 public:
  CosineThresholdJudge(const Eigen::MatrixXd& unit_rows, double tau = 0.85);
  PairVerdict compare(int i, int j) override;
  int size() const override { return static_cast<int>(rows_.rows()); }

 private:
  Eigen::MatrixXd rows_;
  double tau_;
};

struct NliEndpoint {
  std::string base_url;
  std::string auth_token_env;
  std::chrono::milliseconds timeout{10000};
  int max_retries = 3;
};

// External NLI service; equivalence requires entailment_prob >= 0.5 in both
// directions. similarity reported as the mean of the two directional probs.
class NliJudge final : public PairwiseJudge {
 public:
  NliJudge(NliEndpoint endpoint, std::vector<std::string> answers);
  PairVerdict compare(int i, int j) override;
  int size() const override { return static_cast<int>(answers_.size()); }

 private:
  double entailment(int premise, int hypothesis);
  NliEndpoint endpoint_;
  std::vector<std::string> answers_;
};

// -(1/T) * sum(token_logprobs); empty input raises ArgumentError,
// a positive entry raises PreconditionError.
double log_perplexity(std::span<const double> token_logprobs);

// Arithmetic mean of the per-answer log-perplexities.
double predictive_entropy(std::span<const double> per_answer_logppl);

// Both of the above applied to one record.
SequenceScore sequence_scores(const GenerationRecord& record);

// Greedy single pass in answer order: answer j joins the first existing
// cluster whose FIRST member is judged equivalent to j, else opens a new
// cluster. Deterministic for a deterministic judge.
Clustering cluster_greedy(PairwiseJudge& judge, std::string record_id = {});

// Spec-shaped convenience: cosine judge requires embeddings.
struct CosineThreshold {
  double tau = 0.85;
};
Clustering cluster(const std::vector<std::string>& answers,
                   const Eigen::MatrixXd* embeddings, const CosineThreshold& judge,
                   std::string record_id = {});
Clustering cluster(const std::vector<std::string>& answers, const NliEndpoint& judge,
                   std::string record_id = {});

// N x N similarity matrix in [0, 1] with zero diagonal, symmetrized as the
// mean of the two ordered queries. Input to kle_entropy.
Eigen::MatrixXd pairwise_similarity(PairwiseJudge& judge);

// Cluster-mass entropy with softmax-normalized sequence probabilities
// (Rao-Blackwellized estimator). Result in [0, ln K].
double semantic_entropy(const Clustering& clustering, std::span<const double> seq_logprobs);

// Empirical-frequency variant; result in [0, ln N].
double discrete_semantic_entropy(const Clustering& clustering);

struct HeatKernel {
  double t = 0.3;
};
struct MaternKernel {
  double nu = 1.0;
  double kappa = 1.0;
};
using GraphKernel = std::variant<HeatKernel, MaternKernel>;

// Von Neumann entropy of the trace-normalized graph kernel built from the
// Laplacian L = D - W of the similarity graph. Self-loops are removed
// (diagonal zeroed); asymmetry beyond 1e-10 or entries outside [0, 1]
// raise errors. Result in [0, ln N].
double kle_entropy(const Eigen::MatrixXd& similarities, const GraphKernel& kernel);

// Clustering file: one line per record, {"id", "assignment"}.
void save_clusterings(const std::vector<Clustering>& cs, const std::filesystem::path& path);
std::vector<Clustering> load_clusterings(const std::filesystem::path& path);

}  // namespace sguq
