#include "sguq/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "http_client.hpp"
#include "json_io.hpp"
#include "sguq/error.hpp"
#include "sguq/sym_eigen.hpp"

namespace sguq {

namespace {

constexpr double kSymmetryTolerance = 1e-10;

Eigen::VectorXd stable_softmax(std::span<const double> logits) {
  double peak = -std::numeric_limits<double>::infinity();
  for (double v : logits) peak = std::max(peak, v);
  if (!std::isfinite(peak))
    throw ArgumentError("softmax: no finite input");
  Eigen::VectorXd out(static_cast<Eigen::Index>(logits.size()));
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = std::exp(logits[i] - peak);
    sum += out[static_cast<Eigen::Index>(i)];
  }
  return out / sum;
}

double entropy_of(const Eigen::VectorXd& p) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) h -= p[i] * std::log(p[i]);
  // masses summing to 1 + eps can leave a negative residue
  return std::max(0.0, h);
}

}  // namespace

CosineThresholdJudge::CosineThresholdJudge(const Eigen::MatrixXd& unit_rows, double tau)
    : rows_(unit_rows), tau_(tau) {
  if (!(tau > 0.0 && tau < 1.0))
    throw ArgumentError("cosine threshold tau must lie in (0, 1)");
}

PairVerdict CosineThresholdJudge::compare(int i, int j) {
  const double cosine = rows_.row(i).dot(rows_.row(j));
  const double similarity = std::clamp(cosine, 0.0, 1.0);
  return {similarity, similarity >= tau_};
}

NliJudge::NliJudge(NliEndpoint endpoint, std::vector<std::string> answers)
    : endpoint_(std::move(endpoint)), answers_(std::move(answers)) {}

double NliJudge::entailment(int premise, int hypothesis) {
  detail::json req;
  req["premise"] = answers_[static_cast<std::size_t>(premise)];
  req["hypothesis"] = answers_[static_cast<std::size_t>(hypothesis)];
  const std::string body =
      detail::post_json(endpoint_.base_url, req.dump(), endpoint_.auth_token_env,
                        endpoint_.timeout, endpoint_.max_retries, "nli judge");
  const detail::json resp = detail::parse_object(body, "nli response");
  if (!resp.contains("entailment_prob"))
    throw ValidationError("nli response missing entailment_prob");
  const double p = resp["entailment_prob"].get<double>();
  if (!(p >= 0.0 && p <= 1.0))
    throw ValidationError("entailment_prob " + std::to_string(p) + " outside [0, 1]");
  return p;
}

PairVerdict NliJudge::compare(int i, int j) {
  const double forward = entailment(i, j);
  const double backward = entailment(j, i);
  // Bidirectional entailment: both directions must pass.
  return {0.5 * (forward + backward), forward >= 0.5 && backward >= 0.5};
}

double log_perplexity(std::span<const double> token_logprobs) {
  if (token_logprobs.empty())
    throw ArgumentError("log_perplexity of an empty token sequence");
  double sum = 0.0;
  for (double lp : token_logprobs) {
    if (!std::isfinite(lp) || lp > 0.0)
      throw PreconditionError("token logprob " + std::to_string(lp) +
                              " must be finite and <= 0");
    sum += lp;
  }
  return -sum / static_cast<double>(token_logprobs.size());
}

double predictive_entropy(std::span<const double> per_answer_logppl) {
  if (per_answer_logppl.empty())
    throw ArgumentError("predictive_entropy of an empty set");
  double sum = 0.0;
  for (double v : per_answer_logppl) sum += v;
  return sum / static_cast<double>(per_answer_logppl.size());
}

SequenceScore sequence_scores(const GenerationRecord& record) {
  SequenceScore score;
  score.record_id = record.id;
  score.per_answer_logppl.reserve(record.generations.size());
  for (const auto& g : record.generations)
    score.per_answer_logppl.push_back(log_perplexity(g.token_logprobs));
  score.predictive_entropy = predictive_entropy(score.per_answer_logppl);
  return score;
}

Clustering cluster_greedy(PairwiseJudge& judge, std::string record_id) {
  const int n = judge.size();
  Clustering c;
  c.record_id = std::move(record_id);
  c.assignment.resize(static_cast<std::size_t>(n), -1);
  std::vector<int> first_member;  // answer index anchoring each cluster
  for (int j = 0; j < n; ++j) {
    int assigned = -1;
    for (std::size_t k = 0; k < first_member.size(); ++k) {
      if (judge.compare(first_member[k], j).equivalent) {
        assigned = static_cast<int>(k);
        break;
      }
    }
    if (assigned < 0) {
      assigned = static_cast<int>(first_member.size());
      first_member.push_back(j);
    }
    c.assignment[static_cast<std::size_t>(j)] = assigned;
  }
  c.cluster_count = static_cast<int>(first_member.size());
  return c;
}

Clustering cluster(const std::vector<std::string>& answers,
                   const Eigen::MatrixXd* embeddings, const CosineThreshold& judge,
                   std::string record_id) {
  if (embeddings == nullptr)
    throw ArgumentError("cosine_threshold judge requires embeddings");
  if (static_cast<std::size_t>(embeddings->rows()) != answers.size())
    throw ArgumentError("cluster: " + std::to_string(answers.size()) + " answers but " +
                        std::to_string(embeddings->rows()) + " embedding rows");
  CosineThresholdJudge impl(*embeddings, judge.tau);
  return cluster_greedy(impl, std::move(record_id));
}

Clustering cluster(const std::vector<std::string>& answers, const NliEndpoint& judge,
                   std::string record_id) {
  NliJudge impl(judge, answers);
  return cluster_greedy(impl, std::move(record_id));
}

Eigen::MatrixXd pairwise_similarity(PairwiseJudge& judge) {
  const int n = judge.size();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double s =
          0.5 * (judge.compare(i, j).similarity + judge.compare(j, i).similarity);
      w(i, j) = s;
      w(j, i) = s;
    }
  }
  return w;
}

double semantic_entropy(const Clustering& clustering,
                        std::span<const double> seq_logprobs) {
  if (seq_logprobs.size() != clustering.assignment.size())
    throw ArgumentError("semantic_entropy: " + std::to_string(seq_logprobs.size()) +
                        " logprobs for " + std::to_string(clustering.assignment.size()) +
                        " assignments");
  const Eigen::VectorXd p = stable_softmax(seq_logprobs);
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(clustering.cluster_count);
  for (std::size_t i = 0; i < clustering.assignment.size(); ++i)
    mass[clustering.assignment[i]] += p[static_cast<Eigen::Index>(i)];
  return entropy_of(mass);
}

double discrete_semantic_entropy(const Clustering& clustering) {
  const auto n = static_cast<double>(clustering.assignment.size());
  if (n == 0) throw ArgumentError("discrete_semantic_entropy of an empty clustering");
  std::vector<int> counts(static_cast<std::size_t>(clustering.cluster_count), 0);
  for (int a : clustering.assignment) counts[static_cast<std::size_t>(a)] += 1;
  Eigen::VectorXd mass(clustering.cluster_count);
  for (std::size_t k = 0; k < counts.size(); ++k)
    mass[static_cast<Eigen::Index>(k)] = static_cast<double>(counts[k]) / n;
  return entropy_of(mass);
}

double kle_entropy(const Eigen::MatrixXd& similarities, const GraphKernel& kernel) {
  const Eigen::Index n = similarities.rows();
  if (n != similarities.cols())
    throw ArgumentError("kle_entropy: similarity matrix is not square");
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (std::abs(similarities(i, j) - similarities(j, i)) > kSymmetryTolerance)
        throw ValidationError("kle_entropy: similarities not symmetric at (" +
                              std::to_string(i) + "," + std::to_string(j) + ")");
      if (similarities(i, j) < -1e-12 || similarities(i, j) > 1.0 + 1e-12)
        throw ValidationError("kle_entropy: similarity " +
                              std::to_string(similarities(i, j)) + " outside [0, 1]");
    }
  }

  // Self-loops removed; Laplacian of the remaining weighted graph.
  Eigen::MatrixXd w = 0.5 * (similarities + similarities.transpose());
  w.diagonal().setZero();
  Eigen::MatrixXd laplacian = -w;
  laplacian.diagonal() = w.rowwise().sum();

  const Eigen::VectorXd mu = sym_eigenvalues(laplacian);
  Eigen::VectorXd k(n);
  if (std::holds_alternative<HeatKernel>(kernel)) {
    const double t = std::get<HeatKernel>(kernel).t;
    for (Eigen::Index i = 0; i < n; ++i) k[i] = std::exp(-t * std::max(mu[i], 0.0));
  } else {
    const auto& m = std::get<MaternKernel>(kernel);
    if (!(m.nu > 0.0) || !(m.kappa > 0.0))
      throw ArgumentError("matern kernel needs nu > 0 and kappa > 0");
    const double shift = 2.0 * m.nu / (m.kappa * m.kappa);
    for (Eigen::Index i = 0; i < n; ++i)
      k[i] = std::pow(shift + std::max(mu[i], 0.0), -m.nu);
  }
  // Von Neumann entropy of the trace-normalized kernel, straight from the
  // transformed eigenvalues.
  return entropy_of(k / k.sum());
}

void save_clusterings(const std::vector<Clustering>& cs, const std::filesystem::path& path) {
  auto out = detail::open_output(path);
  for (const auto& c : cs) {
    detail::json j;
    j["id"] = c.record_id;
    j["assignment"] = c.assignment;
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<Clustering> load_clusterings(const std::filesystem::path& path) {
  std::vector<Clustering> cs;
  detail::for_each_jsonl(path, [&](std::size_t lineno, const detail::json& j) {
    Clustering c;
    try {
      c.record_id = j.at("id").get<std::string>();
      c.assignment = j.at("assignment").get<std::vector<int>>();
    } catch (const detail::json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    int max_index = -1;
    for (int a : c.assignment) {
      if (a < 0)
        throw ValidationError("clustering " + c.record_id + ": negative index");
      max_index = std::max(max_index, a);
    }
    c.cluster_count = max_index + 1;
    std::vector<bool> used(static_cast<std::size_t>(c.cluster_count), false);
    for (int a : c.assignment) used[static_cast<std::size_t>(a)] = true;
    if (std::find(used.begin(), used.end(), false) != used.end())
      throw ValidationError("clustering " + c.record_id + ": unused cluster index");
    cs.push_back(std::move(c));
  });
  return cs;
}

}  // namespace sguq
