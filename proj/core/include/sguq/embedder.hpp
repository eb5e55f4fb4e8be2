#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "sguq/records.hpp"

namespace sguq {

// Row-unit-norm embedding matrix for one record, rows in generation order.
struct EmbeddingSet {
  std::string record_id;
  Eigen::MatrixXd matrix;  // N x d, each row unit norm within 1e-9
  std::string encoder_id;

  int rows() const { return static_cast<int>(matrix.rows()); }
  int dim() const { return static_cast<int>(matrix.cols()); }
};

struct EncoderEndpoint {
  std::string base_url;  // full endpoint URL, e.g. http://host:port/embeddings
  std::string model_name;
  std::string auth_token_env;  // name of the env var holding the bearer token
  std::chrono::milliseconds timeout{10000};
  int max_batch = 16;
};

// Each output row = input row / its Euclidean norm.
// A zero row raises ValidationError naming the row index.
Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& matrix);

// Sends answer texts in batches of <= max_batch, L2-normalizes the returned
// vectors, preserves record and generation order. Transport failures are
// retried with exponential backoff before raising IoError naming the record.
std::vector<EmbeddingSet> embed_records(const std::vector<GenerationRecord>& records,
                                        const EncoderEndpoint& endpoint);

// Cache file: one line per record, {"id", "encoder", "dim", "embeddings"}.
void save_cache(const std::vector<EmbeddingSet>& sets, const std::filesystem::path& path);

// Load re-checks row norms: drift up to 1e-6 is silently re-normalized,
// anything beyond raises ValidationError.
std::vector<EmbeddingSet> load_cache(const std::filesystem::path& path);

// Join helper: id -> set. Lookup of a missing id raises ValidationError.
class EmbeddingIndex {
 public:
  explicit EmbeddingIndex(const std::vector<EmbeddingSet>& sets);
  const EmbeddingSet& at(const std::string& record_id) const;

 private:
  std::unordered_map<std::string, const EmbeddingSet*> by_id_;
};

}  // namespace sguq
