#include "sguq/embedder.hpp"

#include <cmath>

#include "http_client.hpp"
#include "json_io.hpp"
#include "sguq/error.hpp"

namespace sguq {

namespace {

constexpr int kTransportRetries = 3;

// Norm drift tolerated on cache load before erroring.
constexpr double kCacheDriftTolerance = 1e-6;

std::vector<Eigen::VectorXd> request_batch(const EncoderEndpoint& endpoint,
                                           const std::vector<std::string>& texts,
                                           const std::string& record_id) {
  detail::json req;
  req["model"] = endpoint.model_name;
  req["input"] = texts;
  const std::string body =
      detail::post_json(endpoint.base_url, req.dump(), endpoint.auth_token_env,
                        endpoint.timeout, kTransportRetries,
                        "embedding record " + record_id);
  const detail::json resp =
      detail::parse_object(body, "encoder response for record " + record_id);

  std::vector<Eigen::VectorXd> vectors(texts.size());
  std::vector<bool> filled(texts.size(), false);
  if (!resp.contains("data") || !resp["data"].is_array())
    throw ValidationError("encoder response for record " + record_id +
                          " has no data array");
  for (const auto& item : resp["data"]) {
    const auto index = item.at("index").get<std::size_t>();
    if (index >= texts.size())
      throw ValidationError("encoder response for record " + record_id +
                            ": index " + std::to_string(index) + " out of range");
    const auto values = item.at("embedding").get<std::vector<double>>();
    vectors[index] = Eigen::Map<const Eigen::VectorXd>(values.data(),
                                                       static_cast<Eigen::Index>(values.size()));
    filled[index] = true;
  }
  for (std::size_t i = 0; i < filled.size(); ++i) {
    if (!filled[i])
      throw ValidationError("encoder response for record " + record_id +
                            " missing embedding " + std::to_string(i));
  }
  return vectors;
}

}  // namespace

Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& matrix) {
  Eigen::MatrixXd out(matrix.rows(), matrix.cols());
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    const double norm = matrix.row(i).norm();
    if (norm == 0.0)
      throw ValidationError("cannot normalize zero row " + std::to_string(i));
    out.row(i) = matrix.row(i) / norm;
  }
  return out;
}

std::vector<EmbeddingSet> embed_records(const std::vector<GenerationRecord>& records,
                                        const EncoderEndpoint& endpoint) {
  if (endpoint.max_batch < 1) throw ArgumentError("max_batch must be >= 1");
  if (endpoint.timeout.count() <= 0) throw ArgumentError("timeout must be positive");

  std::vector<EmbeddingSet> sets;
  sets.reserve(records.size());
  int dim = -1;
  for (const auto& record : records) {
    std::vector<Eigen::VectorXd> vectors;
    vectors.reserve(record.generations.size());
    std::vector<std::string> batch;
    for (std::size_t start = 0; start < record.generations.size();
         start += static_cast<std::size_t>(endpoint.max_batch)) {
      batch.clear();
      const std::size_t end = std::min(record.generations.size(),
                                       start + static_cast<std::size_t>(endpoint.max_batch));
      for (std::size_t i = start; i < end; ++i) batch.push_back(record.generations[i].text);
      auto part = request_batch(endpoint, batch, record.id);
      for (auto& v : part) vectors.push_back(std::move(v));
    }

    EmbeddingSet set;
    set.record_id = record.id;
    set.encoder_id = endpoint.model_name;
    for (const auto& v : vectors) {
      if (dim < 0) dim = static_cast<int>(v.size());
      if (static_cast<int>(v.size()) != dim)
        throw ValidationError("record " + record.id + ": embedding dimension " +
                              std::to_string(v.size()) + " does not match " +
                              std::to_string(dim));
    }
    Eigen::MatrixXd raw(static_cast<Eigen::Index>(vectors.size()), dim);
    for (std::size_t i = 0; i < vectors.size(); ++i)
      raw.row(static_cast<Eigen::Index>(i)) = vectors[i].transpose();
    try {
      set.matrix = normalize_rows(raw);
    } catch (const ValidationError& e) {
      throw ValidationError("record " + record.id + ": " + e.what());
    }
    sets.push_back(std::move(set));
  }
  return sets;
}

void save_cache(const std::vector<EmbeddingSet>& sets, const std::filesystem::path& path) {
  auto out = detail::open_output(path);
  for (const auto& set : sets) {
    detail::json j;
    j["id"] = set.record_id;
    j["encoder"] = set.encoder_id;
    j["dim"] = set.dim();
    detail::json rows = detail::json::array();
    for (Eigen::Index i = 0; i < set.matrix.rows(); ++i) {
      detail::json row = detail::json::array();
      for (Eigen::Index k = 0; k < set.matrix.cols(); ++k) row.push_back(set.matrix(i, k));
      rows.push_back(std::move(row));
    }
    j["embeddings"] = std::move(rows);
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<EmbeddingSet> load_cache(const std::filesystem::path& path) {
  std::vector<EmbeddingSet> sets;
  detail::for_each_jsonl(path, [&](std::size_t lineno, const detail::json& j) {
    EmbeddingSet set;
    try {
      set.record_id = j.at("id").get<std::string>();
      set.encoder_id = j.at("encoder").get<std::string>();
      const int dim = j.at("dim").get<int>();
      const auto& rows = j.at("embeddings");
      set.matrix.resize(static_cast<Eigen::Index>(rows.size()), dim);
      Eigen::Index r = 0;
      for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != dim)
          throw ValidationError("cache record " + set.record_id + ": row " +
                                std::to_string(r) + " has " + std::to_string(row.size()) +
                                " values, expected " + std::to_string(dim));
        for (Eigen::Index c = 0; c < dim; ++c)
          set.matrix(r, c) = row[static_cast<std::size_t>(c)].get<double>();
        ++r;
      }
    } catch (const detail::json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }

    for (Eigen::Index i = 0; i < set.matrix.rows(); ++i) {
      const double norm = set.matrix.row(i).norm();
      const double drift = std::abs(norm - 1.0);
      if (drift > kCacheDriftTolerance)
        throw ValidationError("cache record " + set.record_id + ": row " +
                              std::to_string(i) + " norm " + std::to_string(norm) +
                              " beyond re-normalization tolerance");
      if (drift > 1e-12) set.matrix.row(i) /= norm;
    }
    sets.push_back(std::move(set));
  });
  return sets;
}

EmbeddingIndex::EmbeddingIndex(const std::vector<EmbeddingSet>& sets) {
  for (const auto& set : sets) by_id_.emplace(set.record_id, &set);
}

const EmbeddingSet& EmbeddingIndex::at(const std::string& record_id) const {
  const auto it = by_id_.find(record_id);
  if (it == by_id_.end())
    throw ValidationError("no embeddings for record id " + record_id);
  return *it->second;
}

}  // namespace sguq
