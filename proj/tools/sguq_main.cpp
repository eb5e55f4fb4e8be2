// sguq: pipeline driver for semantic-uncertainty scoring of recorded
// generations. Stages communicate only through files so every step is
// restartable and reports are reproducible from inputs + seed.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "CLI11.hpp"
#include "digest.hpp"
#include "json.hpp"
#include "sguq/baselines.hpp"
#include "sguq/embedder.hpp"
#include "sguq/error.hpp"
#include "sguq/gpc.hpp"
#include "sguq/judge.hpp"
#include "sguq/metrics.hpp"
#include "sguq/parallel.hpp"
#include "sguq/records.hpp"
#include "sguq/spectral.hpp"
#include "sguq/synth.hpp"
#include "sguq/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kAllMethods[] = {"sgpu",     "pe",       "se",
                                       "dse",      "kle-heat", "kle-matern",
                                       "cov-eig",  "cos-eig",  "umpire"};

std::string env_or(const char* name, const std::string& fallback = {}) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : fallback;
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<double> parse_double_list(const std::string& csv, const char* flag) {
  std::vector<double> out;
  for (const auto& item : split_list(csv)) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw sguq::ArgumentError(std::string(flag) + ": cannot parse '" + item + "'");
    }
  }
  if (out.empty()) throw sguq::ArgumentError(std::string(flag) + ": empty list");
  return out;
}

// Provenance sidecar written next to every output. No timestamps: meta files
// must be byte-identical across reruns on unchanged inputs.
void write_run_meta(const std::string& command,
                    const std::map<std::string, std::string>& config,
                    const std::vector<fs::path>& inputs, const fs::path& output) {
  json meta;
  meta["command"] = command;
  meta["version"] = sguq::kVersion;
  meta["config"] = config;
  json digests = json::object();
  for (const auto& input : inputs)
    digests[input.string()] = "sha256:" + sguq::tool::Sha256::of_file(input);
  meta["inputs"] = std::move(digests);
  meta["output"] = output.string();

  std::ofstream out(output.string() + ".run.meta", std::ios::binary | std::ios::trunc);
  if (!out) throw sguq::IoError("cannot write run.meta for " + output.string());
  out << meta.dump(2) << '\n';
}

// Records restricted to one side of the deterministic split; absent
// train_frac means "use everything".
std::vector<sguq::GenerationRecord> select_records(
    std::vector<sguq::GenerationRecord> records, std::optional<double> train_frac,
    std::uint64_t seed, bool train_side, std::optional<int> max_count) {
  std::vector<sguq::GenerationRecord> chosen;
  if (train_frac) {
    auto parts = sguq::split(records, *train_frac, seed);
    chosen = train_side ? std::move(parts.train) : std::move(parts.test);
  } else {
    chosen = std::move(records);
  }
  if (max_count && static_cast<std::size_t>(*max_count) < chosen.size())
    chosen.resize(static_cast<std::size_t>(*max_count));
  return chosen;
}

Eigen::VectorXd mean_token_logprobs(const sguq::GenerationRecord& record) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(record.generations.size()));
  for (std::size_t i = 0; i < record.generations.size(); ++i)
    v[static_cast<Eigen::Index>(i)] =
        -sguq::log_perplexity(record.generations[i].token_logprobs);
  return v;
}

struct PredictionRow {
  double p = 0.0;
  double latent_mean = 0.0;
  double latent_variance = 0.0;
  double sigma = 0.0;
  bool unsafe = false;
};

void save_predictions(const std::vector<std::pair<std::string, PredictionRow>>& rows,
                      const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw sguq::IoError("cannot write " + path.string());
  for (const auto& [id, r] : rows) {
    json j;
    j["id"] = id;
    j["p"] = r.p;
    j["latent_mean"] = r.latent_mean;
    j["latent_variance"] = r.latent_variance;
    j["sigma"] = r.sigma;
    j["unsafe"] = r.unsafe;
    out << j.dump() << '\n';
  }
}

std::unordered_map<std::string, PredictionRow> load_predictions(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw sguq::IoError("cannot open " + path.string());
  std::unordered_map<std::string, PredictionRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      PredictionRow r;
      r.p = j.at("p").get<double>();
      r.latent_mean = j.at("latent_mean").get<double>();
      r.latent_variance = j.at("latent_variance").get<double>();
      r.sigma = j.at("sigma").get<double>();
      r.unsafe = j.at("unsafe").get<bool>();
      rows[j.at("id").get<std::string>()] = r;
    } catch (const json::exception& e) {
      throw sguq::ParseError(path.string() + ":" + std::to_string(lineno) + ": " +
                             e.what());
    }
  }
  return rows;
}

void save_scores(
    const std::vector<std::pair<std::string, std::map<std::string, double>>>& rows,
    const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw sguq::IoError("cannot write " + path.string());
  for (const auto& [id, scores] : rows) {
    json j;
    j["id"] = id;
    j["scores"] = scores;
    out << j.dump() << '\n';
  }
}

std::unordered_map<std::string, std::map<std::string, double>> load_scores(
    const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw sguq::IoError("cannot open " + path.string());
  std::unordered_map<std::string, std::map<std::string, double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      rows[j.at("id").get<std::string>()] =
          j.at("scores").get<std::map<std::string, double>>();
    } catch (const json::exception& e) {
      throw sguq::ParseError(path.string() + ":" + std::to_string(lineno) + ": " +
                             e.what());
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// subcommand bodies

struct SynthOptions {
  std::string records_out, embeddings_out;
  int m = 100, n = 20, dim = 32, spread_k = 4;
  double positive_fraction = 0.5, kappa = 0.05;
  std::uint64_t seed = 42;
};

void run_synth(const SynthOptions& opt) {
  sguq::SynthSpec spec;
  spec.record_count = opt.m;
  spec.sample_count = opt.n;
  spec.dim = opt.dim;
  spec.positive_fraction = opt.positive_fraction;
  spec.concentration_pos = opt.kappa;
  spec.spread_neg = opt.spread_k;
  spec.seed = opt.seed;
  const sguq::SynthResult result = sguq::synth_generate(spec);
  sguq::write_records(result.records, opt.records_out);
  sguq::save_cache(result.embeddings, opt.embeddings_out);

  const std::map<std::string, std::string> config = {
      {"m", std::to_string(opt.m)},
      {"n", std::to_string(opt.n)},
      {"dim", std::to_string(opt.dim)},
      {"positive_fraction", std::to_string(opt.positive_fraction)},
      {"kappa", std::to_string(opt.kappa)},
      {"spread_k", std::to_string(opt.spread_k)},
      {"seed", std::to_string(opt.seed)}};
  write_run_meta("synth", config, {}, opt.records_out);
  write_run_meta("synth", config, {}, opt.embeddings_out);
  std::cout << "synth: " << result.records.size() << " records, N="
            << result.manifest.sample_count << ", d=" << spec.dim << '\n';
}

struct LabelOptions {
  std::string records_in, records_out, checkpoint, model;
};

void run_label(const LabelOptions& opt) {
  const std::string url = env_or("SGUQ_JUDGE_URL");
  if (url.empty()) throw sguq::ArgumentError("SGUQ_JUDGE_URL is not set");
  sguq::JudgeEndpoint endpoint;
  endpoint.base_url = url;
  endpoint.model_name = opt.model;
  endpoint.auth_token_env = "SGUQ_JUDGE_TOKEN";

  auto dataset = sguq::load_records(opt.records_in);
  const fs::path checkpoint_path = opt.checkpoint.empty()
                                       ? fs::path(opt.records_in + ".judge.ckpt")
                                       : fs::path(opt.checkpoint);
  auto labeled =
      sguq::label_dataset(std::move(dataset.records), endpoint, checkpoint_path);
  sguq::write_records(labeled, opt.records_out);
  write_run_meta("label", {{"model", opt.model}}, {opt.records_in}, opt.records_out);
  std::cout << "label: " << labeled.size() << " records labeled\n";
}

struct EmbedOptions {
  std::string records_in, embeddings_out, model;
  int max_batch = 16;
};

void run_embed(const EmbedOptions& opt) {
  const std::string url = env_or("SGUQ_ENCODER_URL");
  if (url.empty()) throw sguq::ArgumentError("SGUQ_ENCODER_URL is not set");
  sguq::EncoderEndpoint endpoint;
  endpoint.base_url = url;
  endpoint.model_name = opt.model;
  endpoint.auth_token_env = "SGUQ_ENCODER_TOKEN";
  endpoint.max_batch = opt.max_batch;

  const auto dataset = sguq::load_records(opt.records_in);
  const auto sets = sguq::embed_records(dataset.records, endpoint);
  sguq::save_cache(sets, opt.embeddings_out);
  write_run_meta("embed",
                 {{"model", opt.model}, {"max_batch", std::to_string(opt.max_batch)}},
                 {opt.records_in}, opt.embeddings_out);
  std::cout << "embed: " << sets.size() << " records embedded\n";
}

struct FeaturizeOptions {
  std::string records_in, embeddings_in, spectra_out;
  int parallelism = 1;
};

void run_featurize(const FeaturizeOptions& opt) {
  const auto dataset = sguq::load_records(opt.records_in);
  const auto cache = sguq::load_cache(opt.embeddings_in);
  const sguq::EmbeddingIndex index(cache);

  std::vector<sguq::SpectrumVector> spectra(dataset.records.size());
  sguq::parallel_for(dataset.records.size(), opt.parallelism, [&](std::size_t i) {
    const auto& record = dataset.records[i];
    const auto& set = index.at(record.id);
    if (set.rows() != dataset.manifest.sample_count)
      throw sguq::ValidationError("record " + record.id + ": " +
                                  std::to_string(set.rows()) +
                                  " embedding rows for N=" +
                                  std::to_string(dataset.manifest.sample_count));
    spectra[i] = sguq::eigenspectrum(sguq::gram(set.matrix), record.id);
  });
  sguq::save_spectra(spectra, opt.spectra_out);
  write_run_meta("featurize", {{"parallelism", std::to_string(opt.parallelism)}},
                 {opt.records_in, opt.embeddings_in}, opt.spectra_out);
  std::cout << "featurize: " << spectra.size() << " spectra written\n";
}

struct ClusterOptions {
  std::string records_in, embeddings_in, clusters_out, judge = "cosine";
  double tau = 0.85;
  int parallelism = 1;
};

void run_cluster(const ClusterOptions& opt) {
  const auto dataset = sguq::load_records(opt.records_in);

  std::vector<sguq::Clustering> clusterings(dataset.records.size());
  if (opt.judge == "cosine") {
    if (opt.embeddings_in.empty())
      throw sguq::ArgumentError("cosine judge requires --embeddings");
    const auto cache = sguq::load_cache(opt.embeddings_in);
    const sguq::EmbeddingIndex index(cache);
    sguq::parallel_for(dataset.records.size(), opt.parallelism, [&](std::size_t i) {
      const auto& record = dataset.records[i];
      std::vector<std::string> answers;
      for (const auto& g : record.generations) answers.push_back(g.text);
      clusterings[i] = sguq::cluster(answers, &index.at(record.id).matrix,
                                     sguq::CosineThreshold{opt.tau}, record.id);
    });
  } else if (opt.judge == "nli") {
    const std::string url = env_or("SGUQ_NLI_URL");
    if (url.empty()) throw sguq::ArgumentError("SGUQ_NLI_URL is not set");
    sguq::NliEndpoint endpoint;
    endpoint.base_url = url;
    endpoint.auth_token_env = "SGUQ_NLI_TOKEN";
    sguq::parallel_for(dataset.records.size(), opt.parallelism, [&](std::size_t i) {
      const auto& record = dataset.records[i];
      std::vector<std::string> answers;
      for (const auto& g : record.generations) answers.push_back(g.text);
      clusterings[i] = sguq::cluster(answers, endpoint, record.id);
    });
  } else {
    throw sguq::ArgumentError("--judge must be cosine or nli, got " + opt.judge);
  }

  sguq::save_clusterings(clusterings, opt.clusters_out);
  std::vector<fs::path> inputs = {opt.records_in};
  if (!opt.embeddings_in.empty()) inputs.push_back(opt.embeddings_in);
  write_run_meta("cluster", {{"judge", opt.judge}, {"tau", std::to_string(opt.tau)}},
                 inputs, opt.clusters_out);
  std::cout << "cluster: " << clusterings.size() << " records clustered\n";
}

struct BaselinesOptions {
  std::string records_in, embeddings_in, clusters_in, scores_out, methods;
  double alpha = sguq::kDefaultAlpha, kle_t = 0.3, matern_nu = 1.0, matern_kappa = 1.0;
  int parallelism = 1;
};

void run_baselines(const BaselinesOptions& opt) {
  const std::vector<std::string> requested =
      opt.methods.empty()
          ? std::vector<std::string>{"pe", "se", "dse", "kle-heat", "kle-matern",
                                     "cov-eig", "cos-eig", "umpire"}
          : split_list(opt.methods);
  const std::set<std::string> methods(requested.begin(), requested.end());
  for (const auto& m : methods) {
    if (m == "sgpu")
      throw sguq::ArgumentError("sgpu is produced by train/predict, not baselines");
    if (std::find(std::begin(kAllMethods), std::end(kAllMethods), m) ==
        std::end(kAllMethods))
      throw sguq::ArgumentError("unknown method " + m);
  }

  const auto dataset = sguq::load_records(opt.records_in);
  const auto cache = sguq::load_cache(opt.embeddings_in);
  const sguq::EmbeddingIndex index(cache);

  const bool needs_clusters = methods.count("se") || methods.count("dse");
  std::unordered_map<std::string, const sguq::Clustering*> cluster_index;
  std::vector<sguq::Clustering> clusterings;
  if (needs_clusters) {
    if (opt.clusters_in.empty())
      throw sguq::ArgumentError("methods se/dse require --clusters");
    clusterings = sguq::load_clusterings(opt.clusters_in);
    for (const auto& c : clusterings) cluster_index[c.record_id] = &c;
  }

  std::vector<std::pair<std::string, std::map<std::string, double>>> rows(
      dataset.records.size());
  sguq::parallel_for(dataset.records.size(), opt.parallelism, [&](std::size_t i) {
    const auto& record = dataset.records[i];
    const auto& emb = index.at(record.id);
    auto& [id, scores] = rows[i];
    id = record.id;

    const Eigen::VectorXd seq_logprobs = mean_token_logprobs(record);
    if (methods.count("pe")) {
      std::vector<double> logppl(static_cast<std::size_t>(seq_logprobs.size()));
      for (Eigen::Index k = 0; k < seq_logprobs.size(); ++k)
        logppl[static_cast<std::size_t>(k)] = -seq_logprobs[k];
      scores["pe"] = sguq::predictive_entropy(logppl);
    }
    if (needs_clusters) {
      const auto it = cluster_index.find(record.id);
      if (it == cluster_index.end())
        throw sguq::ValidationError("no clustering for record " + record.id);
      if (methods.count("se"))
        scores["se"] = sguq::semantic_entropy(
            *it->second,
            {seq_logprobs.data(), static_cast<std::size_t>(seq_logprobs.size())});
      if (methods.count("dse"))
        scores["dse"] = sguq::discrete_semantic_entropy(*it->second);
    }
    if (methods.count("kle-heat") || methods.count("kle-matern")) {
      sguq::CosineThresholdJudge judge(emb.matrix, 0.85);
      const Eigen::MatrixXd similarity = sguq::pairwise_similarity(judge);
      if (methods.count("kle-heat"))
        scores["kle-heat"] = sguq::kle_entropy(similarity, sguq::HeatKernel{opt.kle_t});
      if (methods.count("kle-matern"))
        scores["kle-matern"] = sguq::kle_entropy(
            similarity, sguq::MaternKernel{opt.matern_nu, opt.matern_kappa});
    }
    if (methods.count("cov-eig"))
      scores["cov-eig"] = sguq::cov_eigenscore(emb.matrix, opt.alpha, record.id).value;
    if (methods.count("cos-eig") || methods.count("umpire")) {
      const Eigen::MatrixXd g = sguq::gram(emb.matrix);
      if (methods.count("cos-eig"))
        scores["cos-eig"] = sguq::cos_eigenscore(g, opt.alpha, record.id).value;
      if (methods.count("umpire"))
        scores["umpire"] =
            sguq::umpire_variant(g, seq_logprobs, opt.alpha, record.id).value;
    }
  });

  save_scores(rows, opt.scores_out);
  std::vector<fs::path> inputs = {opt.records_in, opt.embeddings_in};
  if (!opt.clusters_in.empty()) inputs.push_back(opt.clusters_in);
  write_run_meta("baselines",
                 {{"alpha", std::to_string(opt.alpha)},
                  {"kle_t", std::to_string(opt.kle_t)},
                  {"methods", opt.methods.empty() ? "all" : opt.methods}},
                 inputs, opt.scores_out);
  std::cout << "baselines: " << rows.size() << " records scored\n";
}

struct TrainOptions {
  std::string records_in, spectra_in, model_out;
  std::optional<double> train_frac;
  std::optional<int> max_train;
  std::uint64_t seed = 42;
  std::string grid_sigma_f, grid_lengthscale;
};

void run_train(const TrainOptions& opt) {
  auto dataset = sguq::load_records(opt.records_in);
  const int n = dataset.manifest.sample_count;
  const auto spectra = sguq::load_spectra(opt.spectra_in);
  std::unordered_map<std::string, const sguq::SpectrumVector*> by_id;
  for (const auto& s : spectra) by_id[s.record_id] = &s;

  const auto chosen = select_records(std::move(dataset.records), opt.train_frac,
                                     opt.seed, /*train_side=*/true, opt.max_train);
  if (chosen.empty()) throw sguq::ValidationError("train: empty training selection");

  Eigen::MatrixXd features(static_cast<Eigen::Index>(chosen.size()), n);
  std::vector<int> labels;
  labels.reserve(chosen.size());
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    const auto& record = chosen[i];
    if (!record.label)
      throw sguq::ValidationError("record " + record.id +
                                  " has no label; run `sguq label`");
    const auto it = by_id.find(record.id);
    if (it == by_id.end())
      throw sguq::ValidationError("no spectrum for record " + record.id);
    if (it->second->size() != n)
      throw sguq::ValidationError("spectrum " + record.id + " has " +
                                  std::to_string(it->second->size()) +
                                  " values, expected N=" + std::to_string(n));
    features.row(static_cast<Eigen::Index>(i)) = it->second->lambda.transpose();
    labels.push_back(*record.label);
  }

  std::vector<sguq::KernelSpec> grid;
  if (opt.grid_sigma_f.empty() && opt.grid_lengthscale.empty()) {
    grid = sguq::default_kernel_grid();
  } else {
    const auto sigmas = opt.grid_sigma_f.empty()
                            ? std::vector<double>{0.25, 0.5, 1.0, 2.0, 4.0}
                            : parse_double_list(opt.grid_sigma_f, "--grid-sigma-f");
    const auto ells =
        opt.grid_lengthscale.empty()
            ? std::vector<double>{0.1, 0.3, 1.0, 3.0, 10.0, 30.0}
            : parse_double_list(opt.grid_lengthscale, "--grid-lengthscale");
    for (double s : sigmas)
      for (double l : ells)
        grid.push_back({sguq::KernelFamily::squared_exponential, s * s, l, 1e-8});
  }

  const sguq::GpcModel model = sguq::fit(features, labels, grid);
  sguq::save_model(model, opt.model_out);

  std::map<std::string, std::string> config = {{"seed", std::to_string(opt.seed)}};
  if (opt.train_frac) config["train_frac"] = std::to_string(*opt.train_frac);
  if (opt.max_train) config["max_train"] = std::to_string(*opt.max_train);
  write_run_meta("train", config, {opt.records_in, opt.spectra_in}, opt.model_out);
  std::cout << "train: M=" << model.train_count()
            << " records, kernel sigma_f2=" << model.kernel.signal_variance
            << " ell=" << model.kernel.lengthscale
            << " log_marginal=" << model.log_marginal << '\n';
}

struct PredictOptions {
  std::string model_in, spectra_in, predictions_out;
  int parallelism = 1;
};

void run_predict(const PredictOptions& opt) {
  const sguq::GpcModel model = sguq::load_model(opt.model_in);
  const auto spectra = sguq::load_spectra(opt.spectra_in);

  std::vector<std::pair<std::string, PredictionRow>> rows(spectra.size());
  sguq::parallel_for(spectra.size(), opt.parallelism, [&](std::size_t i) {
    const auto& s = spectra[i];
    if (s.size() != model.feature_dim())
      throw sguq::ArgumentError(
          "model expects N=" + std::to_string(model.feature_dim()) + " but spectrum " +
          s.record_id + " has N=" + std::to_string(s.size()));
    const sguq::Prediction p = sguq::predict(model, s.lambda);
    rows[i] = {s.record_id,
               {p.probability, p.latent_mean, p.latent_variance, p.probability_std,
                p.unsafe}};
  });
  save_predictions(rows, opt.predictions_out);
  write_run_meta("predict", {{"parallelism", std::to_string(opt.parallelism)}},
                 {opt.model_in, opt.spectra_in}, opt.predictions_out);
  std::cout << "predict: " << rows.size() << " predictions written\n";
}

struct EvaluateOptions {
  std::string records_in, predictions_in, scores_in, report_out, table_out, points_out,
      methods, dataset_name;
  std::optional<double> train_frac;
  std::uint64_t seed = 42;
};

void emit_points(const std::vector<sguq::ScoredRecord>& scored, const std::string& method,
                 std::ofstream& out) {
  std::vector<std::size_t> order(scored.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scored[a].confidence != scored[b].confidence)
      return scored[a].confidence > scored[b].confidence;
    return scored[a].record_id < scored[b].record_id;
  });

  const double n = static_cast<double>(scored.size());
  double positives = 0.0;
  for (const auto& r : scored) positives += r.label == 1 ? 1.0 : 0.0;
  const double negatives = n - positives;

  json arc = json::array();
  json roc = json::array();
  double correct = 0.0, tp = 0.0, fp = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& r = scored[order[k]];
    correct += r.label == 1 ? 1.0 : 0.0;
    tp += r.label == 1 ? 1.0 : 0.0;
    fp += r.label == 1 ? 0.0 : 1.0;
    arc.push_back(
        {(static_cast<double>(k) + 1.0) / n, correct / (static_cast<double>(k) + 1.0)});
    roc.push_back({negatives > 0 ? fp / negatives : 0.0,
                   positives > 0 ? tp / positives : 0.0});
  }
  json j;
  j["method"] = method;
  j["arc"] = std::move(arc);
  j["roc"] = std::move(roc);
  out << j.dump() << '\n';
}

void run_evaluate(const EvaluateOptions& opt) {
  const std::vector<std::string> methods =
      opt.methods.empty()
          ? std::vector<std::string>(std::begin(kAllMethods), std::end(kAllMethods))
          : split_list(opt.methods);
  for (const auto& m : methods)
    if (std::find(std::begin(kAllMethods), std::end(kAllMethods), m) ==
        std::end(kAllMethods))
      throw sguq::ArgumentError("unknown method " + m);

  auto dataset = sguq::load_records(opt.records_in);
  const auto chosen = select_records(std::move(dataset.records), opt.train_frac,
                                     opt.seed, /*train_side=*/false, std::nullopt);
  if (chosen.empty()) throw sguq::ValidationError("evaluate: empty evaluation selection");

  std::unordered_map<std::string, PredictionRow> predictions;
  if (!opt.predictions_in.empty()) predictions = load_predictions(opt.predictions_in);
  std::unordered_map<std::string, std::map<std::string, double>> scores;
  if (!opt.scores_in.empty()) scores = load_scores(opt.scores_in);

  std::optional<std::ofstream> points;
  if (!opt.points_out.empty()) {
    points.emplace(opt.points_out, std::ios::binary | std::ios::trunc);
    if (!*points) throw sguq::IoError("cannot write " + opt.points_out);
  }

  std::vector<sguq::EvalReport> reports;
  for (const auto& method : methods) {
    std::vector<sguq::ScoredRecord> scored;
    scored.reserve(chosen.size());
    if (method == "sgpu") {
      if (opt.predictions_in.empty())
        throw sguq::ArgumentError("method sgpu requires --predictions");
      for (const auto& record : chosen) {
        if (!record.label)
          throw sguq::ValidationError("record " + record.id + " has no label");
        const auto it = predictions.find(record.id);
        if (it == predictions.end())
          throw sguq::ValidationError("no prediction for record " + record.id);
        scored.push_back({record.id, it->second.p, *record.label, it->second.unsafe});
      }
      reports.push_back(sguq::filtered_report(method, scored));
    } else {
      if (opt.scores_in.empty())
        throw sguq::ArgumentError("method " + method + " requires --scores");
      std::vector<double> raw;
      raw.reserve(chosen.size());
      for (const auto& record : chosen) {
        if (!record.label)
          throw sguq::ValidationError("record " + record.id + " has no label");
        const auto it = scores.find(record.id);
        if (it == scores.end() || !it->second.count(method))
          throw sguq::ValidationError("no " + method + " score for record " + record.id);
        raw.push_back(it->second.at(method));
      }
      // Uncertainty scores become confidences via the min-max map.
      const auto confidences =
          sguq::calibration_map(raw, sguq::ScoreDirection::higher_uncertain);
      for (std::size_t i = 0; i < chosen.size(); ++i)
        scored.push_back({chosen[i].id, confidences[i], *chosen[i].label, std::nullopt});
      reports.push_back(sguq::evaluate_method(method, scored));
    }
    if (points) emit_points(scored, method, *points);
  }

  const std::string dataset_name = opt.dataset_name.empty()
                                       ? fs::path(opt.records_in).stem().string()
                                       : opt.dataset_name;
  sguq::write_reports_json(reports, dataset_name, opt.report_out);

  std::vector<fs::path> inputs = {opt.records_in};
  if (!opt.predictions_in.empty()) inputs.push_back(opt.predictions_in);
  if (!opt.scores_in.empty()) inputs.push_back(opt.scores_in);
  std::map<std::string, std::string> config = {{"seed", std::to_string(opt.seed)},
                                               {"dataset", dataset_name}};
  if (opt.train_frac) config["train_frac"] = std::to_string(*opt.train_frac);
  write_run_meta("evaluate", config, inputs, opt.report_out);
  if (!opt.table_out.empty()) {
    sguq::write_report_table(reports, opt.table_out);
    write_run_meta("evaluate", config, inputs, opt.table_out);
  }
  if (points) write_run_meta("evaluate", config, inputs, opt.points_out);

  for (const auto& r : reports) {
    std::cout << "evaluate: " << r.method << " auroc=" << r.auroc
              << " auarc=" << r.auarc << " ece=" << r.ece;
    if (r.auroc_filtered) std::cout << " auroc_filtered=" << *r.auroc_filtered;
    std::cout << " n=" << r.n << '\n';
  }
}

struct ReportOptions {
  std::vector<std::string> inputs;
  std::string table_out;
  bool print = false;
};

void run_report(const ReportOptions& opt) {
  std::vector<sguq::EvalReport> merged;
  for (const auto& input : opt.inputs) {
    auto part = sguq::load_reports_json(input);
    merged.insert(merged.end(), part.begin(), part.end());
  }
  if (!opt.table_out.empty()) {
    sguq::write_report_table(merged, opt.table_out);
    std::vector<fs::path> inputs(opt.inputs.begin(), opt.inputs.end());
    write_run_meta("report", {}, inputs, opt.table_out);
  }
  if (opt.print || opt.table_out.empty()) {
    std::cout << "method,auroc,auarc,ece,auroc_filtered,n\n";
    char buf[64];
    for (const auto& r : merged) {
      std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,", r.method.c_str(), r.auroc,
                    r.auarc, r.ece);
      std::cout << buf;
      if (r.auroc_filtered) {
        std::snprintf(buf, sizeof(buf), "%.6f", *r.auroc_filtered);
        std::cout << buf;
      }
      std::cout << ',' << r.n << '\n';
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semantic-uncertainty scoring for recorded model generations"};
  app.require_subcommand(1);
  app.set_version_flag("--version", sguq::kVersion);

  SynthOptions synth;
  auto* synth_cmd =
      app.add_subcommand("synth", "generate a deterministic synthetic dataset");
  synth_cmd->add_option("--records", synth.records_out, "output records file")->required();
  synth_cmd->add_option("--embeddings", synth.embeddings_out, "output embedding cache")
      ->required();
  synth_cmd->add_option("--m", synth.m, "record count");
  synth_cmd->add_option("--n", synth.n, "generations per record");
  synth_cmd->add_option("--dim", synth.dim, "embedding dimension");
  synth_cmd->add_option("--positive-fraction", synth.positive_fraction,
                        "fraction labeled 1");
  synth_cmd->add_option("--kappa", synth.kappa, "noise scale around meaning directions");
  synth_cmd->add_option("--spread-k", synth.spread_k,
                        "meaning directions per negative record");
  synth_cmd->add_option("--seed", synth.seed, "random seed");
  synth_cmd->callback([&] { run_synth(synth); });

  LabelOptions label;
  auto* label_cmd = app.add_subcommand(
      "label", "judge answers against references (SGUQ_JUDGE_URL)");
  label_cmd->add_option("--records", label.records_in, "input records")
      ->required()
      ->check(CLI::ExistingFile);
  label_cmd->add_option("--out", label.records_out, "output labeled records")->required();
  label_cmd->add_option("--checkpoint", label.checkpoint, "judging checkpoint file");
  label_cmd->add_option("--judge-model", label.model, "judge model name");
  label_cmd->callback([&] { run_label(label); });

  EmbedOptions embed;
  auto* embed_cmd = app.add_subcommand(
      "embed", "embed answers via the encoder service (SGUQ_ENCODER_URL)");
  embed_cmd->add_option("--records", embed.records_in, "input records")
      ->required()
      ->check(CLI::ExistingFile);
  embed_cmd->add_option("--embeddings", embed.embeddings_out, "output embedding cache")
      ->required();
  embed_cmd->add_option("--encoder-model", embed.model, "encoder model name");
  embed_cmd->add_option("--max-batch", embed.max_batch, "max texts per request");
  embed_cmd->callback([&] { run_embed(embed); });

  FeaturizeOptions featurize;
  auto* feat_cmd = app.add_subcommand(
      "featurize", "Gram-matrix eigenspectra from cached embeddings");
  feat_cmd->add_option("--records", featurize.records_in, "input records")
      ->required()
      ->check(CLI::ExistingFile);
  feat_cmd->add_option("--embeddings", featurize.embeddings_in, "embedding cache")
      ->required()
      ->check(CLI::ExistingFile);
  feat_cmd->add_option("--spectra", featurize.spectra_out, "output spectra file")
      ->required();
  feat_cmd->add_option("--parallelism", featurize.parallelism, "worker count");
  feat_cmd->callback([&] { run_featurize(featurize); });

  ClusterOptions cluster;
  auto* cluster_cmd =
      app.add_subcommand("cluster", "greedy semantic clustering of answers");
  cluster_cmd->add_option("--records", cluster.records_in, "input records")
      ->required()
      ->check(CLI::ExistingFile);
  cluster_cmd
      ->add_option("--embeddings", cluster.embeddings_in, "embedding cache (cosine judge)")
      ->check(CLI::ExistingFile);
  cluster_cmd->add_option("--clusters", cluster.clusters_out, "output clustering file")
      ->required();
  cluster_cmd->add_option("--tau", cluster.tau, "cosine equivalence threshold");
  cluster_cmd->add_option("--judge", cluster.judge, "cosine | nli");
  cluster_cmd->add_option("--parallelism", cluster.parallelism, "worker count");
  cluster_cmd->callback([&] { run_cluster(cluster); });

  BaselinesOptions baselines;
  auto* base_cmd =
      app.add_subcommand("baselines", "token- and volume-based uncertainty scores");
  base_cmd->add_option("--records", baselines.records_in, "input records")
      ->required()
      ->check(CLI::ExistingFile);
  base_cmd->add_option("--embeddings", baselines.embeddings_in, "embedding cache")
      ->required()
      ->check(CLI::ExistingFile);
  base_cmd->add_option("--clusters", baselines.clusters_in, "clustering file (se/dse)")
      ->check(CLI::ExistingFile);
  base_cmd->add_option("--scores", baselines.scores_out, "output scores file")->required();
  base_cmd->add_option("--methods", baselines.methods,
                       "comma list (default: all baselines)");
  base_cmd->add_option("--alpha", baselines.alpha, "volume-score regularizer");
  base_cmd->add_option("--kle-t", baselines.kle_t, "heat kernel time");
  base_cmd->add_option("--matern-nu", baselines.matern_nu, "Matern nu");
  base_cmd->add_option("--matern-kappa", baselines.matern_kappa, "Matern kappa");
  base_cmd->add_option("--parallelism", baselines.parallelism, "worker count");
  base_cmd->callback([&] { run_baselines(baselines); });

  TrainOptions train;
  double train_frac_value = -1.0;
  int max_train_value = -1;
  auto* train_cmd = app.add_subcommand("train", "fit the spectrum classifier");
  train_cmd->add_option("--records", train.records_in, "labeled records")
      ->required()
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--spectra", train.spectra_in, "spectra file")
      ->required()
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--model", train.model_out, "output model file")->required();
  train_cmd->add_option("--train-frac", train_frac_value,
                        "train on the split's train side");
  train_cmd->add_option("--max-train", max_train_value, "cap the training subset size");
  train_cmd->add_option("--seed", train.seed, "split seed");
  train_cmd->add_option("--grid-sigma-f", train.grid_sigma_f,
                        "comma list of sigma_f values");
  train_cmd->add_option("--grid-lengthscale", train.grid_lengthscale,
                        "comma list of lengthscales");
  train_cmd->callback([&] {
    if (train_frac_value >= 0.0) train.train_frac = train_frac_value;
    if (max_train_value >= 0) train.max_train = max_train_value;
    run_train(train);
  });

  PredictOptions predict;
  auto* predict_cmd =
      app.add_subcommand("predict", "score spectra with a trained model");
  predict_cmd->add_option("--model", predict.model_in, "model file")
      ->required()
      ->check(CLI::ExistingFile);
  predict_cmd->add_option("--spectra", predict.spectra_in, "spectra file")
      ->required()
      ->check(CLI::ExistingFile);
  predict_cmd->add_option("--predictions", predict.predictions_out,
                          "output predictions")
      ->required();
  predict_cmd->add_option("--parallelism", predict.parallelism, "worker count");
  predict_cmd->callback([&] { run_predict(predict); });

  EvaluateOptions evaluate;
  double eval_frac_value = -1.0;
  auto* eval_cmd = app.add_subcommand("evaluate", "AUROC / AUARC / ECE report");
  eval_cmd->add_option("--records", evaluate.records_in, "labeled records")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--predictions", evaluate.predictions_in,
                       "predictions file (sgpu)")
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--scores", evaluate.scores_in, "baseline scores file")
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--report", evaluate.report_out, "output report JSON")->required();
  eval_cmd->add_option("--table", evaluate.table_out, "output CSV table");
  eval_cmd->add_option("--points", evaluate.points_out, "output curve points file");
  eval_cmd->add_option("--methods", evaluate.methods, "comma list (default: all)");
  eval_cmd->add_option("--dataset", evaluate.dataset_name, "dataset name for the report");
  eval_cmd->add_option("--train-frac", eval_frac_value,
                       "evaluate on the split's test side");
  eval_cmd->add_option("--seed", evaluate.seed, "split seed");
  eval_cmd->callback([&] {
    if (eval_frac_value >= 0.0) evaluate.train_frac = eval_frac_value;
    run_evaluate(evaluate);
  });

  ReportOptions report;
  auto* report_cmd = app.add_subcommand("report", "merge report files into one table");
  report_cmd->add_option("--inputs", report.inputs, "report JSON files")
      ->required()
      ->check(CLI::ExistingFile);
  report_cmd->add_option("--table", report.table_out, "output CSV table");
  report_cmd->add_flag("--print", report.print, "also print the table");
  report_cmd->callback([&] { run_report(report); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage errors exit 2
  } catch (const sguq::Error& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
