#include "sguq/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "sguq/error.hpp"
#include "sguq/rng.hpp"

namespace sguq {

namespace {

Eigen::VectorXd random_unit_direction(Rng& rng, int dim) {
  Eigen::VectorXd v(dim);
  double norm = 0.0;
  do {
    for (int i = 0; i < dim; ++i) v[i] = rng.gaussian();
    norm = v.norm();
  } while (norm == 0.0);
  return v / norm;
}

// Angular spread of the meaning-directions inside one incorrect record,
// drawn per record. Small spreads give near-paraphrase disagreements,
// large ones fully unrelated answers, so record difficulty spans a
// continuum instead of saturating every method at once.
constexpr double kNegativeSpreadLo = 0.05;
constexpr double kNegativeSpreadHi = 0.5;

std::string record_id_for(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "synth-%05d", index);
  return buf;
}

}  // namespace

SynthResult synth_generate(const SynthSpec& spec) {
  if (spec.record_count < 1) throw ArgumentError("synth: record_count must be >= 1");
  if (spec.sample_count < 2) throw ArgumentError("synth: sample_count must be >= 2");
  if (spec.dim < 2) throw ArgumentError("synth: dim must be >= 2");
  if (!(spec.positive_fraction > 0.0 && spec.positive_fraction < 1.0))
    throw ArgumentError("synth: positive_fraction must lie in (0, 1)");
  if (!(spec.concentration_pos > 0.0))
    throw ArgumentError("synth: concentration_pos must be > 0");
  if (spec.spread_neg < 2) throw ArgumentError("synth: spread_neg must be >= 2");

  Rng rng(spec.seed);
  const int positives = static_cast<int>(
      std::llround(spec.positive_fraction * static_cast<double>(spec.record_count)));

  SynthResult result;
  result.manifest.name = "synthetic";
  result.manifest.sample_count = spec.sample_count;
  result.manifest.record_count = spec.record_count;
  result.manifest.generation_config = {
      {"generator", "synthetic"},
      {"seed", std::to_string(spec.seed)},
  };

  for (int r = 0; r < spec.record_count; ++r) {
    const bool positive = r < positives;
    const int directions = positive ? 1 : spec.spread_neg;

    std::vector<Eigen::VectorXd> centers;
    centers.reserve(static_cast<std::size_t>(directions));
    if (positive) {
      centers.push_back(random_unit_direction(rng, spec.dim));
    } else {
      const Eigen::VectorXd base = random_unit_direction(rng, spec.dim);
      const double spread =
          kNegativeSpreadLo + (kNegativeSpreadHi - kNegativeSpreadLo) * rng.uniform();
      for (int c = 0; c < directions; ++c) {
        Eigen::VectorXd direction = base;
        for (int k = 0; k < spec.dim; ++k) direction[k] += spread * rng.gaussian();
        centers.push_back(direction / direction.norm());
      }
    }

    GenerationRecord record;
    record.id = record_id_for(r);
    record.question = "synthetic question " + std::to_string(r);
    record.reference_answer = "meaning-0";
    record.label = positive ? 1 : 0;

    Eigen::MatrixXd rows(spec.sample_count, spec.dim);
    for (int j = 0; j < spec.sample_count; ++j) {
      const std::size_t c =
          directions == 1 ? 0 : rng.index(static_cast<std::size_t>(directions));
      Eigen::VectorXd point = centers[c];
      for (int k = 0; k < spec.dim; ++k)
        point[k] += spec.concentration_pos * rng.gaussian();
      const double norm = point.norm();
      rows.row(j) = (point / norm).transpose();

      Generation g;
      g.text = "sample-" + std::to_string(r) + "-answer-" + std::to_string(j) +
               "-meaning-" + std::to_string(c);
      const int tokens = 3 + static_cast<int>(rng.index(10));
      g.token_logprobs.reserve(static_cast<std::size_t>(tokens));
      for (int t = 0; t < tokens; ++t)
        g.token_logprobs.push_back(std::min(0.0, -0.5 + 0.2 * rng.gaussian()));
      record.generations.push_back(std::move(g));
    }

    EmbeddingSet set;
    set.record_id = record.id;
    set.encoder_id = "synthetic";
    set.matrix = std::move(rows);
    result.records.push_back(std::move(record));
    result.embeddings.push_back(std::move(set));
  }
  return result;
}

}  // namespace sguq
