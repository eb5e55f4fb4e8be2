#include "sguq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "json_io.hpp"
#include "sguq/error.hpp"

namespace sguq {

namespace {

void require_finite(std::span<const ScoredRecord> scored) {
  for (const auto& r : scored)
    if (!std::isfinite(r.confidence))
      throw ValidationError("record " + r.record_id + ": non-finite confidence");
}

std::pair<std::size_t, std::size_t> class_counts(std::span<const ScoredRecord> scored) {
  std::size_t pos = 0;
  std::size_t neg = 0;
  for (const auto& r : scored) (r.label == 1 ? pos : neg) += 1;
  return {pos, neg};
}

}  // namespace

double auroc(std::span<const ScoredRecord> scored) {
  require_finite(scored);
  const auto [pos, neg] = class_counts(scored);
  if (pos == 0 || neg == 0) throw ValidationError("AUROC undefined: single-class input");

  const std::size_t n = scored.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scored[a].confidence < scored[b].confidence;
  });

  // Mann-Whitney with average ranks over tie groups.
  double positive_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n &&
           scored[order[j + 1]].confidence == scored[order[i]].confidence)
      ++j;
    const double rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t k = i; k <= j; ++k)
      if (scored[order[k]].label == 1) positive_rank_sum += rank;
    i = j + 1;
  }
  const double p = static_cast<double>(pos);
  const double u = positive_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(neg));
}

double auarc(std::span<const ScoredRecord> scored) {
  require_finite(scored);
  if (scored.empty()) throw ArgumentError("AUARC of an empty set");

  const std::size_t n = scored.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scored[a].confidence != scored[b].confidence)
      return scored[a].confidence > scored[b].confidence;
    return scored[a].record_id < scored[b].record_id;  // deterministic ties
  });

  double correct = 0.0;
  double accuracy_sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (scored[order[k]].label == 1) correct += 1.0;
    accuracy_sum += correct / static_cast<double>(k + 1);
  }
  return accuracy_sum / static_cast<double>(n);
}

EceResult ece(std::span<const ScoredRecord> scored, int bins) {
  require_finite(scored);
  if (bins < 1) throw ArgumentError("ece needs at least one bin");
  for (const auto& r : scored) {
    if (r.confidence < 0.0 || r.confidence > 1.0)
      throw ArgumentError("record " + r.record_id + ": confidence " +
                          std::to_string(r.confidence) +
                          " outside [0, 1]; apply calibration_map first");
  }

  struct Accumulator {
    double conf_sum = 0.0;
    double correct = 0.0;
    std::size_t count = 0;
  };
  std::vector<Accumulator> acc(static_cast<std::size_t>(bins));
  for (const auto& r : scored) {
    // Right-inclusive equal-width bins; 0 lands in the first bin.
    int b = static_cast<int>(std::ceil(r.confidence * bins)) - 1;
    b = std::clamp(b, 0, bins - 1);
    auto& slot = acc[static_cast<std::size_t>(b)];
    slot.conf_sum += r.confidence;
    slot.correct += r.label == 1 ? 1.0 : 0.0;
    slot.count += 1;
  }

  EceResult result;
  result.bins.resize(static_cast<std::size_t>(bins));
  const double n = static_cast<double>(scored.size());
  for (std::size_t b = 0; b < acc.size(); ++b) {
    if (acc[b].count == 0) continue;
    const double count = static_cast<double>(acc[b].count);
    const double mean_conf = acc[b].conf_sum / count;
    const double accuracy = acc[b].correct / count;
    result.bins[b] = {mean_conf, accuracy, acc[b].count};
    result.value += (count / n) * std::abs(accuracy - mean_conf);
  }
  return result;
}

std::vector<double> calibration_map(std::span<const double> raw_scores,
                                    ScoreDirection direction) {
  for (double v : raw_scores)
    if (!std::isfinite(v)) throw ValidationError("calibration_map: non-finite score");

  std::vector<double> oriented(raw_scores.begin(), raw_scores.end());
  if (direction == ScoreDirection::higher_uncertain)
    for (double& v : oriented) v = -v;

  const auto [lo_it, hi_it] = std::minmax_element(oriented.begin(), oriented.end());
  if (oriented.empty() || *lo_it == *hi_it)
    return std::vector<double>(raw_scores.size(), 0.5);

  const double lo = *lo_it;
  const double range = *hi_it - lo;
  for (double& v : oriented) v = (v - lo) / range;
  return oriented;
}

EvalReport evaluate_method(std::string method, std::span<const ScoredRecord> scored,
                           int bins) {
  EvalReport report;
  report.method = std::move(method);
  report.n = scored.size();
  report.auroc = sguq::auroc(scored);
  report.auarc = sguq::auarc(scored);
  const EceResult calibration = sguq::ece(scored, bins);
  report.ece = calibration.value;
  report.reliability_bins = calibration.bins;
  return report;
}

EvalReport filtered_report(std::string method, std::span<const ScoredRecord> scored,
                           int bins) {
  for (const auto& r : scored)
    if (!r.unsafe.has_value())
      throw PreconditionError("record " + r.record_id + " has no unsafe flag");

  EvalReport report = evaluate_method(std::move(method), scored, bins);
  std::vector<ScoredRecord> kept;
  for (const auto& r : scored)
    if (!*r.unsafe) kept.push_back(r);

  const auto [pos, neg] = class_counts(kept);
  if (kept.empty() || pos == 0 || neg == 0) {
    report.filtered_degenerate = true;
  } else {
    report.auroc_filtered = sguq::auroc(kept);
  }
  return report;
}

void write_reports_json(std::span<const EvalReport> reports, const std::string& dataset,
                        const std::filesystem::path& path) {
  detail::json all = detail::json::array();
  for (const auto& r : reports) {
    detail::json j;
    j["dataset"] = dataset;
    j["method"] = r.method;
    j["auroc"] = r.auroc;
    j["auarc"] = r.auarc;
    j["ece"] = r.ece;
    j["n"] = r.n;
    if (r.auroc_filtered) j["auroc_filtered"] = *r.auroc_filtered;
    if (r.filtered_degenerate) j["auroc_filtered_degenerate"] = true;
    detail::json bins = detail::json::array();
    for (const auto& b : r.reliability_bins) {
      bins.push_back({{"mean_confidence", b.mean_confidence},
                      {"accuracy", b.accuracy},
                      {"count", b.count}});
    }
    j["reliability_bins"] = std::move(bins);
    all.push_back(std::move(j));
  }
  auto out = detail::open_output(path);
  out << all.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<EvalReport> load_reports_json(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  const std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  const detail::json all = detail::parse_object(text, "report file " + path.string());
  std::vector<EvalReport> reports;
  try {
    for (const auto& j : all) {
      EvalReport r;
      r.method = j.at("method").get<std::string>();
      r.auroc = j.at("auroc").get<double>();
      r.auarc = j.at("auarc").get<double>();
      r.ece = j.at("ece").get<double>();
      r.n = j.at("n").get<std::size_t>();
      if (j.contains("auroc_filtered"))
        r.auroc_filtered = j.at("auroc_filtered").get<double>();
      if (j.contains("auroc_filtered_degenerate")) r.filtered_degenerate = true;
      for (const auto& bj : j.at("reliability_bins")) {
        r.reliability_bins.push_back({bj.at("mean_confidence").get<double>(),
                                      bj.at("accuracy").get<double>(),
                                      bj.at("count").get<std::size_t>()});
      }
      reports.push_back(std::move(r));
    }
  } catch (const detail::json::exception& e) {
    throw ParseError("report file " + path.string() + ": " + e.what());
  }
  return reports;
}

void write_report_table(std::span<const EvalReport> reports,
                        const std::filesystem::path& path) {
  auto out = detail::open_output(path);
  out << "method,auroc,auarc,ece,auroc_filtered,n\n";
  char buf[64];
  for (const auto& r : reports) {
    out << r.method << ',';
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,", r.auroc, r.auarc, r.ece);
    out << buf;
    if (r.auroc_filtered) {
      std::snprintf(buf, sizeof(buf), "%.6f", *r.auroc_filtered);
      out << buf;
    }
    out << ',' << r.n << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace sguq
