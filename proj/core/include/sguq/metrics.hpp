#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sguq {

// One evaluated record: higher confidence = more confident the generations
// are correct; label 1 = correct.
struct ScoredRecord {
  std::string record_id;
  double confidence = 0.0;
  int label = 0;
  std::optional<bool> unsafe;
};

// Rank-based (Mann-Whitney) AUROC with average ranks for ties; equals the
// fraction of (positive, negative) pairs ordered correctly, ties as 1/2.
// Requires both classes.
double auroc(std::span<const ScoredRecord> scored);

// Mean accuracy over the n prefixes of the confidence-descending order
// (ties broken by record_id ascending).
double auarc(std::span<const ScoredRecord> scored);

struct ReliabilityBin {
  double mean_confidence = 0.0;
  double accuracy = 0.0;
  std::size_t count = 0;
};

struct EceResult {
  double value = 0.0;
  std::vector<ReliabilityBin> bins;
};

// Expected calibration error over equal-width right-inclusive bins on
// [0, 1]. Confidences outside [0, 1] raise ArgumentError pointing the
// caller at calibration_map.
EceResult ece(std::span<const ScoredRecord> scored, int bins = 10);

enum class ScoreDirection { higher_confident, higher_uncertain };

// Orients raw scores (negating higher_uncertain ones) and min-max
// normalizes into [0, 1]; constant inputs map to 0.5 everywhere.
std::vector<double> calibration_map(std::span<const double> raw_scores,
                                    ScoreDirection direction);

struct EvalReport {
  std::string method;
  double auroc = 0.0;
  double auarc = 0.0;
  double ece = 0.0;
  std::size_t n = 0;
  std::optional<double> auroc_filtered;  // unsafe records removed
  bool filtered_degenerate = false;      // filtered subset lost a class
  std::vector<ReliabilityBin> reliability_bins;
};

// All three metrics for one method.
EvalReport evaluate_method(std::string method, std::span<const ScoredRecord> scored,
                           int bins = 10);

// evaluate_method plus auroc_filtered over the non-unsafe subset. Every
// record must carry the unsafe flag. A single-class filtered subset omits
// auroc_filtered and sets the degenerate marker instead.
EvalReport filtered_report(std::string method, std::span<const ScoredRecord> scored,
                           int bins = 10);

// Report file: one JSON object per (dataset, method).
void write_reports_json(std::span<const EvalReport> reports, const std::string& dataset,
                        const std::filesystem::path& path);
std::vector<EvalReport> load_reports_json(const std::filesystem::path& path);

// Flat CSV, header "method,auroc,auarc,ece,auroc_filtered,n", fixed
// formatting for diffing against goldens.
void write_report_table(std::span<const EvalReport> reports,
                        const std::filesystem::path& path);

}  // namespace sguq
