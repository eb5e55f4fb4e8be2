#include "sguq/spectral.hpp"

#include <algorithm>
#include <cmath>

#include "json_io.hpp"
#include "sguq/error.hpp"
#include "sguq/sym_eigen.hpp"

namespace sguq {

namespace {

constexpr double kRowNormTolerance = 1e-9;
constexpr double kSymmetryTolerance = 1e-10;
constexpr double kNegativeEigTolerance = 1e-8;

void require_alpha(double alpha) {
  if (!(alpha > 0.0))
    throw PreconditionError("alpha must be > 0, got " + std::to_string(alpha));
}

void require_symmetric(const Eigen::MatrixXd& g, const char* op) {
  if (g.rows() != g.cols())
    throw PreconditionError(std::string(op) + ": matrix is not square");
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index j = i + 1; j < g.cols(); ++j)
      if (std::abs(g(i, j) - g(j, i)) > kSymmetryTolerance)
        throw NumericalError(std::string(op) + ": asymmetry " +
                             std::to_string(std::abs(g(i, j) - g(j, i))) + " at (" +
                             std::to_string(i) + "," + std::to_string(j) + ")");
}

double log_det_shifted(const Eigen::MatrixXd& sym, double alpha) {
  const Eigen::VectorXd eig = sym_eigenvalues(sym);
  double value = 0.0;
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    // Clamp rounding noise; alpha keeps the log finite on rank-deficient input.
    value += std::log(std::max(eig[i], 0.0) + alpha);
  }
  return value;
}

}  // namespace

Eigen::MatrixXd gram(const Eigen::MatrixXd& phi) {
  for (Eigen::Index i = 0; i < phi.rows(); ++i) {
    const double norm = phi.row(i).norm();
    if (std::abs(norm - 1.0) > kRowNormTolerance)
      throw PreconditionError("gram: row " + std::to_string(i) + " has norm " +
                              std::to_string(norm) + ", expected unit");
  }
  const Eigen::Index n = phi.rows();
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    g(i, i) = 1.0;  // exact for unit rows
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dot = std::clamp(phi.row(i).dot(phi.row(j)), -1.0, 1.0);
      g(i, j) = dot;
      g(j, i) = dot;
    }
  }
  return g;
}

SpectrumVector eigenspectrum(const Eigen::MatrixXd& g, std::string record_id) {
  require_symmetric(g, "eigenspectrum");
  Eigen::VectorXd values = sym_eigenvalues(g);  // already descending
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values[i] < -kNegativeEigTolerance)
      throw NumericalError("eigenspectrum: eigenvalue " + std::to_string(values[i]) +
                           " below PSD tolerance" +
                           (record_id.empty() ? "" : " for record " + record_id));
    if (values[i] < 0.0) values[i] = 0.0;
  }
  return {std::move(record_id), std::move(values)};
}

VolumeScore cov_eigenscore(const Eigen::MatrixXd& phi, double alpha,
                           std::string record_id) {
  require_alpha(alpha);
  // Center every row over its d coordinates (J = I_d - 1 1^T / d), then take
  // the Gram matrix of the centered rows.
  Eigen::MatrixXd centered = phi;
  for (Eigen::Index i = 0; i < centered.rows(); ++i)
    centered.row(i).array() -= centered.row(i).mean();
  const Eigen::MatrixXd cov = centered * centered.transpose();
  return {std::move(record_id), VolumeMethod::cov_eigenscore, log_det_shifted(cov, alpha)};
}

VolumeScore cos_eigenscore(const Eigen::MatrixXd& g, double alpha, std::string record_id) {
  require_alpha(alpha);
  require_symmetric(g, "cos_eigenscore");
  return {std::move(record_id), VolumeMethod::cos_eigenscore, log_det_shifted(g, alpha)};
}

VolumeScore umpire_variant(const Eigen::MatrixXd& g, const Eigen::VectorXd& seq_logprobs,
                           double alpha, std::string record_id) {
  require_alpha(alpha);
  require_symmetric(g, "umpire_variant");
  if (seq_logprobs.size() != g.rows())
    throw ArgumentError("umpire_variant: " + std::to_string(seq_logprobs.size()) +
                        " logprobs for " + std::to_string(g.rows()) + " answers");
  const double peak = seq_logprobs.maxCoeff();
  if (!std::isfinite(peak))
    throw ArgumentError("umpire_variant: no finite sequence log-probability");

  Eigen::VectorXd weights = (seq_logprobs.array() - peak).exp();
  weights /= weights.sum();  // softmax, stable in log-space
  const auto n = static_cast<double>(g.rows());
  const Eigen::VectorXd half = (n * weights.array()).sqrt();
  const Eigen::MatrixXd weighted = half.asDiagonal() * g * half.asDiagonal();
  return {std::move(record_id), VolumeMethod::umpire_variant,
          log_det_shifted(weighted, alpha)};
}

void save_spectra(const std::vector<SpectrumVector>& spectra,
                  const std::filesystem::path& path) {
  auto out = detail::open_output(path);
  for (const auto& s : spectra) {
    detail::json j;
    j["id"] = s.record_id;
    detail::json lambda = detail::json::array();
    for (Eigen::Index i = 0; i < s.lambda.size(); ++i) lambda.push_back(s.lambda[i]);
    j["lambda"] = std::move(lambda);
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<SpectrumVector> load_spectra(const std::filesystem::path& path) {
  std::vector<SpectrumVector> spectra;
  detail::for_each_jsonl(path, [&](std::size_t lineno, const detail::json& j) {
    SpectrumVector s;
    try {
      s.record_id = j.at("id").get<std::string>();
      const auto values = j.at("lambda").get<std::vector<double>>();
      s.lambda = Eigen::Map<const Eigen::VectorXd>(values.data(),
                                                   static_cast<Eigen::Index>(values.size()));
    } catch (const detail::json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    for (Eigen::Index i = 1; i < s.lambda.size(); ++i)
      if (s.lambda[i] > s.lambda[i - 1] + 1e-12)
        throw ValidationError("spectrum " + s.record_id + " is not sorted descending");
    spectra.push_back(std::move(s));
  });
  return spectra;
}

}  // namespace sguq
