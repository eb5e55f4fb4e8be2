#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

namespace sguq {

inline constexpr double kDefaultAlpha = 1e-3;

// Sorted eigenvalues of the Gram matrix of one record's embeddings.
// lambda[0] >= ... >= lambda[N-1] >= 0 and sum(lambda) == N for unit rows.
struct SpectrumVector {
  std::string record_id;
  Eigen::VectorXd lambda;

  int size() const { return static_cast<int>(lambda.size()); }
};

enum class VolumeMethod { cov_eigenscore, cos_eigenscore, umpire_variant };

// Log-determinant style spread score; higher = more semantic spread.
struct VolumeScore {
  std::string record_id;
  VolumeMethod method;
  double value;
};

// G = Phi * Phi^T for row-unit-norm Phi. Symmetric, off-diagonals clamped
// to [-1, 1], diagonal exactly 1. Rows further than 1e-9 from unit norm
// raise PreconditionError.
Eigen::MatrixXd gram(const Eigen::MatrixXd& phi);

// Descending eigenvalues of a symmetric PSD matrix. Rounding noise down to
// -1e-8 is clamped to zero; anything lower raises NumericalError, as does
// solver non-convergence. Asymmetry beyond 1e-10 raises NumericalError.
SpectrumVector eigenspectrum(const Eigen::MatrixXd& g, std::string record_id = {});

// sum_i log(eig_i(Sigma_c + alpha I)) where Sigma_c is the Gram matrix of
// coordinate-mean-centered rows (centering over the d axis).
VolumeScore cov_eigenscore(const Eigen::MatrixXd& phi, double alpha = kDefaultAlpha,
                           std::string record_id = {});

// sum_i log(lambda_i(G) + alpha) on the cosine/Gram matrix itself.
VolumeScore cos_eigenscore(const Eigen::MatrixXd& g, double alpha = kDefaultAlpha,
                           std::string record_id = {});

// Probability-weighted variant: W = D^{1/2} G D^{1/2} with
// D = diag(N * softmax(seq_logprobs)); score = sum_i log(lambda_i(W) + alpha).
// seq_logprobs are per-answer mean token log-probabilities. Degrades to
// cos_eigenscore under uniform probabilities.
VolumeScore umpire_variant(const Eigen::MatrixXd& g, const Eigen::VectorXd& seq_logprobs,
                           double alpha = kDefaultAlpha, std::string record_id = {});

// Spectrum file: one line per record, {"id", "lambda"}.
void save_spectra(const std::vector<SpectrumVector>& spectra, const std::filesystem::path& path);
std::vector<SpectrumVector> load_spectra(const std::filesystem::path& path);

}  // namespace sguq
