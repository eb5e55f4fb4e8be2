#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

namespace sguq {

enum class KernelFamily { squared_exponential };

struct KernelSpec {
  KernelFamily family = KernelFamily::squared_exponential;
  double signal_variance = 1.0;  // sigma_f^2 > 0
  double lengthscale = 1.0;      // ell > 0
  double jitter = 1e-8;          // added to the diagonal of self-covariances
};

// K_ij = sigma_f^2 * exp(-||a_i - b_j||^2 / (2 ell^2)). When a and b are the
// same object, jitter is added to the diagonal and the result is symmetric
// positive definite.
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                              const KernelSpec& spec);

// Exhaustive selection grid: sigma_f in {0.25, 0.5, 1, 2, 4} crossed with
// lengthscale in {0.1, 0.3, 1, 3, 10, 30}, in that order.
std::vector<KernelSpec> default_kernel_grid();

// Trained classifier state. Labels live in {-1, +1} internally; the public
// fit() surface takes {0, 1}. `cholesky` is the lower factor of
// B = I + W^{1/2} K W^{1/2}, the numerically stable core of the Laplace
// approximation (B is well conditioned regardless of K's conditioning).
struct GpcModel {
  KernelSpec kernel;
  Eigen::MatrixXd features;       // M x N spectrum vectors
  Eigen::VectorXd labels;         // M entries, -1 or +1
  Eigen::VectorXd mode;           // posterior mode f_hat
  Eigen::VectorXd mode_gradient;  // grad log p(l | f) at f_hat
  Eigen::VectorXd curvature;      // W, entries in [0, 0.25] for logistic
  Eigen::MatrixXd cholesky;       // lower-triangular factor of B
  double log_marginal = 0.0;      // Laplace evidence of the selected kernel

  int train_count() const { return static_cast<int>(features.rows()); }
  int feature_dim() const { return static_cast<int>(features.cols()); }
};

// Laplace fit with logistic likelihood: for every grid candidate, finds the
// posterior mode by damped Newton iteration (objective change < 1e-10,
// stationarity residual < 1e-8, at most 100 iterations), then keeps the
// candidate with the highest Laplace log marginal likelihood (ties go to the
// earlier grid entry). Both classes must be present.
GpcModel fit(const Eigen::MatrixXd& features, const std::vector<int>& labels01,
             const std::vector<KernelSpec>& grid = default_kernel_grid());

struct Prediction {
  double probability = 0.0;      // p(l = 1 | lambda, D)
  double latent_mean = 0.0;
  double latent_variance = 0.0;
  double probability_std = 0.0;  // std of s(f) under the latent Gaussian, <= 0.5
  bool unsafe = false;           // 0.5 inside [p - std/2, p + std/2]
};

Prediction predict(const GpcModel& model, const Eigen::VectorXd& lambda);

// E[s(f)] and E[s(f)^2] for f ~ N(mean, variance) by Gauss-Hermite
// quadrature. Exposed so the quadrature path is testable in isolation.
struct SigmoidMoments {
  double mean;
  double second_moment;
};
SigmoidMoments sigmoid_gauss_moments(double latent_mean, double latent_variance,
                                     int nodes = 32);

bool is_unsafe(double probability, double probability_std);

// Model file: single JSON object, every real written as decimal text with
// 17 significant digits (bit-faithful round-trip). load_model re-verifies
// the Cholesky reconstruction invariant.
void save_model(const GpcModel& model, const std::filesystem::path& path);
GpcModel load_model(const std::filesystem::path& path);

}  // namespace sguq
