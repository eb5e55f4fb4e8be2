#include "sguq/gpc.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "json_io.hpp"
#include "sguq/error.hpp"
#include "sguq/sym_eigen.hpp"

namespace sguq {

namespace {

constexpr int kMaxNewtonIterations = 100;
constexpr double kObjectiveTolerance = 1e-10;
constexpr double kStationarityTolerance = 1e-8;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double log_sigmoid(double z) {
  if (z >= 0.0) return -std::log1p(std::exp(-z));
  return z - std::log1p(std::exp(z));
}

// sum_i log s(y_i f_i)
double log_likelihood(const Eigen::VectorXd& y, const Eigen::VectorXd& f) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) sum += log_sigmoid(y[i] * f[i]);
  return sum;
}

void require_spec(const KernelSpec& spec) {
  if (!(spec.signal_variance > 0.0) || !(spec.lengthscale > 0.0) || !(spec.jitter > 0.0))
    throw ArgumentError("kernel spec needs signal_variance, lengthscale and jitter > 0");
}

struct GaussHermite {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;  // already divided by sqrt(pi): they sum to 1
};

// Golub-Welsch on the Hermite Jacobi matrix (zero diagonal, off-diagonal
// sqrt(k/2)); nodes are its eigenvalues, weights come from the squared
// first eigenvector components.
GaussHermite build_gauss_hermite(int n) {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double beta = std::sqrt(static_cast<double>(k) / 2.0);
    jacobi(k - 1, k) = beta;
    jacobi(k, k - 1) = beta;
  }
  const SymEigenResult eig = sym_eigen(jacobi);
  GaussHermite gh;
  gh.nodes = eig.values;
  gh.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    const double c = eig.vectors(0, i);
    gh.weights[i] = c * c;  // mu0 = sqrt(pi) cancels against the 1/sqrt(pi) prefactor
  }
  return gh;
}

const GaussHermite& gauss_hermite(int n) {
  static const GaussHermite gh32 = build_gauss_hermite(32);
  static const GaussHermite gh64 = build_gauss_hermite(64);
  if (n == 32) return gh32;
  if (n == 64) return gh64;
  static thread_local GaussHermite custom;
  custom = build_gauss_hermite(n);
  return custom;
}

struct LaplaceState {
  Eigen::VectorXd mode;       // f_hat
  Eigen::VectorXd gradient;   // grad log p(y|f) at f_hat
  Eigen::VectorXd curvature;  // W
  Eigen::MatrixXd chol;       // lower factor of B = I + sqrt(W) K sqrt(W)
  double objective = 0.0;     // psi(f_hat) = -a^T f / 2 + log p(y|f)
  double log_marginal = 0.0;
  bool converged = false;
};

Eigen::MatrixXd factor_b(const Eigen::MatrixXd& k, const Eigen::VectorXd& sw) {
  Eigen::MatrixXd b = sw.asDiagonal() * k * sw.asDiagonal();
  b.diagonal().array() += 1.0;
  Eigen::LLT<Eigen::MatrixXd> llt(b);
  if (llt.info() != Eigen::Success)
    throw NumericalError("Cholesky of I + sqrt(W) K sqrt(W) failed");
  return llt.matrixL();
}

// Damped Newton ascent on the log posterior of the latent vector,
// parameterized through a = K^{-1} f so no explicit inverse of K appears.
LaplaceState laplace_mode(const Eigen::MatrixXd& k, const Eigen::VectorXd& y) {
  const Eigen::Index m = y.size();
  LaplaceState state;
  Eigen::VectorXd f = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(m);
  double psi = log_likelihood(y, f);

  for (int iter = 0; iter < kMaxNewtonIterations; ++iter) {
    Eigen::VectorXd pi(m), grad(m), w(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      pi[i] = sigmoid(f[i]);
      grad[i] = 0.5 * (y[i] + 1.0) - pi[i];
      w[i] = sigmoid(f[i]) * sigmoid(-f[i]);
    }
    const Eigen::VectorXd sw = w.cwiseSqrt();
    const Eigen::MatrixXd chol = factor_b(k, sw);

    const Eigen::VectorXd b = w.cwiseProduct(f) + grad;
    const Eigen::VectorXd kb = k * b;
    const Eigen::VectorXd v =
        chol.triangularView<Eigen::Lower>().solve(sw.cwiseProduct(kb));
    const Eigen::VectorXd u =
        chol.transpose().triangularView<Eigen::Upper>().solve(v);
    const Eigen::VectorXd a_full = b - sw.cwiseProduct(u);

    // Backtrack toward the previous iterate if the full step overshoots.
    double step = 1.0;
    Eigen::VectorXd a_next, f_next;
    double psi_next = -std::numeric_limits<double>::infinity();
    for (int half = 0; half < 40; ++half) {
      a_next = a + step * (a_full - a);
      f_next = k * a_next;
      psi_next = -0.5 * a_next.dot(f_next) + log_likelihood(y, f_next);
      if (psi_next >= psi - 1e-12) break;
      step *= 0.5;
    }
    const double delta = std::abs(psi_next - psi);
    a = a_next;
    f = f_next;
    psi = psi_next;

    Eigen::VectorXd grad_now(m);
    for (Eigen::Index i = 0; i < m; ++i) grad_now[i] = 0.5 * (y[i] + 1.0) - sigmoid(f[i]);
    const double residual = (f - k * grad_now).lpNorm<Eigen::Infinity>();
    if (delta < kObjectiveTolerance && residual < kStationarityTolerance) {
      state.converged = true;
      break;
    }
  }

  state.mode = f;
  state.objective = psi;
  state.gradient.resize(m);
  state.curvature.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    state.gradient[i] = 0.5 * (y[i] + 1.0) - sigmoid(f[i]);
    state.curvature[i] = sigmoid(f[i]) * sigmoid(-f[i]);
  }
  state.chol = factor_b(k, state.curvature.cwiseSqrt());
  // Laplace evidence: psi(f_hat) - log det(B) / 2, with det(B) from the factor.
  state.log_marginal = psi - state.chol.diagonal().array().log().sum();
  return state;
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void append_vector(std::string& out, const Eigen::VectorXd& v) {
  out += '[';
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_real(v[i]);
  }
  out += ']';
}

}  // namespace

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                              const KernelSpec& spec) {
  require_spec(spec);
  if (a.cols() != b.cols())
    throw ArgumentError("kernel_matrix: feature dims " + std::to_string(a.cols()) +
                        " vs " + std::to_string(b.cols()));
  const double inv = 1.0 / (2.0 * spec.lengthscale * spec.lengthscale);
  Eigen::MatrixXd k(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j)
      k(i, j) = spec.signal_variance *
                std::exp(-(a.row(i) - b.row(j)).squaredNorm() * inv);
  if (&a == &b) k.diagonal().array() += spec.jitter;
  return k;
}

std::vector<KernelSpec> default_kernel_grid() {
  static const double sigma_f[] = {0.25, 0.5, 1.0, 2.0, 4.0};
  static const double lengthscale[] = {0.1, 0.3, 1.0, 3.0, 10.0, 30.0};
  std::vector<KernelSpec> grid;
  for (double s : sigma_f)
    for (double l : lengthscale)
      grid.push_back({KernelFamily::squared_exponential, s * s, l, 1e-8});
  return grid;
}

GpcModel fit(const Eigen::MatrixXd& features, const std::vector<int>& labels01,
             const std::vector<KernelSpec>& grid) {
  const Eigen::Index m = features.rows();
  if (m < 2) throw PreconditionError("fit needs at least 2 training rows");
  if (static_cast<Eigen::Index>(labels01.size()) != m)
    throw ArgumentError("fit: " + std::to_string(labels01.size()) + " labels for " +
                        std::to_string(m) + " rows");
  if (!features.allFinite()) throw PreconditionError("fit: non-finite feature value");
  if (grid.empty()) throw ArgumentError("fit: empty kernel grid");

  Eigen::VectorXd y(m);
  bool has_pos = false;
  bool has_neg = false;
  for (Eigen::Index i = 0; i < m; ++i) {
    const int l = labels01[static_cast<std::size_t>(i)];
    if (l != 0 && l != 1)
      throw ValidationError("fit: label " + std::to_string(l) + " must be 0 or 1");
    y[i] = l == 1 ? 1.0 : -1.0;
    (l == 1 ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg) throw ValidationError("degenerate training set: single class");

  GpcModel best;
  bool have_best = false;
  for (const auto& spec : grid) {
    require_spec(spec);
    const Eigen::MatrixXd k = kernel_matrix(features, features, spec);
    const LaplaceState state = laplace_mode(k, y);
    if (!state.converged) continue;
    // Ties keep the earlier grid entry.
    if (!have_best || state.log_marginal > best.log_marginal) {
      have_best = true;
      best.kernel = spec;
      best.mode = state.mode;
      best.mode_gradient = state.gradient;
      best.curvature = state.curvature;
      best.cholesky = state.chol;
      best.log_marginal = state.log_marginal;
    }
  }
  if (!have_best)
    throw NumericalError("fit: Newton iteration failed to converge on every grid point");
  best.features = features;
  best.labels = y;
  return best;
}

SigmoidMoments sigmoid_gauss_moments(double latent_mean, double latent_variance,
                                     int nodes) {
  if (latent_variance < 0.0) throw ArgumentError("negative latent variance");
  if (latent_variance == 0.0) {
    const double s = sigmoid(latent_mean);
    return {s, s * s};
  }
  const GaussHermite& gh = gauss_hermite(nodes);

  // The raw integrand s(mu + sqrt(2 v) x) has poles at imaginary distance
  // pi / sqrt(2 v) from the real axis, so a single Hermite pass degrades for
  // wide latents. Splitting the Gaussian exactly as
  // N(mu, v) = N(mu, v - c) conv N(0, c) and integrating each factor with the
  // same rule fixes that: the inner pass smooths the sigmoid into an entire
  // function the outer pass resolves at any variance.
  constexpr double kSmoothVariance = 2.0;
  if (latent_variance <= kSmoothVariance) {
    const double scale = std::numbers::sqrt2 * std::sqrt(latent_variance);
    double first = 0.0;
    double second = 0.0;
    for (Eigen::Index i = 0; i < gh.nodes.size(); ++i) {
      const double s = sigmoid(latent_mean + scale * gh.nodes[i]);
      first += gh.weights[i] * s;
      second += gh.weights[i] * s * s;
    }
    return {first, second};
  }

  const double outer_scale =
      std::numbers::sqrt2 * std::sqrt(latent_variance - kSmoothVariance);
  const double inner_scale = std::numbers::sqrt2 * std::sqrt(kSmoothVariance);
  double first = 0.0;
  double second = 0.0;
  for (Eigen::Index i = 0; i < gh.nodes.size(); ++i) {
    const double shifted = latent_mean + outer_scale * gh.nodes[i];
    double inner_first = 0.0;
    double inner_second = 0.0;
    for (Eigen::Index j = 0; j < gh.nodes.size(); ++j) {
      const double s = sigmoid(shifted + inner_scale * gh.nodes[j]);
      inner_first += gh.weights[j] * s;
      inner_second += gh.weights[j] * s * s;
    }
    first += gh.weights[i] * inner_first;
    second += gh.weights[i] * inner_second;
  }
  return {first, second};
}

bool is_unsafe(double probability, double probability_std) {
  return std::abs(probability - 0.5) <= 0.5 * probability_std;
}

Prediction predict(const GpcModel& model, const Eigen::VectorXd& lambda) {
  if (lambda.size() != model.features.cols())
    throw ArgumentError("predict: model expects feature dim " +
                        std::to_string(model.features.cols()) + ", got " +
                        std::to_string(lambda.size()));
  if (!lambda.allFinite()) throw PreconditionError("predict: non-finite feature value");

  const Eigen::Index m = model.features.rows();
  const double inv = 1.0 / (2.0 * model.kernel.lengthscale * model.kernel.lengthscale);
  Eigen::VectorXd kstar(m);
  for (Eigen::Index i = 0; i < m; ++i)
    kstar[i] = model.kernel.signal_variance *
               std::exp(-(model.features.row(i).transpose() - lambda).squaredNorm() * inv);
  const double kss = model.kernel.signal_variance + model.kernel.jitter;

  Prediction out;
  out.latent_mean = kstar.dot(model.mode_gradient);
  const Eigen::VectorXd v = model.cholesky.triangularView<Eigen::Lower>().solve(
      model.curvature.cwiseSqrt().cwiseProduct(kstar));
  out.latent_variance = std::max(0.0, kss - v.squaredNorm());

  const SigmoidMoments moments = sigmoid_gauss_moments(out.latent_mean, out.latent_variance);
  out.probability = std::clamp(moments.mean, 0.0, 1.0);
  out.probability_std =
      std::sqrt(std::max(0.0, moments.second_moment - moments.mean * moments.mean));
  out.unsafe = is_unsafe(out.probability, out.probability_std);
  return out;
}

void save_model(const GpcModel& model, const std::filesystem::path& path) {
  // Hand-rolled writer so every real is decimal text with 17 significant
  // digits, which round-trips 64-bit doubles exactly.
  std::string out;
  out.reserve(1024 + static_cast<std::size_t>(model.features.size()) * 24);
  out += "{\"kernel\":{\"family\":\"squared_exponential\",\"signal_variance\":";
  out += format_real(model.kernel.signal_variance);
  out += ",\"lengthscale\":";
  out += format_real(model.kernel.lengthscale);
  out += ",\"jitter\":";
  out += format_real(model.kernel.jitter);
  out += "},\"m\":" + std::to_string(model.train_count());
  out += ",\"n\":" + std::to_string(model.feature_dim());
  out += ",\"features\":[";
  for (Eigen::Index i = 0; i < model.features.rows(); ++i) {
    if (i) out += ',';
    append_vector(out, model.features.row(i));
  }
  out += "],\"labels\":[";
  for (Eigen::Index i = 0; i < model.labels.size(); ++i) {
    if (i) out += ',';
    out += model.labels[i] > 0 ? "1" : "-1";
  }
  out += "],\"mode\":";
  append_vector(out, model.mode);
  out += ",\"mode_gradient\":";
  append_vector(out, model.mode_gradient);
  out += ",\"curvature\":";
  append_vector(out, model.curvature);
  out += ",\"cholesky\":[";
  for (Eigen::Index i = 0; i < model.cholesky.rows(); ++i) {
    if (i) out += ',';
    append_vector(out, model.cholesky.row(i).head(i + 1));
  }
  out += "],\"log_marginal\":";
  out += format_real(model.log_marginal);
  out += "}\n";

  auto file = detail::open_output(path);
  file << out;
  if (!file) throw IoError("failed writing " + path.string());
}

GpcModel load_model(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  const std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  const detail::json j = detail::parse_object(text, "model file " + path.string());

  GpcModel model;
  try {
    const auto& kj = j.at("kernel");
    if (kj.at("family").get<std::string>() != "squared_exponential")
      throw ValidationError("unknown kernel family in " + path.string());
    model.kernel.signal_variance = kj.at("signal_variance").get<double>();
    model.kernel.lengthscale = kj.at("lengthscale").get<double>();
    model.kernel.jitter = kj.at("jitter").get<double>();
    const auto m = j.at("m").get<Eigen::Index>();
    const auto n = j.at("n").get<Eigen::Index>();

    model.features.resize(m, n);
    const auto& rows = j.at("features");
    if (static_cast<Eigen::Index>(rows.size()) != m)
      throw ValidationError("model features row count mismatch");
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index c = 0; c < n; ++c)
        model.features(i, c) = rows[static_cast<std::size_t>(i)]
                                   .at(static_cast<std::size_t>(c)).get<double>();

    auto read_vector = [&](const char* key) {
      const auto values = j.at(key).get<std::vector<double>>();
      if (static_cast<Eigen::Index>(values.size()) != m)
        throw ValidationError(std::string("model ") + key + " length mismatch");
      return Eigen::Map<const Eigen::VectorXd>(values.data(), m).eval();
    };
    model.labels = read_vector("labels");
    model.mode = read_vector("mode");
    model.mode_gradient = read_vector("mode_gradient");
    model.curvature = read_vector("curvature");

    model.cholesky = Eigen::MatrixXd::Zero(m, m);
    const auto& tri = j.at("cholesky");
    if (static_cast<Eigen::Index>(tri.size()) != m)
      throw ValidationError("model cholesky row count mismatch");
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto& row = tri[static_cast<std::size_t>(i)];
      if (static_cast<Eigen::Index>(row.size()) != i + 1)
        throw ValidationError("model cholesky row " + std::to_string(i) +
                              " has wrong length");
      for (Eigen::Index c = 0; c <= i; ++c)
        model.cholesky(i, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    model.log_marginal = j.at("log_marginal").get<double>();
  } catch (const detail::json::exception& e) {
    throw ParseError("model file " + path.string() + ": " + e.what());
  }

  for (Eigen::Index i = 0; i < model.labels.size(); ++i) {
    if (model.labels[i] != 1.0 && model.labels[i] != -1.0)
      throw ValidationError("model label must be -1 or +1");
    if (model.curvature[i] < 0.0 || model.curvature[i] > 0.25 + 1e-12)
      throw ValidationError("model curvature outside [0, 0.25]");
  }

  // Re-verify the factorization invariant: L L^T must reconstruct
  // I + sqrt(W) K sqrt(W) within 1e-8.
  const Eigen::MatrixXd k = kernel_matrix(model.features, model.features, model.kernel);
  const Eigen::VectorXd sw = model.curvature.cwiseSqrt();
  Eigen::MatrixXd b = sw.asDiagonal() * k * sw.asDiagonal();
  b.diagonal().array() += 1.0;
  const double err =
      (model.cholesky * model.cholesky.transpose() - b).cwiseAbs().maxCoeff();
  if (err > 1e-8)
    throw ValidationError("model file " + path.string() +
                          ": Cholesky factor does not reconstruct B (error " +
                          std::to_string(err) + ")");
  return model;
}

}  // namespace sguq
