#include "sguq/sym_eigen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "sguq/error.hpp"

namespace sguq {

namespace {

double off_diagonal_norm(const Eigen::MatrixXd& a) {
  double sum = 0.0;
  const auto n = a.rows();
  for (Eigen::Index p = 0; p < n; ++p)
    for (Eigen::Index q = p + 1; q < n; ++q) sum += a(p, q) * a(p, q);
  return std::sqrt(2.0 * sum);
}

}  // namespace

SymEigenResult sym_eigen(const Eigen::MatrixXd& input, bool with_vectors) {
  if (input.rows() != input.cols())
    throw ArgumentError("sym_eigen: matrix is not square");
  const Eigen::Index n = input.rows();

  Eigen::MatrixXd a = 0.5 * (input + input.transpose());
  Eigen::MatrixXd v;
  if (with_vectors) v = Eigen::MatrixXd::Identity(n, n);

  if (n == 1) return {a.diagonal(), v};

  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const double tol = 1e-15 * scale * static_cast<double>(n);
  const long rotation_budget = 100L * static_cast<long>(n) * static_cast<long>(n);
  long rotations = 0;

  while (off_diagonal_norm(a) > tol) {
    if (rotations >= rotation_budget)
      throw NumericalError("sym_eigen: rotation budget exhausted (" +
                           std::to_string(rotation_budget) + ") without convergence");
    // One cyclic sweep in fixed (p, q) order keeps the result deterministic.
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-18 * scale) continue;
        ++rotations;

        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        // Smaller-angle root, computed without squaring overflow.
        double t;
        if (std::abs(theta) > 1e150) {
          t = 1.0 / (2.0 * theta);
        } else {
          t = ((theta >= 0.0) ? 1.0 : -1.0) /
              (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        const double app = a(p, p);
        const double aqq = a(q, q);
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(p, k) = a(k, p);
          a(k, q) = s * akp + c * akq;
          a(q, k) = a(k, q);
        }
        if (with_vectors) {
          for (Eigen::Index k = 0; k < n; ++k) {
            const double vkp = v(k, p);
            const double vkq = v(k, q);
            v(k, p) = c * vkp - s * vkq;
            v(k, q) = s * vkp + c * vkq;
          }
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&a](Eigen::Index i, Eigen::Index j) {
    return a(i, i) > a(j, j);
  });

  SymEigenResult result;
  result.values.resize(n);
  if (with_vectors) result.vectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    result.values[i] = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
    if (with_vectors) result.vectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
  }
  return result;
}

Eigen::VectorXd sym_eigenvalues(const Eigen::MatrixXd& a) {
  return sym_eigen(a, /*with_vectors=*/false).values;
}

}  // namespace sguq
