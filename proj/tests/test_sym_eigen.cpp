#include "sguq/sym_eigen.hpp"

#include "doctest.h"
#include "oracles.hpp"
#include "sguq/error.hpp"
#include "sguq/rng.hpp"

using namespace sguq;

TEST_CASE("sym_eigen reproduces closed-form 2x2 spectra") {
  Eigen::MatrixXd a(2, 2);
  a << 1.0, 0.5, 0.5, 1.0;
  const auto result = sym_eigen(a);
  CHECK(result.values[0] == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(result.values[1] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("sym_eigen handles 1x1 and diagonal input") {
  Eigen::MatrixXd one(1, 1);
  one << -3.25;
  CHECK(sym_eigenvalues(one)[0] == -3.25);

  Eigen::MatrixXd diag = Eigen::VectorXd::LinSpaced(5, -2.0, 2.0).asDiagonal();
  const Eigen::VectorXd values = sym_eigenvalues(diag);
  for (int i = 1; i < 5; ++i) CHECK(values[i] <= values[i - 1]);
  CHECK(values[0] == doctest::Approx(2.0));
  CHECK(values[4] == doctest::Approx(-2.0));
}

TEST_CASE("sym_eigen residuals A v = lambda v at machine precision") {
  Rng rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 2 + static_cast<int>(rng.index(14));
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) {
        a(i, j) = rng.gaussian();
        a(j, i) = a(i, j);
      }
    const auto result = sym_eigen(a);
    for (int i = 0; i < n; ++i) {
      const double residual =
          (a * result.vectors.col(i) - result.values[i] * result.vectors.col(i)).norm();
      CHECK(residual < 1e-12 * std::max(1.0, a.norm()));
    }
    // trace preserved
    CHECK(result.values.sum() == doctest::Approx(a.trace()).epsilon(1e-12));
  }
}

TEST_CASE("sym_eigen rejects non-square input") {
  CHECK_THROWS_AS(sym_eigen(Eigen::MatrixXd::Zero(2, 3)), ArgumentError);
}

TEST_CASE("sym_eigen eigenvalues match cofactor characteristic roots on 3x3") {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd a(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j <= i; ++j) {
        a(i, j) = rng.gaussian();
        a(j, i) = a(i, j);
      }
    const Eigen::VectorXd values = sym_eigenvalues(a);
    for (int i = 0; i < 3; ++i) {
      const Eigen::MatrixXd shifted =
          a - values[i] * Eigen::MatrixXd::Identity(3, 3);
      CHECK(std::abs(oracle::cofactor_det(shifted)) < 1e-10 * std::max(1.0, a.norm()));
    }
  }
}
