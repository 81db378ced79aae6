#include <doctest.h>

#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "dagma_dce/acyclicity.hpp"
#include "dagma_dce/error.hpp"
#include "dagma_dce/graphs.hpp"
#include "oracles.hpp"

using namespace dce;

namespace {

Eigen::MatrixXd uniform_matrix(int d, double hi, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, hi);
  return Eigen::MatrixXd::NullaryExpr(d, d, [&]() { return u(rng); });
}

// Random support with the given edge density, then uniform weights on it.
Eigen::MatrixXd random_support(int d, double density, double hi, Rng& rng) {
  std::bernoulli_distribution coin(density);
  Eigen::MatrixXd a = uniform_matrix(d, hi, rng);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (!coin(rng)) a(i, j) = 0.0;
  return a;
}

double spectral_radius_oracle(const Eigen::MatrixXd& w) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(w);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("h matches the cofactor determinant") {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + trial % 5;
    const Eigen::MatrixXd a = uniform_matrix(d, 0.4, rng);
    const double s = 1.0 + 0.1 * (trial % 3);
    const LogDetValue h = h_dagma(a, s);
    const Eigen::MatrixXd m = s * Eigen::MatrixXd::Identity(d, d) - a.cwiseProduct(a);
    const double det = oracle::det_cofactor(m);
    if (spectral_radius_oracle(a.cwiseProduct(a)) < s) {
      REQUIRE(h.feasible());
      CHECK(*h.value == doctest::Approx(-std::log(det) + d * std::log(s)).epsilon(1e-10));
      CHECK(*h.value >= -1e-12);
    } else {
      CHECK_FALSE(h.feasible());
    }
  }
}

TEST_CASE("h is zero exactly on acyclic supports") {
  Rng rng(2);
  int dags = 0, cyclic = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int d = 2 + trial % 4;
    const Eigen::MatrixXd a = random_support(d, 0.35, 0.5, rng);
    const LogDetValue h = h_dagma(a, 1.0);
    REQUIRE(h.feasible());
    const bool acyclic = is_acyclic_bruteforce(a, 0.0);
    if (acyclic) {
      ++dags;
      CHECK(std::abs(*h.value) <= 1e-12);
    } else {
      ++cyclic;
      CHECK(*h.value > 1e-9);
    }
  }
  CHECK(dags > 20);
  CHECK(cyclic > 20);
}

TEST_CASE("gradient of h against finite differences") {
  Rng rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    const int d = 2 + trial % 4;
    const Eigen::MatrixXd a = uniform_matrix(d, 0.45, rng);
    const double s = 1.0;
    if (!h_dagma(a, s).feasible()) continue;
    const Eigen::MatrixXd g = grad_h_dagma(a, s);
    auto f = [&](const Eigen::VectorXd& flat) {
      return *h_dagma(Eigen::Map<const Eigen::MatrixXd>(flat.data(), d, d), s).value;
    };
    const Eigen::VectorXd flat = Eigen::Map<const Eigen::VectorXd>(a.data(), a.size());
    const Eigen::VectorXd numeric = oracle::fd_gradient(f, flat, 1e-6);
    const Eigen::VectorXd analytic = Eigen::Map<const Eigen::VectorXd>(g.data(), g.size());
    CHECK(oracle::rel_error(analytic, numeric) < 1e-6);

    const Eigen::MatrixXd gw = grad_h_dagma_wrt_squared(a.cwiseProduct(a), s);
    CHECK(g.isApprox(2.0 * gw.cwiseProduct(a)));
  }
}

TEST_CASE("h is invariant under node relabeling") {
  Rng rng(4);
  const Eigen::MatrixXd a = uniform_matrix(5, 0.3, rng);
  std::vector<int> perm(5);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(5, 5);
  for (int k = 0; k < 5; ++k) p(k, perm[k]) = 1.0;
  CHECK(*h_dagma(p * a * p.transpose(), 1.0).value == doctest::Approx(*h_dagma(a, 1.0).value));
}

TEST_CASE("infeasible matrices are reported with the failing check") {
  Eigen::MatrixXd a(2, 2);
  a << 0.0, 1.2,
       1.2, 0.0;
  const FeasibilityReport r = check_feasible(a, 1.0);
  CHECK_FALSE(r.feasible);
  CHECK(r.failed_check == "pivot");
  CHECK(r.spectral_radius == doctest::Approx(1.44).epsilon(1e-6));
  CHECK_FALSE(h_dagma(a, 1.0).feasible());
  CHECK_THROWS_AS(grad_h_dagma(a, 1.0), FeasibilityError);
  CHECK(h_dagma(a, 1.5).feasible());

  Eigen::MatrixXd self = Eigen::MatrixXd::Zero(1, 1);
  self(0, 0) = 1.0;
  CHECK_FALSE(check_feasible(self, 1.0).feasible);
  CHECK(check_feasible(self, 1.01).feasible);

  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(2, 2);
  bad(0, 1) = std::nan("");
  CHECK_FALSE(check_feasible(bad, 1.0).feasible);
  CHECK_THROWS_AS(check_feasible(a, 0.0), ParameterError);
}

TEST_CASE("feasibility agrees with the spectral radius and brackets it") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 2 + trial % 5;
    const Eigen::MatrixXd a = uniform_matrix(d, 0.8, rng);
    const Eigen::MatrixXd w = a.cwiseProduct(a);
    const double rho = spectral_radius_oracle(w);
    const FeasibilityReport r = check_feasible(a, 1.0);
    if (std::abs(rho - 1.0) > 1e-6) CHECK(r.feasible == (rho < 1.0));
    CHECK(r.rho_lower <= rho + 1e-9);
    CHECK(r.rho_upper >= rho - 1e-9);
    CHECK(r.spectral_radius == doctest::Approx(rho).epsilon(1e-6));
  }
}

TEST_CASE("trace-exponential diagnostic") {
  Rng rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    const int d = 2 + trial % 4;
    const Eigen::MatrixXd a = uniform_matrix(d, 1.5, rng);
    Eigen::EigenSolver<Eigen::MatrixXd> es(a.cwiseProduct(a));
    double expected = -d;
    for (int k = 0; k < d; ++k) expected += std::exp(es.eigenvalues()(k)).real();
    CHECK(h_notears_diag(a) == doctest::Approx(expected).epsilon(1e-9));
  }
  Eigen::MatrixXd dag = Eigen::MatrixXd::Zero(3, 3);
  dag(0, 1) = 2.0;
  dag(1, 2) = 3.0;
  CHECK(std::abs(h_notears_diag(dag)) < 1e-12);
}
