#include <doctest.h>

#include <cmath>

#include "dagma_dce/error.hpp"
#include "dagma_dce/objective.hpp"
#include "oracles.hpp"

using namespace dce;

namespace {

MlpSemModel small_mlp(int d, int hidden, Rng& rng, double scale) {
  MlpSemModel m(d, {hidden, Activation::Sigmoid, true});
  std::normal_distribution<double> normal(0.0, scale);
  m.set_params(Eigen::VectorXd::NullaryExpr(m.num_params(), [&]() { return normal(rng); }));
  return m;
}

Eigen::MatrixXd normal_matrix(int r, int c, Rng& rng) {
  std::normal_distribution<double> normal;
  return Eigen::MatrixXd::NullaryExpr(r, c, [&]() { return normal(rng); });
}

}  // namespace

TEST_CASE("DCE adjacency is the RMS Jacobian and L1 the mean absolute Jacobian") {
  JacobianBatch jac(3, 2);
  // sample n, regressor j, input i
  jac(0, 1, 0) = 3.0;
  jac(1, 1, 0) = -4.0;
  jac(2, 1, 0) = 0.0;
  jac(0, 0, 1) = 1.0;
  jac(1, 0, 0) = 2.0;
  const WeightedAdjacency a = dce_adjacency(jac);
  CHECK(a(0, 1) == doctest::Approx(std::sqrt(25.0 / 3.0)));
  CHECK(a(1, 0) == doctest::Approx(std::sqrt(1.0 / 3.0)));
  CHECK(a(0, 0) == doctest::Approx(std::sqrt(4.0 / 3.0)));
  CHECK(a(1, 1) == 0.0);
  CHECK(dce_l1(jac) == doctest::Approx((3.0 + 4.0 + 1.0 + 2.0) / 3.0));
  CHECK_THROWS_AS(dce_adjacency(JacobianBatch(0, 2)), ParameterError);
}

TEST_CASE("adjacency cotangent is the chain rule through the RMS") {
  Rng rng(1);
  JacobianBatch jac(5, 3);
  jac.values = normal_matrix(5, 9, rng);
  jac.values.col(1 * 3 + 2).setZero();  // A(2, 1) = 0 hits the kink
  const Eigen::MatrixXd grad_a = normal_matrix(3, 3, rng);
  const JacobianBatch cot = adjacency_cotangent(dce_adjacency(jac), jac, grad_a);
  auto f = [&](const Eigen::VectorXd& flat) {
    JacobianBatch j2(5, 3);
    j2.values = Eigen::Map<const Eigen::MatrixXd>(flat.data(), 5, 9);
    return (dce_adjacency(j2).array() * grad_a.array()).sum();
  };
  const Eigen::VectorXd flat = Eigen::Map<const Eigen::VectorXd>(jac.values.data(), jac.values.size());
  Eigen::VectorXd numeric = oracle::fd_gradient(f, flat);
  const Eigen::VectorXd analytic = Eigen::Map<const Eigen::VectorXd>(cot.values.data(), cot.values.size());
  // Exclude the kink column from the comparison; the subgradient there is zero by convention.
  for (int n = 0; n < 5; ++n) numeric(static_cast<Eigen::Index>(1 * 3 + 2) * 5 + n) = 0.0;
  CHECK(oracle::rel_error(analytic, numeric) < 1e-6);
  CHECK(cot.values.col(1 * 3 + 2).isZero());
  CHECK_THROWS_AS(adjacency_cotangent(dce_adjacency(jac), jac, Eigen::MatrixXd::Zero(2, 2)), ParameterError);
}

TEST_CASE("L1 cotangent uses sign with sign(0) = 0") {
  JacobianBatch jac(2, 1);
  jac.values << 0.5, 0.0;
  const JacobianBatch g = l1_cotangent(jac);
  CHECK(g.values(0, 0) == 0.5);
  CHECK(g.values(1, 0) == 0.0);
}

TEST_CASE("DCE objective gradient matches finite differences term by term") {
  Rng rng(2);
  const int d = 3;
  for (int trial = 0; trial < 5; ++trial) {
    MlpSemModel m = small_mlp(d, 4, rng, 0.3);
    const Eigen::MatrixXd x = normal_matrix(20, d, rng);
    for (const ObjectiveWeights w : {ObjectiveWeights{0.0, 0.0, 1.0, 1.0},    // MSE only (+h)
                                     ObjectiveWeights{0.3, 0.0, 0.5, 1.0},    // L1 on
                                     ObjectiveWeights{0.1, 0.2, 0.8, 2.0}}) {  // all terms
      const ObjectiveEvaluation ev = try_evaluate_dce_objective(m, x, w);
      REQUIRE(ev.feasible);
      CHECK(ev.score.total == doctest::Approx(ev.score.recompute_total()));
      const Eigen::VectorXd theta0 = m.params();
      auto total = [&](const Eigen::VectorXd& t) {
        m.set_params(t);
        return try_evaluate_dce_objective(m, x, w, false).score.total;
      };
      const Eigen::VectorXd numeric = oracle::fd_gradient(total, theta0);
      m.set_params(theta0);
      CHECK(oracle::rel_error(ev.gradient, numeric) < 1e-5);
    }
  }
}

TEST_CASE("score pieces add up") {
  Rng rng(3);
  MlpSemModel m = small_mlp(3, 2, rng, 0.4);
  const Eigen::MatrixXd x = normal_matrix(15, 3, rng);
  const ObjectiveWeights w{0.2, 0.1, 0.7, 1.5};
  const ObjectiveEvaluation ev = try_evaluate_dce_objective(m, x, w);
  const JacobianBatch jac = m.jacobian_batch(x);
  CHECK(ev.score.mse == doctest::Approx(0.5 * (x - m.forward(x)).squaredNorm() / 15.0));
  CHECK(ev.score.l1 == doctest::Approx(dce_l1(jac)));
  CHECK(ev.score.l2 == doctest::Approx(0.5 * m.params().squaredNorm()));
  CHECK(*h_dagma(dce_adjacency(jac), 1.5).value == doctest::Approx(ev.score.h_value));
  CHECK(ev.adjacency.isApprox(dce_adjacency(jac)));
  const auto j = to_json(ev.score);
  CHECK(j.at("total").get<double>() == ev.score.total);
}

TEST_CASE("infeasible DCE objective reports without a gradient") {
  Rng rng(4);
  MlpSemModel m = small_mlp(2, 3, rng, 4.0);
  const Eigen::MatrixXd x = normal_matrix(10, 2, rng) * 0.1;
  const ObjectiveWeights w{0.0, 0.0, 1.0, 1e-3};
  const ObjectiveEvaluation ev = try_evaluate_dce_objective(m, x, w);
  CHECK_FALSE(ev.feasible);
  CHECK(ev.gradient.size() == 0);
  CHECK_FALSE(ev.feasibility.failed_check.empty());
  CHECK_THROWS_AS(evaluate_objective(m, x, 0.0, 1.0, 1e-3), FeasibilityError);
}

TEST_CASE("baseline objective gradient matches finite differences") {
  Rng rng(5);
  MlpSemModel m = small_mlp(3, 4, rng, 0.3);
  const Eigen::MatrixXd x = normal_matrix(20, 3, rng);
  for (const ObjectiveWeights w : {ObjectiveWeights{0.0, 0.0, 1.0, 1.0}, ObjectiveWeights{0.02, 0.005, 0.3, 0.9}}) {
    const ObjectiveEvaluation ev = try_evaluate_baseline_objective(m, x, w);
    REQUIRE(ev.feasible);
    CHECK(ev.score.l1 == doctest::Approx(l1_first_layer(m)));
    CHECK(ev.adjacency.isApprox(first_layer_norms(m)));
    const Eigen::VectorXd theta0 = m.params();
    auto total = [&](const Eigen::VectorXd& t) {
      m.set_params(t);
      return try_evaluate_baseline_objective(m, x, w, false).score.total;
    };
    const Eigen::VectorXd numeric = oracle::fd_gradient(total, theta0);
    m.set_params(theta0);
    CHECK(oracle::rel_error(ev.gradient, numeric) < 1e-6);
  }
}

TEST_CASE("zero first layer means zero adjacency and zero constraint") {
  Rng rng(6);
  MlpSemModel m(4, {3, Activation::Sigmoid, true});
  m.initialize(rng);
  const Eigen::MatrixXd x = normal_matrix(10, 4, rng);
  const ObjectiveEvaluation dce = try_evaluate_dce_objective(m, x, {0.1, 0.0, 1.0, 1.0});
  CHECK(dce.feasible);
  CHECK(dce.adjacency.isZero());
  CHECK(dce.score.h_value == doctest::Approx(0.0).scale(1.0));
  const ObjectiveEvaluation base = try_evaluate_baseline_objective(m, x, {0.1, 0.0, 1.0, 1.0});
  CHECK(base.score.h_value == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("single-node model") {
  // With d = 1 a model may still depend on its own input, so the diagonal
  // carries weight; h is then the self-loop penalty -log(s - a^2) + log s.
  Rng rng(7);
  MlpSemModel m = small_mlp(1, 3, rng, 0.2);
  const Eigen::MatrixXd x = normal_matrix(30, 1, rng);
  const ObjectiveEvaluation ev = try_evaluate_dce_objective(m, x, {0.0, 0.0, 1.0, 1.0});
  REQUIRE(ev.feasible);
  const double a = ev.adjacency(0, 0);
  CHECK(ev.score.h_value == doctest::Approx(-std::log(1.0 - a * a)));
  MlpSemModel zero(1, {3, Activation::Sigmoid, true});
  zero.initialize(rng);
  CHECK(try_evaluate_dce_objective(zero, x, {0.0, 0.0, 1.0, 1.0}).score.h_value == 0.0);
}
