#include <doctest.h>

#include <cmath>

#include "dagma_dce/error.hpp"
#include "dagma_dce/synthdata.hpp"

using namespace dce;

TEST_CASE("two-sided uniform stays in the band and is symmetric") {
  Rng rng(1);
  int negatives = 0;
  const int n = 20000;
  for (int k = 0; k < n; ++k) {
    const double v = sample_two_sided_uniform(0.5, 2.0, rng);
    CHECK(std::abs(v) >= 0.5);
    CHECK(std::abs(v) <= 2.0);
    negatives += v < 0;
  }
  CHECK(std::abs(negatives - n / 2) < 4 * std::sqrt(n / 4.0));
}

TEST_CASE("linear SEM coefficients live exactly on the edges") {
  Rng rng(2);
  const BinaryDag g = sample_er_dag(8, 12.0, rng);
  const SemSpec sem = sample_linear_sem(g, 0.5, 2.0, rng);
  const auto& b = std::get<LinearMechanism>(sem.mechanism).coefficients;
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) {
      if (g.has_edge(i, j)) {
        CHECK(std::abs(b(i, j)) >= 0.5);
        CHECK(std::abs(b(i, j)) <= 2.0);
      } else {
        CHECK(b(i, j) == 0.0);
      }
    }
  }
  CHECK_THROWS_AS(sample_linear_sem(g, 2.0, 0.5, rng), ParameterError);
}

TEST_CASE("linear simulation solves x = x B + z") {
  Rng rng(3);
  const BinaryDag g = sample_er_dag(6, 8.0, rng);
  const SemSpec sem = sample_linear_sem(g, 0.5, 2.0, rng);
  const auto& b = std::get<LinearMechanism>(sem.mechanism).coefficients;
  std::normal_distribution<double> normal;
  Eigen::MatrixXd z = Eigen::MatrixXd::NullaryExpr(50, 6, [&]() { return normal(rng); });
  const Eigen::MatrixXd x = simulate_from_noise(sem, z, rng);
  const Eigen::MatrixXd reference = z * (Eigen::MatrixXd::Identity(6, 6) - b).inverse();
  CHECK((x - reference).cwiseAbs().maxCoeff() < 1e-9 * (1.0 + reference.cwiseAbs().maxCoeff()));
}

TEST_CASE("linear simulation covariance matches the closed form") {
  Rng rng(4);
  const BinaryDag g(3, {{0, 1}, {1, 2}, {0, 2}});
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(3, 3);
  b(0, 1) = 1.5;
  b(1, 2) = -0.8;
  b(0, 2) = 0.6;
  const SemSpec sem{g, LinearMechanism{b}, NoiseSpec{0.7}};
  const Dataset ds = simulate(sem, 40000, rng);
  const Eigen::MatrixXd m = (Eigen::MatrixXd::Identity(3, 3) - b).inverse();
  const Eigen::MatrixXd sigma = 0.49 * m.transpose() * m;
  const Eigen::MatrixXd centered = ds.x.rowwise() - ds.x.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered / (ds.x.rows() - 1.0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(cov(i, j) == doctest::Approx(sigma(i, j)).epsilon(0.05).scale(1.0));
}

TEST_CASE("random MLP SEM follows its stored weights") {
  Rng rng(5);
  const BinaryDag g(3, {{0, 2}, {1, 2}});
  const SemSpec sem = sample_random_mlp_sem(g, 7, rng);
  const auto& mech = std::get<RandomMlpMechanism>(sem.mechanism);
  REQUIRE(mech.nodes.size() == 3);
  CHECK(mech.nodes[0].parents.empty());
  CHECK(mech.nodes[2].parents == std::vector<int>{0, 1});
  CHECK(mech.nodes[2].w1.rows() == 7);
  CHECK(mech.nodes[2].w1.cols() == 2);
  CHECK(mech.nodes[2].w1.cwiseAbs().minCoeff() >= 0.5);
  CHECK(mech.nodes[2].w2.cwiseAbs().maxCoeff() <= 2.0);

  Eigen::MatrixXd z = Eigen::MatrixXd::Random(20, 3);
  const Eigen::MatrixXd x = simulate_from_noise(sem, z, rng);
  CHECK(x.col(0).isApprox(z.col(0)));
  for (int r = 0; r < 20; ++r) {
    double f = 0.0;
    for (int k = 0; k < 7; ++k) {
      const double pre = mech.nodes[2].w1(k, 0) * x(r, 0) + mech.nodes[2].w1(k, 1) * x(r, 1);
      f += mech.nodes[2].w2(k) / (1.0 + std::exp(-pre));
    }
    CHECK(x(r, 2) == doctest::Approx(f + z(r, 2)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(sample_random_mlp_sem(g, 0, rng), ParameterError);
}

TEST_CASE("RBF GP draws have the kernel as covariance") {
  Rng rng(6);
  Eigen::VectorXd pts(3);
  pts << -0.5, 0.0, 1.5;
  const int draws = 20000;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(3, 3);
  for (int k = 0; k < draws; ++k) {
    const Eigen::VectorXd f = sample_rbf_gp(pts, 1.0, rng);
    acc += f * f.transpose();
  }
  acc /= draws;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double diff = pts(i) - pts(j);
      CHECK(acc(i, j) == doctest::Approx(std::exp(-0.5 * diff * diff)).scale(1.0).epsilon(0.04));
    }
  }
}

TEST_CASE("RBF GP handles repeated inputs through jitter") {
  Rng rng(7);
  const Eigen::VectorXd pts = Eigen::VectorXd::Constant(50, 0.3);
  const Eigen::VectorXd f = sample_rbf_gp(pts, 1.0, rng);
  CHECK(f.allFinite());
  // A fully correlated draw is (nearly) constant.
  CHECK((f.array() - f(0)).abs().maxCoeff() < 1e-3);
}

TEST_CASE("RBF GP reports an unusable Gram matrix") {
  Rng rng(8);
  Eigen::VectorXd pts(2);
  pts << 0.0, 1.0;
  CHECK_THROWS_AS(sample_rbf_gp(pts, 0.0, rng), SimulationError);
}

TEST_CASE("GP additive SEM leaves root nodes as pure noise") {
  Rng rng(9);
  const BinaryDag g(3, {{0, 1}, {0, 2}, {1, 2}});
  const SemSpec sem = make_gp_additive_sem(g, 1.0);
  Eigen::MatrixXd z = Eigen::MatrixXd::Random(100, 3);
  const Eigen::MatrixXd x = simulate_from_noise(sem, z, rng);
  CHECK(x.col(0).isApprox(z.col(0)));
  CHECK_FALSE(x.col(1).isApprox(z.col(1)));
  CHECK_THROWS_AS(make_gp_additive_sem(g, 0.0), ParameterError);
}

TEST_CASE("simulation is reproducible and rejects bad input") {
  Rng a(10), b(10);
  const BinaryDag g = sample_er_dag(5, 6.0, a);
  (void)sample_er_dag(5, 6.0, b);
  const SemSpec sa = make_gp_additive_sem(g, 1.0);
  const Dataset da = simulate(sa, 200, a);
  const Dataset db = simulate(sa, 200, b);
  CHECK(da.x == db.x);
  CHECK(da.sem_hash == sem_hash(sa));
  CHECK(da.sem_hash.size() == 16);

  BinaryDag cyclic(2, {{0, 1}, {1, 0}});
  const SemSpec bad{cyclic, LinearMechanism{Eigen::MatrixXd::Zero(2, 2)}, {}};
  CHECK_THROWS_AS(simulate(bad, 10, a), ParameterError);
  CHECK_THROWS_AS(simulate(sa, 0, a), ParameterError);
  const SemSpec zero_noise{g, GpAdditiveMechanism{1.0}, NoiseSpec{0.0}};
  CHECK_THROWS_AS(simulate(zero_noise, 10, a), ParameterError);
}

TEST_CASE("sem hash separates different SEMs") {
  Rng rng(11);
  const BinaryDag g = sample_er_dag(5, 6.0, rng);
  const SemSpec s1 = sample_linear_sem(g, 0.5, 2.0, rng);
  const SemSpec s2 = sample_linear_sem(g, 0.5, 2.0, rng);
  CHECK(sem_hash(s1) != sem_hash(s2));
  CHECK(sem_hash(s1) == sem_hash(s1));
  CHECK(to_json(s1)["mechanism"]["type"] == "linear");
}

TEST_CASE("standardize and column variances") {
  Eigen::MatrixXd x(4, 2);
  x << 1, 5,
       2, 5,
       3, 5,
       6, 5;
  const Eigen::VectorXd v = column_variances(x);
  CHECK(v(0) == doctest::Approx(14.0 / 3.0));
  CHECK(v(1) == 0.0);
  const Eigen::MatrixXd s = standardize(x);
  CHECK(std::abs(s.col(0).mean()) < 1e-12);
  CHECK(column_variances(s)(0) == doctest::Approx(1.0));
  CHECK(s.col(1).cwiseAbs().maxCoeff() == 0.0);
}
