#include <doctest.h>

#include <cmath>

#include "dagma_dce/error.hpp"
#include "dagma_dce/lemmas.hpp"
#include "dagma_dce/objective.hpp"

using namespace dce;

namespace {

MlpSemModel random_relu(int d, int hidden, std::uint64_t seed) {
  MlpSemModel m(d, {hidden, Activation::Relu, true});
  Rng rng(seed);
  std::normal_distribution<double> normal;
  m.set_params(Eigen::VectorXd::NullaryExpr(m.num_params(), [&]() { return normal(rng); }));
  return m;
}

Eigen::MatrixXd normal_rows(int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal;
  return Eigen::MatrixXd::NullaryExpr(n, d, [&]() { return normal(rng); });
}

}  // namespace

TEST_CASE("small first-layer norm with a large derivative, over the grid") {
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    for (double delta : {1.0, 10.0, 100.0}) {
      const EdgeWitness w = construct_lemma1_mlp(eps, delta, 0, 3, 8);
      CAPTURE(eps);
      CAPTURE(delta);
      CHECK(w.first_layer_norm < eps);
      CHECK(w.dce_entry > delta);
      CHECK(w.output == 1);
      CHECK(first_layer_norms(w.model)(0, 1) == doctest::Approx(w.first_layer_norm));
    }
  }
}

TEST_CASE("witness entries are what the DCE adjacency reports") {
  const EdgeWitness w = construct_lemma1_mlp(1e-3, 10.0, 2, 3, 4);
  CHECK(w.output == 0);
  const Eigen::MatrixXd x = normal_rows(1000, 3, 20240521);
  // Same draw order as the library: column by column.
  Rng rng(20240521);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd xc(1000, 3);
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 1000; ++r) xc(r, c) = normal(rng);
  const WeightedAdjacency a = dce_adjacency(w.model.jacobian_batch(xc));
  CHECK(a(2, 0) == doctest::Approx(w.dce_entry).epsilon(1e-12));
  // Only one edge is present.
  CHECK((a.array() > 0.0).count() == 1);
  (void)x;
}

TEST_CASE("doubling the output layer doubles the DCE entry") {
  const EdgeWitness w = construct_lemma1_mlp(1e-2, 10.0, 0, 2, 5);
  MlpSemModel doubled = w.model;
  doubled.output_weights() *= 2.0;
  const double e2 = empirical_dce_entry(doubled, 0, 1);
  CHECK(e2 == doctest::Approx(2.0 * w.dce_entry).epsilon(0.01));
}

TEST_CASE("lemma constructor argument checks") {
  CHECK_THROWS_AS(construct_lemma1_mlp(0.0, 1.0, 0, 2, 4), ParameterError);
  CHECK_THROWS_AS(construct_lemma1_mlp(1.0, -1.0, 0, 2, 4), ParameterError);
  CHECK_THROWS_AS(construct_lemma1_mlp(1.0, 1.0, 2, 2, 4), ParameterError);
  CHECK_THROWS_AS(construct_lemma1_mlp(1.0, 1.0, 0, 1, 4), ParameterError);
  // delta = 0 is trivially met by any nonzero network.
  const EdgeWitness w = construct_lemma1_mlp(1.0, 0.0, 0, 2, 4);
  CHECK(w.dce_entry > 0.0);
}

TEST_CASE("ReLU rescaling keeps the function and moves the first-layer norm") {
  const MlpSemModel m = random_relu(3, 6, 1);
  const Eigen::MatrixXd x = normal_rows(1000, 3, 2);
  const Eigen::MatrixXd f0 = m.forward(x);
  const WeightedAdjacency a0 = dce_adjacency(m.jacobian_batch(x));
  std::vector<double> norms;
  for (double s : {1e-3, 1.0, 1e3}) {
    const MlpSemModel r = rescale_relu_mlp(m, s, 0, 2);
    CHECK((r.forward(x) - f0).cwiseAbs().maxCoeff() <= 1e-9);
    const double n = first_layer_norms(r)(0, 2);
    CHECK(std::abs(n - s) <= 1e-12 * std::max(1.0, s));
    CHECK((dce_adjacency(r.jacobian_batch(x)) - a0).cwiseAbs().maxCoeff() <= 1e-9);
    norms.push_back(n);
  }
  CHECK(norms.back() / norms.front() == doctest::Approx(1e6));
}

TEST_CASE("rescaling is a group action") {
  const MlpSemModel m = random_relu(2, 4, 3);
  const double current = first_layer_norms(m)(1, 0);
  CHECK(rescale_relu_mlp(m, current, 1, 0).params() == m.params());
  const MlpSemModel twice = rescale_relu_mlp(rescale_relu_mlp(m, 5.0, 1, 0), 0.2, 1, 0);
  const MlpSemModel once = rescale_relu_mlp(m, 0.2, 1, 0);
  CHECK(twice.params().isApprox(once.params(), 1e-12));
}

TEST_CASE("rescaling preconditions") {
  MlpSemModel sig(2, {3, Activation::Sigmoid, true});
  sig.first_layer().setOnes();
  CHECK_THROWS_AS(rescale_relu_mlp(sig, 1.0, 0, 1), ParameterError);
  const MlpSemModel r = random_relu(2, 3, 4);
  CHECK_THROWS_AS(rescale_relu_mlp(r, 0.0, 0, 1), ParameterError);
  CHECK_THROWS_AS(rescale_relu_mlp(r, 1.0, 0, 2), ParameterError);
  MlpSemModel zero = r;
  zero.first_layer().col(0).setZero();
  CHECK_THROWS_AS(rescale_relu_mlp(zero, 1.0, 0, 1), ParameterError);
}
