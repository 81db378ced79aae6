#include <doctest.h>

#include <set>

#include "dagma_dce/error.hpp"
#include "dagma_dce/graphs.hpp"
#include "oracles.hpp"

using namespace dce;

namespace {

oracle::Adj to_adj(const BinaryDag& g) {
  oracle::Adj a(g.d(), std::vector<int>(g.d(), 0));
  for (const auto& [i, j] : g.edges()) a[i][j] = 1;
  return a;
}

}  // namespace

TEST_CASE("BinaryDag edge bookkeeping") {
  BinaryDag g(4, {{0, 1}, {2, 1}, {1, 3}});
  CHECK(g.edge_count() == 3);
  CHECK(g.has_edge(0, 1));
  CHECK_FALSE(g.has_edge(1, 0));
  CHECK(g.parents(1) == std::vector<int>{0, 2});
  CHECK(g.children(1) == std::vector<int>{3});
  g.remove_edge(0, 1);
  CHECK(g.edge_count() == 2);
  CHECK(g.edges() == std::vector<Edge>{{1, 3}, {2, 1}});

  CHECK_THROWS_AS(g.add_edge(2, 2), ParameterError);
  CHECK_THROWS_AS(g.add_edge(0, 4), ParameterError);
  CHECK_THROWS_AS(BinaryDag(-1), ParameterError);
}

TEST_CASE("topological order respects every edge or returns a real cycle") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 2 + trial % 6;
    BinaryDag g(d);
    std::bernoulli_distribution coin(0.3);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        if (i != j && coin(rng)) g.add_edge(i, j);

    const auto result = topological_order(g);
    CHECK(result.acyclic() == oracle::acyclic(to_adj(g)));
    if (result.acyclic()) {
      std::vector<int> pos(d);
      for (int k = 0; k < d; ++k) pos[(*result.order)[k]] = k;
      for (const auto& [i, j] : g.edges()) CHECK(pos[i] < pos[j]);
    } else {
      const auto& c = result.cycle;
      REQUIRE(c.size() >= 2);
      for (std::size_t k = 0; k < c.size(); ++k) CHECK(g.has_edge(c[k], c[(k + 1) % c.size()]));
    }
  }
}

TEST_CASE("ER sampler produces DAGs with the requested edge density") {
  Rng rng(5);
  const int d = 10;
  double total = 0.0;
  const int reps = 400;
  for (int r = 0; r < reps; ++r) {
    const BinaryDag g = sample_er_dag(d, 20.0, rng);
    CHECK(topological_order(g).acyclic());
    total += static_cast<double>(g.edge_count());
  }
  // Binomial(45, 20/45): mean 20, sd of the average ~ 3.33 / 20.
  CHECK(total / reps == doctest::Approx(20.0).epsilon(0.05));

  CHECK_THROWS_AS(sample_er_dag(1, 1.0, rng), ParameterError);
  CHECK_THROWS_AS(sample_er_dag(4, 7.0, rng), ParameterError);
  CHECK_THROWS_AS(sample_er_dag(4, 0.0, rng), ParameterError);
}

TEST_CASE("ER sampler is deterministic per seed") {
  Rng a(99), b(99);
  CHECK(sample_er_dag(12, 30.0, a) == sample_er_dag(12, 30.0, b));
}

TEST_CASE("complete DAG at the density limit") {
  Rng rng(1);
  const BinaryDag g = sample_er_dag(6, 15.0, rng);
  CHECK(g.edge_count() == 15);
}

TEST_CASE("brute-force acyclicity on dense supports") {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3, 3);
  m(0, 1) = 0.4;
  m(1, 2) = 0.3;
  CHECK(is_acyclic_bruteforce(m, 1e-6));
  m(2, 0) = 1e-7;
  CHECK(is_acyclic_bruteforce(m, 1e-6));
  m(2, 0) = 1e-3;
  CHECK_FALSE(is_acyclic_bruteforce(m, 1e-6));
  Eigen::MatrixXd self = Eigen::MatrixXd::Zero(2, 2);
  self(1, 1) = 1.0;
  CHECK_FALSE(is_acyclic_bruteforce(self, 1e-6));
}

TEST_CASE("threshold schemes") {
  Eigen::MatrixXd a(3, 3);
  a << 0.9, 0.3, 0.1,
       0.2, 0.0, 0.6,
       0.0, 0.25, 0.0;
  SUBCASE("raw cut is strict and ignores the diagonal") {
    const BinaryDag g = threshold(a, ThresholdScheme::raw(0.25));
    CHECK(g.edges() == std::vector<Edge>{{0, 1}, {1, 2}});
  }
  SUBCASE("variance normalized divides column j by var(x_j)") {
    Eigen::VectorXd var(3);
    var << 1.0, 0.5, 4.0;
    const BinaryDag g = threshold(a, ThresholdScheme::variance_normalized(0.25), var);
    // 0.3/0.5, 0.25/0.5 survive; 0.6/4 does not
    CHECK(g.edges() == std::vector<Edge>{{0, 1}, {2, 1}});
    CHECK_THROWS_AS(threshold(a, ThresholdScheme::variance_normalized(0.25)), ParameterError);
    var(2) = 0.0;
    CHECK_THROWS_AS(threshold(a, ThresholdScheme::variance_normalized(0.25), var), ParameterError);
  }
  SUBCASE("column-sum normalized") {
    const BinaryDag g = threshold(a, ThresholdScheme::column_sum_normalized(0.4));
    // column sums 1.1, 0.55, 0.7
    CHECK(g.edges() == std::vector<Edge>{{0, 1}, {1, 2}, {2, 1}});
  }
  SUBCASE("cutoff zero keeps every positive off-diagonal entry") {
    CHECK(threshold(a, ThresholdScheme::raw(0.0)).edge_count() == 5);
  }
  SUBCASE("invalid inputs") {
    CHECK_THROWS_AS(threshold(Eigen::MatrixXd::Zero(2, 3), ThresholdScheme::raw(0.1)), ParameterError);
    CHECK_THROWS_AS(threshold(-a, ThresholdScheme::raw(0.1)), ParameterError);
    CHECK_THROWS_AS(threshold(a, ThresholdScheme::raw(-1.0)), ParameterError);
  }
}

TEST_CASE("threshold is monotone in the cutoff") {
  Rng rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(6, 6, [&]() { return u(rng); });
  std::size_t last = 100;
  for (double c = 0.0; c <= 1.0; c += 0.05) {
    const std::size_t n = threshold(a, ThresholdScheme::raw(c)).edge_count();
    CHECK(n <= last);
    last = n;
  }
}

TEST_CASE("descendants matrix matches path search") {
  const BinaryDag g(5, {{0, 1}, {1, 2}, {3, 2}, {2, 4}});
  const auto r = descendants_matrix(g);
  std::set<std::pair<int, int>> expect{{0, 1}, {0, 2}, {0, 4}, {1, 2}, {1, 4}, {3, 2}, {3, 4}, {2, 4}};
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) CHECK(r[i][j] == (expect.count({i, j}) == 1));
}
