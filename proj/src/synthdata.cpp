#include "dagma_dce/synthdata.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "dagma_dce/error.hpp"
#include "dagma_dce/json_io.hpp"

namespace dce {

using nlohmann::json;

double sample_two_sided_uniform(double low, double high, Rng& rng) {
  std::uniform_real_distribution<double> mag(low, high);
  std::bernoulli_distribution sign(0.5);
  const double v = mag(rng);
  return sign(rng) ? v : -v;
}

SemSpec sample_linear_sem(const BinaryDag& graph, double coef_low, double coef_high, Rng& rng,
                          NoiseSpec noise) {
  if (!(coef_low > 0.0 && coef_low < coef_high)) {
    throw ParameterError("sample_linear_sem: need 0 < coef_low < coef_high");
  }
  const int d = graph.d();
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(d, d);
  for (const auto& [i, j] : graph.edges()) b(i, j) = sample_two_sided_uniform(coef_low, coef_high, rng);
  return {graph, LinearMechanism{std::move(b)}, noise};
}

SemSpec sample_random_mlp_sem(const BinaryDag& graph, int hidden, Rng& rng, NoiseSpec noise,
                              double weight_low, double weight_high) {
  if (hidden < 1) throw ParameterError("sample_random_mlp_sem: hidden must be >= 1");
  RandomMlpMechanism mech;
  mech.hidden = hidden;
  for (int j = 0; j < graph.d(); ++j) {
    MlpNodeWeights node;
    node.parents = graph.parents(j);
    const auto k = static_cast<Eigen::Index>(node.parents.size());
    if (k > 0) {
      node.w1.resize(hidden, k);
      node.w2.resize(hidden);
      for (Eigen::Index r = 0; r < hidden; ++r)
        for (Eigen::Index c = 0; c < k; ++c)
          node.w1(r, c) = sample_two_sided_uniform(weight_low, weight_high, rng);
      for (Eigen::Index r = 0; r < hidden; ++r)
        node.w2(r) = sample_two_sided_uniform(weight_low, weight_high, rng);
    }
    mech.nodes.push_back(std::move(node));
  }
  return {graph, std::move(mech), noise};
}

SemSpec make_gp_additive_sem(const BinaryDag& graph, double lengthscale, NoiseSpec noise) {
  if (!(lengthscale > 0.0)) throw ParameterError("make_gp_additive_sem: lengthscale must be positive");
  return {graph, GpAdditiveMechanism{lengthscale}, noise};
}

Eigen::VectorXd sample_rbf_gp(const Eigen::VectorXd& points, double lengthscale, Rng& rng) {
  const Eigen::Index n = points.size();
  Eigen::MatrixXd gram(n, n);
  const double inv = 1.0 / (lengthscale * lengthscale);
  for (Eigen::Index c = 0; c < n; ++c) {
    for (Eigen::Index r = c; r < n; ++r) {
      const double diff = points(r) - points(c);
      gram(r, c) = std::exp(-0.5 * diff * diff * inv);
    }
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);

  for (double jitter = 1e-8; jitter <= 1e-4 * (1.0 + 1e-9); jitter *= 10.0) {
    Eigen::MatrixXd k = gram.selfadjointView<Eigen::Lower>();
    k.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() == Eigen::Success) {
      Eigen::VectorXd sample = llt.matrixL() * z;
      if (sample.allFinite()) return sample;
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "GP Gram matrix singular after jitter 1e-4 (lengthscale %g)",
                lengthscale);
  throw SimulationError(buf);
}

Eigen::MatrixXd simulate_from_noise(const SemSpec& sem, const Eigen::MatrixXd& noise, Rng& rng) {
  const int d = sem.graph.d();
  if (noise.cols() != d || noise.rows() < 1) throw ParameterError("simulate: noise must be N x d, N >= 1");
  const auto topo = topological_order(sem.graph);
  if (!topo.acyclic()) throw ParameterError("simulate: SEM graph has a cycle");

  const Eigen::Index n = noise.rows();
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, d);
  for (int j : *topo.order) {
    const std::vector<int> parents = sem.graph.parents(j);
    Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
    std::visit(
        [&](const auto& mech) {
          using T = std::decay_t<decltype(mech)>;
          if constexpr (std::is_same_v<T, LinearMechanism>) {
            for (int i : parents) f += mech.coefficients(i, j) * x.col(i);
          } else if constexpr (std::is_same_v<T, GpAdditiveMechanism>) {
            for (int i : parents) {
              try {
                f += sample_rbf_gp(x.col(i), mech.lengthscale, rng);
              } catch (const SimulationError& e) {
                throw SimulationError("node " + std::to_string(j) + ", parent " +
                                      std::to_string(i) + ": " + e.what());
              }
            }
          } else {
            const MlpNodeWeights& node = mech.nodes.at(j);
            if (!node.parents.empty()) {
              Eigen::MatrixXd xp(n, static_cast<Eigen::Index>(node.parents.size()));
              for (std::size_t c = 0; c < node.parents.size(); ++c) xp.col(c) = x.col(node.parents[c]);
              const Eigen::MatrixXd pre = xp * node.w1.transpose();  // n x hidden
              const Eigen::MatrixXd act = (1.0 + (-pre.array()).exp()).inverse().matrix();
              f = act * node.w2;
            }
          }
        },
        sem.mechanism);
    x.col(j) = f + noise.col(j);
    if (!x.col(j).allFinite()) {
      throw SimulationError("simulate: non-finite values at node " + std::to_string(j));
    }
  }
  return x;
}

Dataset simulate(const SemSpec& sem, int n, Rng& rng) {
  if (n < 1) throw ParameterError("simulate: N must be >= 1");
  if (!(sem.noise.sigma > 0.0)) throw ParameterError("simulate: noise sigma must be positive");
  const int d = sem.graph.d();
  std::normal_distribution<double> normal(0.0, sem.noise.sigma);
  Eigen::MatrixXd noise(n, d);
  for (int j = 0; j < d; ++j)
    for (int r = 0; r < n; ++r) noise(r, j) = normal(rng);
  Dataset ds;
  ds.x = simulate_from_noise(sem, noise, rng);
  ds.sem_hash = sem_hash(sem);
  return ds;
}

Eigen::VectorXd column_variances(const Eigen::MatrixXd& x) {
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const double denom = x.rows() > 1 ? static_cast<double>(x.rows() - 1) : 1.0;
  return ((x.rowwise() - mean).colwise().squaredNorm() / denom).transpose();
}

Eigen::MatrixXd standardize(const Eigen::MatrixXd& x) {
  const Eigen::RowVectorXd mean = x.colwise().mean();
  Eigen::RowVectorXd sd = column_variances(x).cwiseSqrt().transpose();
  for (Eigen::Index j = 0; j < sd.size(); ++j)
    if (!(sd(j) > 0.0)) sd(j) = 1.0;
  return (x.rowwise() - mean).array().rowwise() / sd.array();
}

json to_json(const SemSpec& sem) {
  json mech = std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearMechanism>) {
          return {{"type", "linear"}, {"coefficients", matrix_to_json(m.coefficients)}};
        } else if constexpr (std::is_same_v<T, GpAdditiveMechanism>) {
          return {{"type", "gp"}, {"lengthscale", m.lengthscale}, {"signal_variance", 1.0}};
        } else {
          json nodes = json::array();
          for (const auto& node : m.nodes) {
            nodes.push_back({{"parents", node.parents},
                             {"w1", matrix_to_json(node.w1)},
                             {"w2", vector_to_json(node.w2)}});
          }
          return {{"type", "mlp"}, {"hidden", m.hidden}, {"activation", "sigmoid"},
                  {"nodes", std::move(nodes)}};
        }
      },
      sem.mechanism);
  return {{"graph", to_json(sem.graph)},
          {"mechanism", std::move(mech)},
          {"noise", {{"type", "gaussian"}, {"sigma", sem.noise.sigma}}}};
}

std::string sem_hash(const SemSpec& sem) {
  // FNV-1a over the canonical JSON dump.
  const std::string s = to_json(sem).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace dce
