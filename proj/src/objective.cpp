#include "dagma_dce/objective.hpp"

#include <cmath>
#include <optional>

#include "dagma_dce/error.hpp"

namespace dce {

nlohmann::json to_json(const ScoreBreakdown& s) {
  return {{"mse", s.mse},         {"l1", s.l1},   {"l2", s.l2},
          {"h_value", s.h_value}, {"mu", s.mu},   {"lambda1", s.lambda1},
          {"lambda2", s.lambda2}, {"total", s.total}};
}

WeightedAdjacency dce_adjacency(const JacobianBatch& jac) {
  if (jac.n < 1) throw ParameterError("dce_adjacency: need at least one sample");
  const Eigen::RowVectorXd mean_sq =
      jac.values.colwise().squaredNorm() / static_cast<double>(jac.n);
  WeightedAdjacency a(jac.d, jac.d);
  for (int j = 0; j < jac.d; ++j)
    for (int i = 0; i < jac.d; ++i) a(i, j) = std::sqrt(mean_sq(j * jac.d + i));
  return a;
}

double dce_l1(const JacobianBatch& jac) {
  if (jac.n < 1) throw ParameterError("dce_l1: need at least one sample");
  return jac.values.cwiseAbs().sum() / static_cast<double>(jac.n);
}

JacobianBatch adjacency_cotangent(const WeightedAdjacency& a, const JacobianBatch& jac,
                                  const Eigen::MatrixXd& grad_a) {
  if (a.rows() != jac.d || grad_a.rows() != jac.d || grad_a.cols() != jac.d) {
    throw ParameterError("adjacency_cotangent: shape mismatch");
  }
  JacobianBatch g(jac.n, jac.d);
  const double inv_n = 1.0 / static_cast<double>(jac.n);
  for (int j = 0; j < jac.d; ++j) {
    for (int i = 0; i < jac.d; ++i) {
      if (!(a(i, j) > kAdjacencyKinkEps)) continue;
      const double scale = grad_a(i, j) * inv_n / a(i, j);
      if (scale == 0.0) continue;
      g.values.col(j * jac.d + i) = scale * jac.values.col(j * jac.d + i);
    }
  }
  return g;
}

JacobianBatch l1_cotangent(const JacobianBatch& jac) {
  JacobianBatch g(jac.n, jac.d);
  const double inv_n = 1.0 / static_cast<double>(jac.n);
  g.values = jac.values.unaryExpr([inv_n](double v) {
    return v > 0.0 ? inv_n : (v < 0.0 ? -inv_n : 0.0);
  });
  return g;
}

ObjectiveEvaluation try_evaluate_dce_objective(const SemModel& model, const Eigen::MatrixXd& x,
                                               const ObjectiveWeights& w, bool with_gradient) {
  ObjectiveEvaluation out;
  ScoreBreakdown& sc = out.score;
  sc.mu = w.mu;
  sc.lambda1 = w.lambda1;
  sc.lambda2 = w.lambda2;

  auto pullback = [&](const JacobianBatch& jac) -> std::optional<JacobianBatch> {
    out.adjacency = dce_adjacency(jac);
    const LogDetValue h = h_dagma(out.adjacency, w.s);
    out.feasibility = h.report;
    if (!h.feasible()) return std::nullopt;
    out.feasible = true;
    sc.h_value = *h.value;
    sc.l1 = dce_l1(jac);
    if (!with_gradient) return std::nullopt;
    const Eigen::MatrixXd grad_a = grad_h_dagma(out.adjacency, w.s);
    JacobianBatch cot = adjacency_cotangent(out.adjacency, jac, grad_a);
    if (w.lambda1 != 0.0) cot.values += (w.mu * w.lambda1) * l1_cotangent(jac).values;
    return cot;
  };
  SemModel::FusedEvaluation fused = model.evaluate_fused(x, pullback);
  if (!out.feasible) return out;

  sc.l2 = 0.5 * model.params().squaredNorm();
  sc.mse = fused.mse.mse;
  sc.total = sc.recompute_total();
  if (!with_gradient) return out;
  out.gradient = w.mu * fused.mse.grad + *fused.vjp;
  if (w.lambda2 != 0.0) out.gradient += (w.mu * w.lambda2) * model.params();
  return out;
}

ObjectiveEvaluation evaluate_objective(const SemModel& model, const Eigen::MatrixXd& x,
                                       double lambda1, double mu, double s) {
  ObjectiveEvaluation out =
      try_evaluate_dce_objective(model, x, ObjectiveWeights{lambda1, 0.0, mu, s});
  if (!out.feasible) {
    throw FeasibilityError("evaluate_objective: DCE adjacency outside the M-matrix domain (" +
                           out.feasibility.failed_check + " check, rho ~ " +
                           std::to_string(out.feasibility.spectral_radius) +
                           ", s = " + std::to_string(s) + ")");
  }
  return out;
}

ObjectiveEvaluation try_evaluate_baseline_objective(const MlpSemModel& model,
                                                    const Eigen::MatrixXd& x,
                                                    const ObjectiveWeights& w,
                                                    bool with_gradient) {
  ObjectiveEvaluation out;
  const WeightedAdjacency sq = first_layer_sq_norms(model);
  out.adjacency = sq.cwiseSqrt();
  const LogDetValue h = h_dagma_from_squared(sq, w.s);
  out.feasibility = h.report;
  ScoreBreakdown& sc = out.score;
  sc.mu = w.mu;
  sc.lambda1 = w.lambda1;
  sc.lambda2 = w.lambda2;
  if (!h.feasible()) return out;
  out.feasible = true;
  sc.h_value = *h.value;
  const auto w1 = model.first_layer();
  sc.l1 = w1.cwiseAbs().sum();
  sc.l2 = 0.5 * model.params().squaredNorm();

  MseGradient mse = model.grad_params_mse(x);
  sc.mse = mse.mse;
  sc.total = sc.recompute_total();
  if (!with_gradient) return out;

  // h depends on W1 through the squared norms, so it is smooth at zero weights:
  // dh/dW1[j,k,i] = 2 (sI - sq)^{-T}_{ij} W1[j,k,i].
  const Eigen::MatrixXd dh_dsq = grad_h_dagma_wrt_squared(sq, w.s);
  const int d = model.d();
  const int hdim = model.hidden();
  out.gradient = w.mu * mse.grad;
  if (w.lambda2 != 0.0) out.gradient += (w.mu * w.lambda2) * model.params();
  MlpSemModel::MatrixMap gw1(out.gradient.data() + model.first_layer_offset(),
                             static_cast<Eigen::Index>(d) * hdim, d);
  for (int j = 0; j < d; ++j) {
    for (int k = 0; k < hdim; ++k) {
      const Eigen::Index row = static_cast<Eigen::Index>(j) * hdim + k;
      for (int i = 0; i < d; ++i) {
        const double wv = w1(row, i);
        const double sign = wv > 0.0 ? 1.0 : (wv < 0.0 ? -1.0 : 0.0);
        gw1(row, i) += 2.0 * dh_dsq(i, j) * wv + w.mu * w.lambda1 * sign;
      }
    }
  }
  return out;
}

}  // namespace dce
