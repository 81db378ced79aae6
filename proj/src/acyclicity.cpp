#include "dagma_dce/acyclicity.hpp"

#include <cmath>
#include <limits>

#include "dagma_dce/error.hpp"

namespace dce {

namespace {

constexpr int kPowerIterations = 1000;
constexpr double kPowerTolerance = 1e-10;

struct UnpivotedLu {
  bool pivots_positive = true;
  double log_det = 0.0;
};

// Doolittle elimination without row exchanges. A Z-matrix is a nonsingular
// M-matrix iff every leading principal minor is positive, i.e. iff every pivot is.
UnpivotedLu unpivoted_lu(Eigen::MatrixXd m) {
  UnpivotedLu out;
  const Eigen::Index d = m.rows();
  for (Eigen::Index k = 0; k < d; ++k) {
    const double pivot = m(k, k);
    if (!(pivot > 0.0) || !std::isfinite(pivot)) {
      out.pivots_positive = false;
      return out;
    }
    out.log_det += std::log(pivot);
    if (k + 1 < d) {
      const Eigen::Index rest = d - k - 1;
      m.block(k + 1, k + 1, rest, rest).noalias() -=
          (m.block(k + 1, k, rest, 1) / pivot) * m.block(k, k + 1, 1, rest);
    }
  }
  return out;
}

void spectral_radius_estimate(const Eigen::MatrixXd& w, FeasibilityReport& report) {
  const Eigen::Index d = w.rows();
  if (d == 0) return;
  // Iterate with W + I: same Perron vector, and the shift makes the dominant
  // eigenvalue unique even for periodic (e.g. 2-cycle) supports.
  Eigen::VectorXd v = Eigen::VectorXd::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)));
  int it = 0;
  for (; it < kPowerIterations; ++it) {
    Eigen::VectorXd next = w * v + v;
    const double norm = next.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) break;
    next /= norm;
    const double change = (next - v).cwiseAbs().maxCoeff();
    v = std::move(next);
    if (change < kPowerTolerance) {
      ++it;
      break;
    }
  }
  report.power_iterations = it;
  const Eigen::VectorXd wv = w * v;
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double ratio = v(i) > 0.0 ? wv(i) / v(i) : 0.0;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  report.rho_lower = lo;
  report.rho_upper = hi;
  report.spectral_radius = wv.norm() / v.norm();
}

FeasibilityReport feasibility_from_squared(const Eigen::MatrixXd& w, double s, double* log_det) {
  if (!(s > 0.0)) throw ParameterError("acyclicity: s must be positive");
  if (!w.allFinite()) {
    FeasibilityReport r;
    r.failed_check = "pivot";
    return r;
  }
  const Eigen::Index d = w.rows();
  FeasibilityReport report;
  const Eigen::MatrixXd m = s * Eigen::MatrixXd::Identity(d, d) - w;
  const UnpivotedLu lu = unpivoted_lu(m);
  report.pivots_positive = lu.pivots_positive;
  spectral_radius_estimate(w, report);
  if (!lu.pivots_positive) {
    report.failed_check = "pivot";
  } else if (report.rho_lower >= s) {
    report.failed_check = "spectral_radius";
  } else {
    report.feasible = true;
    if (log_det) *log_det = lu.log_det;
  }
  return report;
}

}  // namespace

FeasibilityReport check_feasible(const Eigen::Ref<const Eigen::MatrixXd>& a, double s) {
  return feasibility_from_squared(a.cwiseProduct(a), s, nullptr);
}

LogDetValue h_dagma_from_squared(const Eigen::Ref<const Eigen::MatrixXd>& w, double s) {
  LogDetValue out;
  double log_det = 0.0;
  out.report = feasibility_from_squared(w, s, &log_det);
  if (out.report.feasible) {
    out.value = -log_det + static_cast<double>(w.rows()) * std::log(s);
  }
  return out;
}

LogDetValue h_dagma(const Eigen::Ref<const Eigen::MatrixXd>& a, double s) {
  return h_dagma_from_squared(a.cwiseProduct(a), s);
}

Eigen::MatrixXd grad_h_dagma_wrt_squared(const Eigen::Ref<const Eigen::MatrixXd>& w, double s) {
  const FeasibilityReport report = feasibility_from_squared(w, s, nullptr);
  if (!report.feasible) {
    throw FeasibilityError("grad_h_dagma: sI - A o A is not an M-matrix (" + report.failed_check +
                           " check failed, rho ~ " + std::to_string(report.spectral_radius) +
                           ", s = " + std::to_string(s) + ")");
  }
  const Eigen::Index d = w.rows();
  const Eigen::MatrixXd m = s * Eigen::MatrixXd::Identity(d, d) - w;
  return m.partialPivLu().inverse().transpose();
}

Eigen::MatrixXd grad_h_dagma(const Eigen::Ref<const Eigen::MatrixXd>& a, double s) {
  return 2.0 * grad_h_dagma_wrt_squared(a.cwiseProduct(a), s).cwiseProduct(a);
}

double h_notears_diag(const Eigen::Ref<const Eigen::MatrixXd>& a) {
  const Eigen::Index d = a.rows();
  const Eigen::MatrixXd w = a.cwiseProduct(a);
  // Scaling and squaring around a truncated Taylor core.
  const double norm = w.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Eigen::MatrixXd x = w / std::ldexp(1.0, squarings);

  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(d, d);
  for (int k = 1; k <= 20; ++k) {
    term = term * x / static_cast<double>(k);
    result += term;
  }
  for (int k = 0; k < squarings; ++k) result = result * result;
  return result.trace() - static_cast<double>(d);
}

}  // namespace dce
