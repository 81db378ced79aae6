#pragma once

#include <optional>
#include <string>

#include <Eigen/Dense>

namespace dce {

// What the feasibility test saw for sI - A o A.
struct FeasibilityReport {
  bool feasible = false;
  // All pivots of the unpivoted LU of sI - A o A are positive. For a Z-matrix
  // this is equivalent to being a nonsingular M-matrix.
  bool pivots_positive = false;
  // Power-iteration estimate of rho(A o A) and the Collatz-Wielandt bracket
  // [rho_lower, rho_upper] from the final positive iterate.
  double spectral_radius = 0.0;
  double rho_lower = 0.0;
  double rho_upper = 0.0;
  int power_iterations = 0;
  // "" when feasible, otherwise "pivot" or "spectral_radius" (first check that fired).
  std::string failed_check;
};

struct LogDetValue {
  std::optional<double> value;  // empty when (A, s) is outside the M-matrix domain
  FeasibilityReport report;

  bool feasible() const { return value.has_value(); }
};

FeasibilityReport check_feasible(const Eigen::Ref<const Eigen::MatrixXd>& a, double s);

// -log det(sI - A o A) + d log s.
LogDetValue h_dagma(const Eigen::Ref<const Eigen::MatrixXd>& a, double s);

// Same value from the squared adjacency W = A o A directly.
LogDetValue h_dagma_from_squared(const Eigen::Ref<const Eigen::MatrixXd>& w, double s);

// 2 (sI - A o A)^{-T} o A. Throws FeasibilityError outside the domain.
Eigen::MatrixXd grad_h_dagma(const Eigen::Ref<const Eigen::MatrixXd>& a, double s);

// Derivative of h with respect to W = A o A, i.e. (sI - W)^{-T}.
Eigen::MatrixXd grad_h_dagma_wrt_squared(const Eigen::Ref<const Eigen::MatrixXd>& w, double s);

// trace(exp(A o A)) - d. Reporting only.
double h_notears_diag(const Eigen::Ref<const Eigen::MatrixXd>& a);

}  // namespace dce
