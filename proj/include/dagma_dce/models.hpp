#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "dagma_dce/graphs.hpp"

namespace dce {

// Per-sample Jacobians stored as an N x (d*d) matrix; column j*d + i holds
// df_j/dx_i, so block(j) is the N x d gradient of regressor j.
struct JacobianBatch {
  int n = 0;
  int d = 0;
  Eigen::MatrixXd values;

  JacobianBatch() = default;
  JacobianBatch(int samples, int dims)
      : n(samples), d(dims), values(Eigen::MatrixXd::Zero(samples, dims * dims)) {}

  double operator()(int sample, int j, int i) const { return values(sample, j * d + i); }
  double& operator()(int sample, int j, int i) { return values(sample, j * d + i); }
  auto block(int j) { return values.middleCols(j * d, d); }
  auto block(int j) const { return values.middleCols(j * d, d); }
};

struct MseGradient {
  double mse = 0.0;
  Eigen::VectorXd grad;
};

// A d-output regression model x -> (f_1(x), ..., f_d(x)) with a flat
// parameter vector. All evaluation methods are const and may run concurrently.
class SemModel {
 public:
  virtual ~SemModel() = default;

  int d() const { return d_; }
  const Eigen::VectorXd& params() const { return theta_; }
  virtual void set_params(const Eigen::VectorXd& theta);
  Eigen::Index num_params() const { return theta_.size(); }

  // Column j of the result is f_j applied row-wise.
  virtual Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const = 0;
  virtual JacobianBatch jacobian_batch(const Eigen::MatrixXd& x) const = 0;
  // Gradient over theta of <G, J(theta, X)>.
  virtual Eigen::VectorXd vjp_jacobian_params(const Eigen::MatrixXd& x,
                                              const JacobianBatch& cotangent) const = 0;
  // mse = 1/(2N) sum_n ||x_n - f(x_n)||^2 and its gradient.
  virtual MseGradient grad_params_mse(const Eigen::MatrixXd& x) const;

  struct FusedEvaluation {
    JacobianBatch jacobian;
    MseGradient mse;
    std::optional<Eigen::VectorXd> vjp;
  };
  // Maps the Jacobian to the cotangent to pull back, or nullopt to skip the pullback.
  using CotangentFn = std::function<std::optional<JacobianBatch>(const JacobianBatch&)>;
  // Jacobian, MSE gradient and pullback in one pass; subclasses share intermediates.
  virtual FusedEvaluation evaluate_fused(const Eigen::MatrixXd& x, const CotangentFn& cotangent) const;

  virtual std::string family() const = 0;
  // Layout descriptor written in checkpoint headers.
  virtual nlohmann::json layout() const = 0;
  virtual std::unique_ptr<SemModel> clone() const = 0;

 protected:
  SemModel(int d, Eigen::Index num_params) : d_(d), theta_(Eigen::VectorXd::Zero(num_params)) {}
  void check_input(const Eigen::MatrixXd& x) const;
  void check_output(const Eigen::MatrixXd& out) const;

  int d_;
  Eigen::VectorXd theta_;
};

// Linear SEM x_j = sum_i beta_ij x_i. theta is beta in row-major order; the
// diagonal is pinned to zero.
class LinearSemModel final : public SemModel {
 public:
  explicit LinearSemModel(int d);
  explicit LinearSemModel(const Eigen::MatrixXd& beta);

  Eigen::MatrixXd beta() const;
  void set_params(const Eigen::VectorXd& theta) override;

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const override;
  JacobianBatch jacobian_batch(const Eigen::MatrixXd& x) const override;
  Eigen::VectorXd vjp_jacobian_params(const Eigen::MatrixXd& x,
                                      const JacobianBatch& cotangent) const override;
  MseGradient grad_params_mse(const Eigen::MatrixXd& x) const override;

  std::string family() const override { return "linear"; }
  nlohmann::json layout() const override;
  std::unique_ptr<SemModel> clone() const override;

 private:
  void zero_diagonal(Eigen::VectorXd& v) const;
};

enum class Activation { Sigmoid, Relu };

struct MlpOptions {
  int hidden = 10;
  Activation activation = Activation::Sigmoid;
  bool bias = true;
};

// d parallel one-hidden-layer regressors, each reading all d inputs:
//   f_j(x) = sum_k w2[j,k] act(sum_i W1[j,k,i] x_i + b1[j,k]) + b2[j].
//
// theta layout, in order:
//   W1  d*h*d   row (j*h + k), column i of a (d*h) x d row-major matrix
//   b1  d*h     (only when bias)
//   w2  d*h
//   b2  d       (only when bias)
class MlpSemModel final : public SemModel {
 public:
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using ConstMatrixMap = Eigen::Map<const RowMajor>;
  using MatrixMap = Eigen::Map<RowMajor>;

  MlpSemModel(int d, MlpOptions options = {});

  const MlpOptions& options() const { return options_; }
  int hidden() const { return options_.hidden; }

  // Hidden weights uniform in [-init_scale, init_scale], output weights
  // uniform in +-1/sqrt(hidden), biases zero.
  void initialize(Rng& rng, double first_layer_scale = 0.0);

  ConstMatrixMap first_layer() const;
  MatrixMap first_layer();
  Eigen::Map<const Eigen::VectorXd> hidden_bias() const;
  Eigen::Map<Eigen::VectorXd> hidden_bias();
  Eigen::Map<const Eigen::VectorXd> output_weights() const;
  Eigen::Map<Eigen::VectorXd> output_weights();
  Eigen::Map<const Eigen::VectorXd> output_bias() const;
  Eigen::Map<Eigen::VectorXd> output_bias();

  Eigen::Index first_layer_offset() const { return 0; }
  Eigen::Index first_layer_size() const { return static_cast<Eigen::Index>(d_) * hidden() * d_; }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const override;
  JacobianBatch jacobian_batch(const Eigen::MatrixXd& x) const override;
  Eigen::VectorXd vjp_jacobian_params(const Eigen::MatrixXd& x,
                                      const JacobianBatch& cotangent) const override;
  MseGradient grad_params_mse(const Eigen::MatrixXd& x) const override;
  FusedEvaluation evaluate_fused(const Eigen::MatrixXd& x, const CotangentFn& cotangent) const override;

  std::string family() const override { return "mlp"; }
  nlohmann::json layout() const override;
  std::unique_ptr<SemModel> clone() const override;

 private:
  struct HiddenState {
    Eigen::MatrixXd pre;    // N x dh pre-activations
    Eigen::MatrixXd act;    // activations
    Eigen::MatrixXd slope;  // act'(pre)
  };
  HiddenState hidden_state(const Eigen::MatrixXd& x) const;
  JacobianBatch jacobian_from(const HiddenState& st) const;
  Eigen::VectorXd vjp_from(const HiddenState& st, const Eigen::MatrixXd& x,
                           const JacobianBatch& cotangent) const;
  MseGradient mse_from(const HiddenState& st, const Eigen::MatrixXd& x) const;
  Eigen::Index b1_offset() const;
  Eigen::Index w2_offset() const;
  Eigen::Index b2_offset() const;

  MlpOptions options_;
};

// Entry (i, j) is the L2 norm of the first-layer weights regressor j applies to input i.
WeightedAdjacency first_layer_norms(const SemModel& model);
// Same matrix squared entrywise (no square root).
WeightedAdjacency first_layer_sq_norms(const MlpSemModel& model);
double l1_first_layer(const SemModel& model);

// exp(-1/2 sum_i gamma_i (x_i - y_i)^2). gamma_i = 1/lengthscale_i^2; a zero
// gamma makes the kernel ignore input i.
struct ArdSeKernel {
  Eigen::VectorXd gamma;

  double operator()(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                    const Eigen::Ref<const Eigen::RowVectorXd>& y) const;
  // Gradient with respect to x.
  Eigen::RowVectorXd grad_x(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                            const Eigen::Ref<const Eigen::RowVectorXd>& y) const;
};

// Representer-form regressors f_j(x) = sum_m beta_jm k_j(x, z_m) over a shared
// set of inducing inputs z. theta is beta (d x M) in row-major order.
class KernelRidgeSemModel final : public SemModel {
 public:
  // gamma(j, i) is regressor j's inverse squared lengthscale for input i.
  KernelRidgeSemModel(Eigen::MatrixXd inducing, Eigen::MatrixXd gamma, double ridge);

  // Inducing points are the training rows; each regressor ignores its own
  // input and uses lengthscale `lengthscale` on the others. Coefficients solve
  // (K_j + ridge I) beta_j = x_j.
  static KernelRidgeSemModel fit(const Eigen::MatrixXd& x, double lengthscale, double ridge);

  const Eigen::MatrixXd& inducing() const { return inducing_; }
  const Eigen::MatrixXd& gamma() const { return gamma_; }
  double ridge() const { return ridge_; }
  ArdSeKernel kernel(int j) const { return {gamma_.row(j).transpose()}; }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const override;
  JacobianBatch jacobian_batch(const Eigen::MatrixXd& x) const override;
  Eigen::VectorXd vjp_jacobian_params(const Eigen::MatrixXd& x,
                                      const JacobianBatch& cotangent) const override;
  MseGradient grad_params_mse(const Eigen::MatrixXd& x) const override;

  std::string family() const override { return "kernel_ridge"; }
  nlohmann::json layout() const override;
  std::unique_ptr<SemModel> clone() const override;

 private:
  Eigen::MatrixXd gram(int j, const Eigen::MatrixXd& x) const;  // N x M

  Eigen::MatrixXd inducing_;
  Eigen::MatrixXd gamma_;
  double ridge_;
};

// Checkpoint: {"layout": {...}, "theta": [...]}. Round-trips bit-exactly.
nlohmann::json save_checkpoint(const SemModel& model);
std::unique_ptr<SemModel> load_checkpoint(const nlohmann::json& j);

}  // namespace dce
