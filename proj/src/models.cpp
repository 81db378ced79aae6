#include "dagma_dce/models.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "dagma_dce/error.hpp"
#include "dagma_dce/json_io.hpp"

namespace dce {

using nlohmann::json;

// ---------------------------------------------------------------------------
// SemModel

void SemModel::set_params(const Eigen::VectorXd& theta) {
  if (theta.size() != theta_.size()) {
    throw ParameterError("set_params: expected " + std::to_string(theta_.size()) +
                         " parameters, got " + std::to_string(theta.size()));
  }
  theta_ = theta;
}

void SemModel::check_input(const Eigen::MatrixXd& x) const {
  if (x.cols() != d_) {
    throw ParameterError("model input has " + std::to_string(x.cols()) + " columns, expected " +
                         std::to_string(d_));
  }
}

void SemModel::check_output(const Eigen::MatrixXd& out) const {
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    if (!out.col(j).allFinite()) {
      throw NumericError("model output for node " + std::to_string(j) + " is not finite");
    }
  }
}

MseGradient SemModel::grad_params_mse(const Eigen::MatrixXd& x) const {
  throw UnsupportedModelError("grad_params_mse not implemented for " + family());
}

SemModel::FusedEvaluation SemModel::evaluate_fused(const Eigen::MatrixXd& x,
                                                   const CotangentFn& cotangent) const {
  FusedEvaluation out;
  out.jacobian = jacobian_batch(x);
  out.mse = grad_params_mse(x);
  if (auto cot = cotangent(out.jacobian)) out.vjp = vjp_jacobian_params(x, *cot);
  return out;
}

namespace {

double half_mse(const Eigen::MatrixXd& residual) {
  return 0.5 * residual.squaredNorm() / static_cast<double>(residual.rows());
}

}  // namespace

// ---------------------------------------------------------------------------
// LinearSemModel

LinearSemModel::LinearSemModel(int d) : SemModel(d, static_cast<Eigen::Index>(d) * d) {}

LinearSemModel::LinearSemModel(const Eigen::MatrixXd& beta)
    : LinearSemModel(static_cast<int>(beta.rows())) {
  if (beta.rows() != beta.cols()) throw ParameterError("LinearSemModel: beta must be square");
  Eigen::VectorXd theta(theta_.size());
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j) theta(i * d_ + j) = beta(i, j);
  set_params(theta);
}

void LinearSemModel::zero_diagonal(Eigen::VectorXd& v) const {
  for (int i = 0; i < d_; ++i) v(i * d_ + i) = 0.0;
}

void LinearSemModel::set_params(const Eigen::VectorXd& theta) {
  SemModel::set_params(theta);
  zero_diagonal(theta_);
}

Eigen::MatrixXd LinearSemModel::beta() const {
  Eigen::MatrixXd b(d_, d_);
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j) b(i, j) = theta_(i * d_ + j);
  return b;
}

Eigen::MatrixXd LinearSemModel::forward(const Eigen::MatrixXd& x) const {
  check_input(x);
  Eigen::MatrixXd out = x * beta();
  check_output(out);
  return out;
}

JacobianBatch LinearSemModel::jacobian_batch(const Eigen::MatrixXd& x) const {
  check_input(x);
  const int n = static_cast<int>(x.rows());
  JacobianBatch jac(n, d_);
  const Eigen::MatrixXd b = beta();
  for (int j = 0; j < d_; ++j)
    for (int i = 0; i < d_; ++i) jac.values.col(j * d_ + i).setConstant(b(i, j));
  return jac;
}

Eigen::VectorXd LinearSemModel::vjp_jacobian_params(const Eigen::MatrixXd& x,
                                                    const JacobianBatch& cotangent) const {
  Eigen::VectorXd grad(theta_.size());
  const Eigen::RowVectorXd sums = cotangent.values.colwise().sum();
  for (int j = 0; j < d_; ++j)
    for (int i = 0; i < d_; ++i) grad(i * d_ + j) = sums(j * d_ + i);
  zero_diagonal(grad);
  return grad;
}

MseGradient LinearSemModel::grad_params_mse(const Eigen::MatrixXd& x) const {
  check_input(x);
  const Eigen::MatrixXd residual = x * beta() - x;
  MseGradient out;
  out.mse = half_mse(residual);
  const Eigen::MatrixXd g = x.transpose() * residual / static_cast<double>(x.rows());
  out.grad.resize(theta_.size());
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j) out.grad(i * d_ + j) = g(i, j);
  zero_diagonal(out.grad);
  return out;
}

json LinearSemModel::layout() const { return {{"family", "linear"}, {"d", d_}}; }

std::unique_ptr<SemModel> LinearSemModel::clone() const {
  return std::make_unique<LinearSemModel>(*this);
}

// ---------------------------------------------------------------------------
// MlpSemModel

MlpSemModel::MlpSemModel(int d, MlpOptions options)
    : SemModel(d, static_cast<Eigen::Index>(d) * options.hidden * (d + 1) +
                      (options.bias ? static_cast<Eigen::Index>(d) * (options.hidden + 1) : 0)),
      options_(options) {
  if (d < 1) throw ParameterError("MlpSemModel: d must be positive");
  if (options.hidden < 1) throw ParameterError("MlpSemModel: hidden size must be positive");
}

Eigen::Index MlpSemModel::b1_offset() const { return first_layer_size(); }
Eigen::Index MlpSemModel::w2_offset() const {
  return b1_offset() + (options_.bias ? static_cast<Eigen::Index>(d_) * hidden() : 0);
}
Eigen::Index MlpSemModel::b2_offset() const {
  return w2_offset() + static_cast<Eigen::Index>(d_) * hidden();
}

MlpSemModel::ConstMatrixMap MlpSemModel::first_layer() const {
  return ConstMatrixMap(theta_.data(), static_cast<Eigen::Index>(d_) * hidden(), d_);
}
MlpSemModel::MatrixMap MlpSemModel::first_layer() {
  return MatrixMap(theta_.data(), static_cast<Eigen::Index>(d_) * hidden(), d_);
}

// Without biases the maps point at zero-length segments.
Eigen::Map<const Eigen::VectorXd> MlpSemModel::hidden_bias() const {
  return {theta_.data() + b1_offset(), options_.bias ? static_cast<Eigen::Index>(d_) * hidden() : 0};
}
Eigen::Map<Eigen::VectorXd> MlpSemModel::hidden_bias() {
  return {theta_.data() + b1_offset(), options_.bias ? static_cast<Eigen::Index>(d_) * hidden() : 0};
}
Eigen::Map<const Eigen::VectorXd> MlpSemModel::output_weights() const {
  return {theta_.data() + w2_offset(), static_cast<Eigen::Index>(d_) * hidden()};
}
Eigen::Map<Eigen::VectorXd> MlpSemModel::output_weights() {
  return {theta_.data() + w2_offset(), static_cast<Eigen::Index>(d_) * hidden()};
}
Eigen::Map<const Eigen::VectorXd> MlpSemModel::output_bias() const {
  return {theta_.data() + b2_offset(), options_.bias ? d_ : 0};
}
Eigen::Map<Eigen::VectorXd> MlpSemModel::output_bias() {
  return {theta_.data() + b2_offset(), options_.bias ? d_ : 0};
}

void MlpSemModel::initialize(Rng& rng, double first_layer_scale) {
  theta_.setZero();
  if (first_layer_scale > 0.0) {
    std::uniform_real_distribution<double> u1(-first_layer_scale, first_layer_scale);
    auto w1 = first_layer();
    for (Eigen::Index r = 0; r < w1.rows(); ++r)
      for (Eigen::Index c = 0; c < w1.cols(); ++c) w1(r, c) = u1(rng);
  }
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden()));
  std::uniform_real_distribution<double> u2(-bound, bound);
  auto w2 = output_weights();
  for (Eigen::Index k = 0; k < w2.size(); ++k) w2(k) = u2(rng);
}

MlpSemModel::HiddenState MlpSemModel::hidden_state(const Eigen::MatrixXd& x) const {
  check_input(x);
  HiddenState st;
  st.pre.noalias() = x * first_layer().transpose();
  if (options_.bias) st.pre.rowwise() += hidden_bias().transpose();
  switch (options_.activation) {
    case Activation::Sigmoid:
      st.act = (1.0 + (-st.pre.array()).exp()).inverse().matrix();
      st.slope = (st.act.array() * (1.0 - st.act.array())).matrix();
      break;
    case Activation::Relu:
      st.act = st.pre.cwiseMax(0.0);
      st.slope = (st.pre.array() > 0.0).cast<double>().matrix();
      break;
  }
  return st;
}

Eigen::MatrixXd MlpSemModel::forward(const Eigen::MatrixXd& x) const {
  const HiddenState st = hidden_state(x);
  const int h = hidden();
  const auto w2 = output_weights();
  Eigen::MatrixXd out(x.rows(), d_);
  for (int j = 0; j < d_; ++j) {
    out.col(j).noalias() = st.act.middleCols(j * h, h) * w2.segment(j * h, h);
    if (options_.bias) out.col(j).array() += output_bias()(j);
  }
  check_output(out);
  return out;
}

JacobianBatch MlpSemModel::jacobian_batch(const Eigen::MatrixXd& x) const {
  return jacobian_from(hidden_state(x));
}

JacobianBatch MlpSemModel::jacobian_from(const HiddenState& st) const {
  const int h = hidden();
  const int n = static_cast<int>(st.pre.rows());
  const auto w1 = first_layer();
  const Eigen::MatrixXd p = st.slope * output_weights().asDiagonal();
  JacobianBatch jac(n, d_);
  for (int j = 0; j < d_; ++j) {
    jac.block(j).noalias() = p.middleCols(j * h, h) * w1.middleRows(j * h, h);
  }
  if (!jac.values.allFinite()) throw NumericError("jacobian_batch: non-finite Jacobian entries");
  return jac;
}

// With c[n,j,k] = sum_i W1[j,k,i] G[n,j,i] and J = sum_k w2 act'(z) W1:
//   d/dw2[j,k]     = sum_n act'(z) c
//   d/dW1[j,k,i]   = sum_n w2 act'(z) G[n,j,i] + w2 act''(z) c x_i
//   d/db1[j,k]     = sum_n w2 act''(z) c
Eigen::VectorXd MlpSemModel::vjp_jacobian_params(const Eigen::MatrixXd& x,
                                                 const JacobianBatch& cotangent) const {
  return vjp_from(hidden_state(x), x, cotangent);
}

Eigen::VectorXd MlpSemModel::vjp_from(const HiddenState& st, const Eigen::MatrixXd& x,
                                      const JacobianBatch& cotangent) const {
  if (cotangent.d != d_ || cotangent.n != x.rows()) {
    throw ParameterError("vjp_jacobian_params: cotangent shape does not match input");
  }
  const int h = hidden();
  const Eigen::Index nh = static_cast<Eigen::Index>(d_) * h;
  const auto w1 = first_layer();
  const auto w2 = output_weights();

  Eigen::MatrixXd curvature;  // act''(z)
  switch (options_.activation) {
    case Activation::Sigmoid:
      curvature = (st.slope.array() * (1.0 - 2.0 * st.act.array())).matrix();
      break;
    case Activation::Relu:
      curvature = Eigen::MatrixXd::Zero(st.pre.rows(), st.pre.cols());
      break;
  }

  Eigen::MatrixXd contracted(x.rows(), nh);  // c
  for (int j = 0; j < d_; ++j) {
    contracted.middleCols(j * h, h).noalias() =
        cotangent.block(j) * w1.middleRows(j * h, h).transpose();
  }
  const Eigen::MatrixXd p = st.slope * w2.asDiagonal();
  const Eigen::MatrixXd e = (curvature.array() * contracted.array()).matrix() * w2.asDiagonal();

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta_.size());
  MatrixMap gw1(grad.data(), nh, d_);
  gw1.noalias() = e.transpose() * x;
  for (int j = 0; j < d_; ++j) {
    gw1.middleRows(j * h, h).noalias() += p.middleCols(j * h, h).transpose() * cotangent.block(j);
  }
  if (options_.bias) grad.segment(b1_offset(), nh) = e.colwise().sum().transpose();
  grad.segment(w2_offset(), nh) =
      (st.slope.array() * contracted.array()).colwise().sum().transpose();
  return grad;
}

MseGradient MlpSemModel::grad_params_mse(const Eigen::MatrixXd& x) const {
  return mse_from(hidden_state(x), x);
}

MlpSemModel::FusedEvaluation MlpSemModel::evaluate_fused(const Eigen::MatrixXd& x,
                                                         const CotangentFn& cotangent) const {
  const HiddenState st = hidden_state(x);
  FusedEvaluation out;
  out.jacobian = jacobian_from(st);
  out.mse = mse_from(st, x);
  if (auto cot = cotangent(out.jacobian)) out.vjp = vjp_from(st, x, *cot);
  return out;
}

MseGradient MlpSemModel::mse_from(const HiddenState& st, const Eigen::MatrixXd& x) const {
  const int h = hidden();
  const Eigen::Index nh = static_cast<Eigen::Index>(d_) * h;
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  const auto w2 = output_weights();

  Eigen::MatrixXd fitted(x.rows(), d_);
  for (int j = 0; j < d_; ++j) {
    fitted.col(j).noalias() = st.act.middleCols(j * h, h) * w2.segment(j * h, h);
    if (options_.bias) fitted.col(j).array() += output_bias()(j);
  }
  check_output(fitted);
  const Eigen::MatrixXd residual = fitted - x;

  MseGradient out;
  out.mse = half_mse(residual);
  out.grad = Eigen::VectorXd::Zero(theta_.size());

  // delta[n, jh+k] = r[n,j] w2[j,k] act'(z) / N
  Eigen::MatrixXd delta(x.rows(), nh);
  for (int j = 0; j < d_; ++j) {
    const auto r = residual.col(j);
    out.grad.segment(w2_offset() + j * h, h).noalias() =
        st.act.middleCols(j * h, h).transpose() * r * inv_n;
    delta.middleCols(j * h, h).noalias() = r * w2.segment(j * h, h).transpose() * inv_n;
  }
  delta.array() *= st.slope.array();
  MatrixMap gw1(out.grad.data(), nh, d_);
  gw1.noalias() = delta.transpose() * x;
  if (options_.bias) {
    out.grad.segment(b1_offset(), nh) = delta.colwise().sum().transpose();
    out.grad.segment(b2_offset(), d_) = residual.colwise().sum().transpose() * inv_n;
  }
  return out;
}

json MlpSemModel::layout() const {
  return {{"family", "mlp"},
          {"d", d_},
          {"hidden", hidden()},
          {"activation", options_.activation == Activation::Sigmoid ? "sigmoid" : "relu"},
          {"bias", options_.bias}};
}

std::unique_ptr<SemModel> MlpSemModel::clone() const {
  return std::make_unique<MlpSemModel>(*this);
}

WeightedAdjacency first_layer_sq_norms(const MlpSemModel& model) {
  const int d = model.d();
  const int h = model.hidden();
  const auto w1 = model.first_layer();
  WeightedAdjacency out(d, d);
  for (int j = 0; j < d; ++j) {
    const Eigen::RowVectorXd col_sq = w1.middleRows(j * h, h).colwise().squaredNorm();
    for (int i = 0; i < d; ++i) out(i, j) = col_sq(i);
  }
  return out;
}

WeightedAdjacency first_layer_norms(const SemModel& model) {
  const auto* mlp = dynamic_cast<const MlpSemModel*>(&model);
  if (!mlp) throw UnsupportedModelError("first_layer_norms requires an MLP model, got " + model.family());
  return first_layer_sq_norms(*mlp).cwiseSqrt();
}

double l1_first_layer(const SemModel& model) {
  const auto* mlp = dynamic_cast<const MlpSemModel*>(&model);
  if (!mlp) throw UnsupportedModelError("l1_first_layer requires an MLP model, got " + model.family());
  return mlp->first_layer().cwiseAbs().sum();
}

// ---------------------------------------------------------------------------
// Kernel ridge

double ArdSeKernel::operator()(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                               const Eigen::Ref<const Eigen::RowVectorXd>& y) const {
  return std::exp(-0.5 * ((x - y).array().square() * gamma.transpose().array()).sum());
}

Eigen::RowVectorXd ArdSeKernel::grad_x(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                                       const Eigen::Ref<const Eigen::RowVectorXd>& y) const {
  return -(*this)(x, y) * ((x - y).array() * gamma.transpose().array()).matrix();
}

KernelRidgeSemModel::KernelRidgeSemModel(Eigen::MatrixXd inducing, Eigen::MatrixXd gamma,
                                         double ridge)
    : SemModel(static_cast<int>(inducing.cols()), gamma.rows() * inducing.rows()),
      inducing_(std::move(inducing)),
      gamma_(std::move(gamma)),
      ridge_(ridge) {
  if (gamma_.rows() != d_ || gamma_.cols() != d_) {
    throw ParameterError("KernelRidgeSemModel: gamma must be d x d");
  }
  if ((gamma_.array() < 0.0).any()) throw ParameterError("KernelRidgeSemModel: negative gamma");
}

KernelRidgeSemModel KernelRidgeSemModel::fit(const Eigen::MatrixXd& x, double lengthscale,
                                             double ridge) {
  if (!(lengthscale > 0.0)) throw ParameterError("KernelRidgeSemModel::fit: lengthscale must be positive");
  if (!(ridge > 0.0)) throw ParameterError("KernelRidgeSemModel::fit: ridge must be positive");
  const int d = static_cast<int>(x.cols());
  Eigen::MatrixXd gamma =
      Eigen::MatrixXd::Constant(d, d, 1.0 / (lengthscale * lengthscale));
  gamma.diagonal().setZero();
  KernelRidgeSemModel model(x, gamma, ridge);
  const Eigen::Index m = x.rows();
  Eigen::VectorXd theta(model.num_params());
  for (int j = 0; j < d; ++j) {
    Eigen::MatrixXd k = model.gram(j, x);
    k.diagonal().array() += ridge;
    theta.segment(j * m, m) = k.llt().solve(x.col(j));
  }
  model.set_params(theta);
  return model;
}

Eigen::MatrixXd KernelRidgeSemModel::gram(int j, const Eigen::MatrixXd& x) const {
  const Eigen::VectorXd g = gamma_.row(j).transpose();
  const Eigen::VectorXd sqrt_g = g.cwiseSqrt();
  const Eigen::MatrixXd xs = x * sqrt_g.asDiagonal();
  const Eigen::MatrixXd zs = inducing_ * sqrt_g.asDiagonal();
  Eigen::MatrixXd sq = (-2.0 * xs * zs.transpose()).eval();
  sq.colwise() += xs.rowwise().squaredNorm();
  sq.rowwise() += zs.rowwise().squaredNorm().transpose();
  return (-0.5 * sq.array().max(0.0)).exp().matrix();
}

Eigen::MatrixXd KernelRidgeSemModel::forward(const Eigen::MatrixXd& x) const {
  check_input(x);
  const Eigen::Index m = inducing_.rows();
  Eigen::MatrixXd out(x.rows(), d_);
  for (int j = 0; j < d_; ++j) out.col(j) = gram(j, x) * theta_.segment(j * m, m);
  check_output(out);
  return out;
}

// df_j/dx_i (x_n) = -gamma_ji [x_ni (K b)_n - (K diag(b) Z)_ni]
JacobianBatch KernelRidgeSemModel::jacobian_batch(const Eigen::MatrixXd& x) const {
  check_input(x);
  const Eigen::Index m = inducing_.rows();
  JacobianBatch jac(static_cast<int>(x.rows()), d_);
  for (int j = 0; j < d_; ++j) {
    const Eigen::MatrixXd k = gram(j, x);
    const auto beta = theta_.segment(j * m, m);
    const Eigen::VectorXd kb = k * beta;
    const Eigen::MatrixXd kbz = k * (beta.asDiagonal() * inducing_);
    jac.block(j) = -((x.array().colwise() * kb.array()).matrix() - kbz) *
                   gamma_.row(j).transpose().asDiagonal();
  }
  if (!jac.values.allFinite()) throw NumericError("jacobian_batch: non-finite Jacobian entries");
  return jac;
}

Eigen::VectorXd KernelRidgeSemModel::vjp_jacobian_params(const Eigen::MatrixXd& x,
                                                         const JacobianBatch& cotangent) const {
  check_input(x);
  const Eigen::Index m = inducing_.rows();
  Eigen::VectorXd grad(theta_.size());
  for (int j = 0; j < d_; ++j) {
    const Eigen::MatrixXd k = gram(j, x);
    const Eigen::MatrixXd hg = cotangent.block(j) * gamma_.row(j).transpose().asDiagonal();
    const Eigen::VectorXd u = (hg.array() * x.array()).rowwise().sum();
    const Eigen::MatrixXd kth = k.transpose() * hg;  // M x d
    grad.segment(j * m, m) = -k.transpose() * u + (kth.array() * inducing_.array()).rowwise().sum().matrix();
  }
  return grad;
}

MseGradient KernelRidgeSemModel::grad_params_mse(const Eigen::MatrixXd& x) const {
  check_input(x);
  const Eigen::Index m = inducing_.rows();
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  MseGradient out;
  out.grad.resize(theta_.size());
  double sq = 0.0;
  for (int j = 0; j < d_; ++j) {
    const Eigen::MatrixXd k = gram(j, x);
    const Eigen::VectorXd r = k * theta_.segment(j * m, m) - x.col(j);
    sq += r.squaredNorm();
    out.grad.segment(j * m, m) = k.transpose() * r * inv_n;
  }
  out.mse = 0.5 * sq * inv_n;
  return out;
}

json KernelRidgeSemModel::layout() const {
  return {{"family", "kernel_ridge"},
          {"d", d_},
          {"kernel", "ard_se"},
          {"ridge", ridge_},
          {"gamma", matrix_to_json(gamma_)},
          {"inducing", matrix_to_json(inducing_)}};
}

std::unique_ptr<SemModel> KernelRidgeSemModel::clone() const {
  return std::make_unique<KernelRidgeSemModel>(*this);
}

// ---------------------------------------------------------------------------
// Checkpoints

json save_checkpoint(const SemModel& model) {
  const auto& theta = model.params();
  return {{"layout", model.layout()},
          {"theta", std::vector<double>(theta.data(), theta.data() + theta.size())}};
}

namespace {

std::unique_ptr<SemModel> load_checkpoint_unchecked(const json& j) {
  if (!j.contains("layout") || !j.contains("theta")) {
    throw IoError("checkpoint: missing layout or theta");
  }
  const json& layout = j.at("layout");
  const std::string family = layout.at("family").get<std::string>();
  const int d = layout.at("d").get<int>();
  std::unique_ptr<SemModel> model;
  if (family == "linear") {
    model = std::make_unique<LinearSemModel>(d);
  } else if (family == "mlp") {
    MlpOptions opt;
    opt.hidden = layout.at("hidden").get<int>();
    const std::string act = layout.at("activation").get<std::string>();
    if (act == "sigmoid") {
      opt.activation = Activation::Sigmoid;
    } else if (act == "relu") {
      opt.activation = Activation::Relu;
    } else {
      throw IoError("checkpoint: unknown activation '" + act + "'");
    }
    opt.bias = layout.at("bias").get<bool>();
    model = std::make_unique<MlpSemModel>(d, opt);
  } else if (family == "kernel_ridge") {
    model = std::make_unique<KernelRidgeSemModel>(matrix_from_json(layout.at("inducing"), "checkpoint inducing"),
                                                  matrix_from_json(layout.at("gamma"), "checkpoint gamma"),
                                                  layout.at("ridge").get<double>());
  } else {
    throw IoError("checkpoint: unknown model family '" + family + "'");
  }
  const auto theta = j.at("theta").get<std::vector<double>>();
  model->set_params(Eigen::Map<const Eigen::VectorXd>(theta.data(), static_cast<Eigen::Index>(theta.size())));
  return model;
}

}  // namespace

std::unique_ptr<SemModel> load_checkpoint(const json& j) {
  try {
    return load_checkpoint_unchecked(j);
  } catch (const json::exception& e) {
    throw IoError(std::string("checkpoint: ") + e.what());
  } catch (const ParameterError& e) {
    throw IoError(std::string("checkpoint: ") + e.what());
  }
}

}  // namespace dce
