#ifndef ORIP_GP_REGRESSION_HPP
#define ORIP_GP_REGRESSION_HPP

// Exact Gaussian process regression with a zero prior mean and the
// anisotropic squared-exponential kernel
//
//   k(a, b) = amplitude² · exp(−½ Σ_d (a_d − b_d)² / lengthscale_d²)
//
// plus i.i.d. Gaussian observation noise of standard deviation noise_std.
// Hyperparameters are learned by Adam ascent on the log marginal likelihood
// in log-parameter space.

#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "orip/common.hpp"

namespace orip::gp {

struct Hyperparams {
  double amplitude = 1.0;
  Vector lengthscales = Vector::Constant(2, 0.5);
  double noise_std = 0.1;

  [[nodiscard]] Eigen::Index dim() const { return lengthscales.size(); }

  void validate() const {
    if (!(amplitude > 0.0) || !std::isfinite(amplitude))
      throw InvalidParameter("gp: amplitude must be positive and finite");
    if (!(noise_std > 0.0) || !std::isfinite(noise_std))
      throw InvalidParameter("gp: noise_std must be positive and finite");
    if (lengthscales.size() == 0) throw InvalidParameter("gp: lengthscales must be non-empty");
    for (Eigen::Index d = 0; d < lengthscales.size(); ++d) {
      if (!(lengthscales[d] > 0.0) || !std::isfinite(lengthscales[d]))
        throw InvalidParameter("gp: lengthscales must be positive and finite");
    }
  }

  /// Packed as [log amplitude, log lengthscale_1..D, log noise_std].
  [[nodiscard]] Vector to_log() const {
    Vector theta(dim() + 2);
    theta[0] = std::log(amplitude);
    theta.segment(1, dim()) = lengthscales.array().log();
    theta[dim() + 1] = std::log(noise_std);
    return theta;
  }

  static Hyperparams from_log(const Vector& theta) {
    Hyperparams hp;
    const Eigen::Index d = theta.size() - 2;
    hp.amplitude = std::exp(theta[0]);
    hp.lengthscales = theta.segment(1, d).array().exp();
    hp.noise_std = std::exp(theta[d + 1]);
    return hp;
  }
};

/// Training data: one row of `inputs` per observation.
struct Dataset {
  Matrix inputs;                   // N × D
  Vector targets;                  // N
  std::vector<bool> outlier_flag;  // N, ground-truth injection labels

  [[nodiscard]] Eigen::Index size() const { return targets.size(); }

  void validate() const {
    if (inputs.rows() != targets.size() ||
        static_cast<std::size_t>(targets.size()) != outlier_flag.size())
      throw InvalidParameter("gp: dataset inputs/targets/flags have mismatched lengths");
    if (!inputs.allFinite() || !targets.allFinite())
      throw InvalidParameter("gp: dataset contains non-finite values");
  }
};

inline constexpr double kInitialJitter = 1e-8;
inline constexpr double kMaxJitter = 1e-2;

template <typename A, typename B>
double kernel(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b, const Hyperparams& hp) {
  hp.validate();
  if (a.size() != hp.dim() || b.size() != hp.dim())
    throw InvalidParameter("gp: kernel argument dimension does not match lengthscales");
  double r2 = 0.0;
  for (Eigen::Index d = 0; d < hp.dim(); ++d) {
    const double diff = (a(d) - b(d)) / hp.lengthscales[d];
    r2 += diff * diff;
  }
  return hp.amplitude * hp.amplitude * std::exp(-0.5 * r2);
}

/// Cross-covariance between the rows of `a` (N×D) and the rows of `b` (M×D).
inline Matrix kernel_matrix(const Matrix& a, const Matrix& b, const Hyperparams& hp) {
  const Eigen::Index d = hp.dim();
  if (a.cols() != d || b.cols() != d)
    throw InvalidParameter("gp: input dimension does not match lengthscales");
  const Eigen::RowVectorXd inv_ls = hp.lengthscales.cwiseInverse().transpose();
  const Matrix as = a.array().rowwise() * inv_ls.array();
  const Matrix bs = b.array().rowwise() * inv_ls.array();
  const Vector an = as.rowwise().squaredNorm();
  const Vector bn = bs.rowwise().squaredNorm();
  Matrix r2 = (-2.0 * as * bs.transpose()).colwise() + an;
  r2.rowwise() += bn.transpose();
  const double amp2 = hp.amplitude * hp.amplitude;
  return (amp2 * (-0.5 * r2.array().max(0.0)).exp()).matrix();
}

/// Symmetric training covariance K_x, built entry-wise so that it is exactly
/// symmetric with exact α² on the diagonal.
inline Matrix training_covariance(const Matrix& x, const Hyperparams& hp) {
  const Eigen::Index n = x.rows();
  const Eigen::Index dim = hp.dim();
  if (x.cols() != dim) throw InvalidParameter("gp: input dimension does not match lengthscales");
  const double amp2 = hp.amplitude * hp.amplitude;
  Matrix k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    k(j, j) = amp2;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double r2 = 0.0;
      for (Eigen::Index d = 0; d < dim; ++d) {
        const double diff = (x(i, d) - x(j, d)) / hp.lengthscales[d];
        r2 += diff * diff;
      }
      const double v = amp2 * std::exp(-0.5 * r2);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

/// Immutable posterior state. Safe to share across threads for prediction.
struct FittedGP {
  Hyperparams hyperparams;
  Matrix train_inputs;
  Vector alpha_vector;  // K_y⁻¹ y
  Matrix chol_factor;   // lower L with L Lᵀ = K_x + (σ² + jitter) I
  double jitter = kInitialJitter;

  [[nodiscard]] Eigen::Index size() const { return train_inputs.rows(); }
};

namespace detail {

struct Factorization {
  Matrix kx;
  Matrix lower;
  double jitter;
};

inline Factorization factorize(const Matrix& inputs, const Hyperparams& hp) {
  Factorization f{training_covariance(inputs, hp), Matrix(), kInitialJitter};
  const double noise_var = hp.noise_std * hp.noise_std;
  for (double jitter = kInitialJitter; jitter <= kMaxJitter * (1.0 + 1e-12); jitter *= 10.0) {
    Matrix ky = f.kx;
    ky.diagonal().array() += noise_var + jitter;
    Eigen::LLT<Matrix> llt(ky);
    if (llt.info() == Eigen::Success) {
      f.lower = llt.matrixL();
      f.jitter = jitter;
      return f;
    }
  }
  std::ostringstream msg;
  msg << "gp: covariance not positive definite after jitter escalation up to " << kMaxJitter;
  throw NumericalFailure(msg.str());
}

}  // namespace detail

inline FittedGP fit(const Dataset& data, const Hyperparams& hp) {
  hp.validate();
  data.validate();
  if (data.size() < 1) throw InvalidParameter("gp: fit needs at least one observation");
  auto f = detail::factorize(data.inputs, hp);
  FittedGP model;
  model.hyperparams = hp;
  model.train_inputs = data.inputs;
  model.alpha_vector = f.lower.triangularView<Eigen::Lower>().solve(data.targets);
  f.lower.triangularView<Eigen::Lower>().transpose().solveInPlace(model.alpha_vector);
  model.chol_factor = std::move(f.lower);
  model.jitter = f.jitter;
  return model;
}

struct Prediction {
  Vector mean;
  Vector std;
};

/// Prior predictive (no data): zero mean, amplitude everywhere.
inline Prediction predict_prior(const Hyperparams& hp, const Matrix& queries) {
  hp.validate();
  if (queries.cols() != hp.dim()) throw InvalidParameter("gp: query dimension mismatch");
  return {Vector::Zero(queries.rows()), Vector::Constant(queries.rows(), hp.amplitude)};
}

/// Predictive mean and marginal standard deviation at each query row.
/// `raw_variance`, when given, receives the unclamped diagonal of V.
inline Prediction predict(const FittedGP& model, const Matrix& queries, Vector* raw_variance = nullptr) {
  if (!queries.allFinite()) throw InvalidParameter("gp: non-finite query");
  const Matrix k_star = kernel_matrix(model.train_inputs, queries, model.hyperparams);  // N × M
  Prediction out;
  out.mean = k_star.transpose() * model.alpha_vector;
  const Matrix v = model.chol_factor.triangularView<Eigen::Lower>().solve(k_star);
  const double amp2 = model.hyperparams.amplitude * model.hyperparams.amplitude;
  Vector var = (amp2 - v.colwise().squaredNorm().array()).matrix().transpose();
  if (raw_variance != nullptr) *raw_variance = var;
  out.std = var.array().max(0.0).sqrt();
  return out;
}

/// Log marginal likelihood together with its gradient over the log-packed
/// hyperparameters (see Hyperparams::to_log).
struct LmlResult {
  double value;
  Vector gradient;
};

inline LmlResult lml_and_gradient(const Dataset& data, const Hyperparams& hp, bool want_gradient = true) {
  hp.validate();
  data.validate();
  const Eigen::Index n = data.size();
  if (n < 1) throw InvalidParameter("gp: log marginal likelihood needs at least one observation");
  const auto f = detail::factorize(data.inputs, hp);
  const auto lower = f.lower.triangularView<Eigen::Lower>();
  Vector alpha = lower.solve(data.targets);
  const double data_fit = alpha.squaredNorm();
  lower.transpose().solveInPlace(alpha);
  const double log_det = 2.0 * f.lower.diagonal().array().log().sum();
  LmlResult out;
  out.value = -0.5 * (data_fit + log_det + static_cast<double>(n) * std::log(2.0 * M_PI));
  if (!want_gradient) return out;

  // ∂/∂θ = ½ tr((ααᵀ − K_y⁻¹) ∂K_y/∂θ)
  Matrix l_inv = Matrix::Identity(n, n);
  lower.solveInPlace(l_inv);
  Matrix w = alpha * alpha.transpose();
  w.selfadjointView<Eigen::Lower>().rankUpdate(l_inv.transpose(), -1.0);
  w.triangularView<Eigen::StrictlyUpper>() = w.transpose();

  const Eigen::Index dim = hp.dim();
  out.gradient.resize(dim + 2);
  const Matrix wk = w.cwiseProduct(f.kx);
  out.gradient[0] = wk.sum();  // ∂K/∂log α = 2 K_x
  for (Eigen::Index d = 0; d < dim; ++d) {
    const double inv_l2 = 1.0 / (hp.lengthscales[d] * hp.lengthscales[d]);
    double acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double diff = data.inputs(i, d) - data.inputs(j, d);
        acc += wk(i, j) * diff * diff;
      }
    }
    out.gradient[1 + d] = 0.5 * acc * inv_l2;
  }
  out.gradient[dim + 1] = hp.noise_std * hp.noise_std * w.trace();  // ∂K/∂log σ = 2σ² I
  return out;
}

inline double log_marginal_likelihood(const Dataset& data, const Hyperparams& hp) {
  return lml_and_gradient(data, hp, false).value;
}

inline Vector lml_gradient(const Dataset& data, const Hyperparams& hp) {
  return lml_and_gradient(data, hp, true).gradient;
}

struct AdamSettings {
  double step_size = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptimizeResult {
  Hyperparams hyperparams;
  double log_likelihood = -std::numeric_limits<double>::infinity();
  bool warning = false;  // a step failed numerically; best-so-far returned
  std::string message;
};

/// Runs exactly `iterations` Adam ascent steps on the log marginal likelihood
/// and returns the best hyperparameters seen (never worse than `init`).
inline OptimizeResult optimize_hyperparams(const Dataset& data, const Hyperparams& init, int iterations,
                                           const AdamSettings& adam = {}) {
  if (iterations < 0) throw InvalidParameter("gp: iterations must be non-negative");
  init.validate();
  OptimizeResult best;
  best.hyperparams = init;

  Vector theta = init.to_log();
  Vector m = Vector::Zero(theta.size());
  Vector v = Vector::Zero(theta.size());
  for (int step = 0; step <= iterations; ++step) {
    const Hyperparams hp = Hyperparams::from_log(theta);
    LmlResult eval;
    try {
      eval = lml_and_gradient(data, hp, step < iterations);
    } catch (const NumericalFailure& e) {
      if (step == 0) throw;
      best.warning = true;
      best.message = e.what();
      break;
    }
    if (!std::isfinite(eval.value)) {
      if (step == 0) throw NumericalFailure("gp: non-finite log marginal likelihood at initial hyperparameters");
      best.warning = true;
      best.message = "gp: non-finite log marginal likelihood";
      break;
    }
    if (eval.value > best.log_likelihood) {
      best.log_likelihood = eval.value;
      best.hyperparams = hp;
    }
    if (step == iterations) break;
    const auto& g = eval.gradient;
    const int t = step + 1;
    m = adam.beta1 * m + (1.0 - adam.beta1) * g;
    v = adam.beta2 * v + (1.0 - adam.beta2) * g.cwiseAbs2();
    const Vector m_hat = m / (1.0 - std::pow(adam.beta1, t));
    const Vector v_hat = v / (1.0 - std::pow(adam.beta2, t));
    theta += (adam.step_size * m_hat.array() / (v_hat.array().sqrt() + adam.epsilon)).matrix();
  }
  return best;
}

}  // namespace orip::gp

#endif  // ORIP_GP_REGRESSION_HPP
