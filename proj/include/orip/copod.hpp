#ifndef ORIP_COPOD_HPP
#define ORIP_COPOD_HPP

// Copula-based outlier detection (COPOD).
//
// Each feature column gets an empirical left-tail CDF F_l(y) = #{y_n ≤ y}/N and
// right-tail CDF F_r(y) = #{y_n ≥ y}/N. A point's score is
//
//   max( Σ_o −ln l_o,  Σ_o −ln r_o,  Σ_o −ln s_o )
//
// where l_o, r_o are the tail probabilities of its coordinates and s_o picks
// l_o when the column's skewness is negative and r_o otherwise. Probabilities
// are floored at 1/(N+1) before the log so points outside the training
// support score finitely. The outlier threshold is the (1 − contamination)
// quantile of the training scores; a point is flagged when its score is
// strictly above it.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "orip/common.hpp"

namespace orip::copod {

struct Skewness {
  double value = 0.0;
  bool degenerate = false;  // zero variance; value forced to 0
};

/// Sample skewness: third central moment (1/N) over the cube of the
/// (1/(N−1)) standard deviation.
inline Skewness skewness(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) throw InvalidParameter("copod: skewness needs at least two values");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double m2 = 0.0;
  double m3 = 0.0;
  for (double v : values) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  if (m2 == 0.0) return {0.0, true};
  const double third_moment = m3 / static_cast<double>(n);
  const double sd = std::sqrt(m2 / static_cast<double>(n - 1));
  return {third_moment / (sd * sd * sd), false};
}

struct CopodModel {
  std::vector<std::vector<double>> sorted_train;  // one non-decreasing column per feature
  Vector skewness;
  std::vector<bool> degenerate;  // per feature: zero training variance
  std::size_t n_train = 0;
  double threshold = 0.0;
  double contamination = 0.1;

  [[nodiscard]] std::size_t dims() const { return sorted_train.size(); }
  [[nodiscard]] double probability_floor() const { return 1.0 / static_cast<double>(n_train + 1); }
};

inline double ecdf_left(const CopodModel& model, std::size_t dim, double y) {
  const auto& col = model.sorted_train.at(dim);
  const auto count = std::upper_bound(col.begin(), col.end(), y) - col.begin();
  return static_cast<double>(count) / static_cast<double>(model.n_train);
}

inline double ecdf_right(const CopodModel& model, std::size_t dim, double y) {
  const auto& col = model.sorted_train.at(dim);
  const auto below = std::lower_bound(col.begin(), col.end(), y) - col.begin();
  return static_cast<double>(static_cast<std::ptrdiff_t>(col.size()) - below) /
         static_cast<double>(model.n_train);
}

/// Per-channel negative log tail probabilities of one point.
struct ChannelScores {
  double left = 0.0;
  double right = 0.0;
  double skew_corrected = 0.0;

  [[nodiscard]] double combined() const { return std::max({left, right, skew_corrected}); }
};

inline ChannelScores channel_scores(const CopodModel& model, std::span<const double> point) {
  if (point.size() != model.dims()) throw InvalidParameter("copod: point dimension does not match model");
  const double floor = model.probability_floor();
  ChannelScores out;
  for (std::size_t o = 0; o < point.size(); ++o) {
    const double l = -std::log(std::max(ecdf_left(model, o, point[o]), floor));
    const double r = -std::log(std::max(ecdf_right(model, o, point[o]), floor));
    out.left += l;
    out.right += r;
    out.skew_corrected += model.skewness[static_cast<Eigen::Index>(o)] < 0.0 ? l : r;
  }
  return out;
}

inline double score(const CopodModel& model, std::span<const double> point) {
  return channel_scores(model, point).combined();
}

inline double score(const CopodModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& point) {
  std::vector<double> p(point.data(), point.data() + point.size());
  return score(model, std::span<const double>(p));
}

/// Scores every row of `batch` (M × O).
inline Vector score_rows(const CopodModel& model, const Matrix& batch) {
  Vector out(batch.rows());
  std::vector<double> p(static_cast<std::size_t>(batch.cols()));
  for (Eigen::Index i = 0; i < batch.rows(); ++i) {
    for (Eigen::Index o = 0; o < batch.cols(); ++o) p[static_cast<std::size_t>(o)] = batch(i, o);
    out[i] = score(model, std::span<const double>(p));
  }
  return out;
}

inline CopodModel fit_copod(const Matrix& train, double contamination = 0.1) {
  if (!(contamination > 0.0 && contamination < 0.5))
    throw InvalidParameter("copod: contamination must lie in (0, 0.5)");
  if (train.rows() < 2) throw InvalidParameter("copod: need at least two training rows");
  if (train.cols() < 1) throw InvalidParameter("copod: need at least one feature column");
  if (!train.allFinite()) throw InvalidParameter("copod: training data contains non-finite values");

  CopodModel model;
  model.contamination = contamination;
  model.n_train = static_cast<std::size_t>(train.rows());
  model.skewness.resize(train.cols());
  for (Eigen::Index o = 0; o < train.cols(); ++o) {
    std::vector<double> col(train.col(o).data(), train.col(o).data() + train.rows());
    const auto sk = skewness(col);
    model.skewness[o] = sk.value;
    model.degenerate.push_back(sk.degenerate);
    std::sort(col.begin(), col.end());
    model.sorted_train.push_back(std::move(col));
  }
  const Vector train_scores = score_rows(model, train);
  model.threshold = quantile_linear(std::vector<double>(train_scores.data(), train_scores.data() + train_scores.size()),
                                    1.0 - contamination);
  return model;
}

/// True where the score is strictly above the model threshold.
inline std::vector<bool> detect(const CopodModel& model, const Matrix& batch) {
  std::vector<bool> flags(static_cast<std::size_t>(batch.rows()), false);
  if (batch.rows() == 0) return flags;
  const Vector s = score_rows(model, batch);
  for (Eigen::Index i = 0; i < s.size(); ++i) flags[static_cast<std::size_t>(i)] = s[i] > model.threshold;
  return flags;
}

}  // namespace orip::copod

#endif  // ORIP_COPOD_HPP
