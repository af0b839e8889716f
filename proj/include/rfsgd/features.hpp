#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "rfsgd/error.hpp"
#include "rfsgd/types.hpp"

namespace rfsgd {

/// Activation families with closed-form expected covariance.
/// CosSin is the two-output map [cos(z), sin(z)] behind the Gaussian kernel.
enum class Activation { ReLU, Identity, CosSin };

constexpr Index output_multiplicity(Activation a) { return a == Activation::CosSin ? 2 : 1; }

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::ReLU: return "relu";
    case Activation::Identity: return "identity";
    case Activation::CosSin: return "cossin";
  }
  return "?";
}

inline Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::ReLU;
  if (name == "identity" || name == "linear") return Activation::Identity;
  if (name == "cossin" || name == "gaussian") return Activation::CosSin;
  throw InvalidArgument("unknown activation '" + std::string(name) + "'");
}

/// Frozen random feature map phi(x) = sigma(W x / sqrt(d)) / sqrt(m).
///
/// W is m x d with i.i.d. N(0,1) entries drawn from a seeded mt19937_64.
/// For CosSin the output has p = 2m coordinates ordered as all cosines
/// followed by all sines; every coordinate is still scaled by 1/sqrt(m).
template <typename Scalar>
class FeatureMap {
 public:
  FeatureMap(Seed seed, Index m, Index d, Activation activation)
      : activation_(activation), seed_(seed) {
    if (m <= 0 || d <= 0) throw InvalidArgument("feature map needs m >= 1 and d >= 1");
    Rng rng(seed);
    weights_ = standard_normal<Scalar>(rng, m, d);
  }

  /// Wraps explicit weights (hand-built instances in tests and diagnostics).
  static FeatureMap from_weights(Matrix<Scalar> weights, Activation activation) {
    if (weights.rows() <= 0 || weights.cols() <= 0)
      throw InvalidArgument("feature map needs m >= 1 and d >= 1");
    return FeatureMap(std::move(weights), activation);
  }

  Index num_features() const { return weights_.rows(); }
  Index input_dim() const { return weights_.cols(); }
  Index feature_dim() const { return weights_.rows() * output_multiplicity(activation_); }
  Activation activation() const { return activation_; }
  Seed seed() const { return seed_; }
  const Matrix<Scalar>& weights() const { return weights_; }

  Vector<Scalar> apply(const Eigen::Ref<const Vector<Scalar>>& x) const {
    if (x.size() != input_dim())
      throw DimensionError("apply: input has length " + std::to_string(x.size()) + ", map expects " +
                           std::to_string(input_dim()));
    const Vector<Scalar> z = (weights_ * x) / std::sqrt(Scalar(input_dim()));
    const Index m = num_features();
    const Scalar scale = Scalar(1) / std::sqrt(Scalar(m));
    Vector<Scalar> out(feature_dim());
    switch (activation_) {
      case Activation::ReLU: out = z.cwiseMax(Scalar(0)) * scale; break;
      case Activation::Identity: out = z * scale; break;
      case Activation::CosSin:
        out.head(m) = z.array().cos() * scale;
        out.tail(m) = z.array().sin() * scale;
        break;
    }
    return out;
  }

  /// Row i of the result is apply(row i of X).
  Matrix<Scalar> apply_batch(const Eigen::Ref<const Matrix<Scalar>>& X) const {
    if (X.cols() != input_dim())
      throw DimensionError("apply_batch: input has " + std::to_string(X.cols()) + " columns, map expects " +
                           std::to_string(input_dim()));
    const Index m = num_features();
    const Scalar scale = Scalar(1) / std::sqrt(Scalar(m));
    Matrix<Scalar> z = (X * weights_.transpose()) / std::sqrt(Scalar(input_dim()));
    Matrix<Scalar> out(X.rows(), feature_dim());
    switch (activation_) {
      case Activation::ReLU: out = z.cwiseMax(Scalar(0)) * scale; break;
      case Activation::Identity: out = z * scale; break;
      case Activation::CosSin:
        out.leftCols(m) = z.array().cos() * scale;
        out.rightCols(m) = z.array().sin() * scale;
        break;
    }
    return out;
  }

 private:
  FeatureMap(Matrix<Scalar> weights, Activation activation)
      : weights_(std::move(weights)), activation_(activation), seed_(0) {}

  Matrix<Scalar> weights_;
  Activation activation_;
  Seed seed_;
};

template <typename Scalar = double>
FeatureMap<Scalar> build_feature_map(Seed seed, Index m, Index d, Activation activation) {
  return FeatureMap<Scalar>(seed, m, d, activation);
}

}  // namespace rfsgd
