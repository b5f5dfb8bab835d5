#pragma once

// Infinite-forest KeRF regression (Nadaraya-Watson with the closed-form
// forest kernel) and its finite-forest counterpart.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kerf/forest.hpp"
#include "kerf/types.hpp"

namespace kerf {

class KerfModel {
 public:
  /// Validates the training set (non-empty, points in [0,1]^d, finite responses).
  KerfModel(std::vector<SamplePoint> train, KernelParams params, Variant variant);

  const std::vector<SamplePoint>& train() const { return train_; }
  const KernelParams& params() const { return params_; }
  Variant variant() const { return variant_; }
  double global_mean() const { return global_mean_; }

  /// sum_i Y_i K(x, X_i) / sum_i K(x, X_i); the centered variant uses
  /// K^Cen_k(x, X_i), the uniform variant K^Un_k(0, |X_i - x|). Returns the
  /// global training mean when every kernel weight vanishes.
  double predict(std::span<const double> x) const;

  /// Predictions for many queries. Work is split across `threads` workers;
  /// output is independent of the thread count.
  std::vector<double> predict_batch(std::span<const Point> queries, unsigned threads = 1) const;

 private:
  std::vector<SamplePoint> train_;
  KernelParams params_;
  Variant variant_;
  double global_mean_ = 0.0;
};

double kerf_predict(const KerfModel& model, std::span<const double> x);

/// Finite-M KeRF with proximity K_{M,n}; global-mean fallback on an empty neighbourhood.
double kerf_predict_finite(const ForestModel& forest, std::span<const SamplePoint> train,
                           std::span<const double> x);

/// Mean squared difference between predictions and responses. Throws on an empty test set.
double l2_error(const std::function<double(std::span<const double>)>& predictor,
                std::span<const SamplePoint> test);
double l2_error(const KerfModel& model, std::span<const SamplePoint> test, unsigned threads = 1);

/// Versioned JSON document {format_version, variant, k, d, train: [{x, y}]}.
inline constexpr int kModelFormatVersion = 1;
std::string serialize_model(const KerfModel& model);
/// Throws UsageError on malformed documents or an unsupported format_version.
KerfModel deserialize_model(std::string_view json);

}  // namespace kerf
