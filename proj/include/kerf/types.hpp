#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kerf {

/// Tree depth k and feature dimension d shared by every kernel and forest.
struct KernelParams {
  int k = 0;
  int d = 1;

  /// Throws UsageError unless k >= 0 and d >= 1.
  void validate() const;
  friend bool operator==(const KernelParams&, const KernelParams&) = default;
};

enum class Variant { centered, uniform };

std::string_view to_string(Variant v);
/// Accepts "centered" or "uniform"; throws UsageError otherwise.
Variant parse_variant(std::string_view name);

using Point = std::vector<double>;

struct SamplePoint {
  Point x;
  double y = 0.0;
};

/// Throws DomainError if any coordinate is outside [0,1] (or NaN), UsageError on a length mismatch.
void check_point(std::span<const double> x, int d);

/// Validates every sample: length d, coordinates in [0,1], finite response. Throws UsageError if empty.
void check_samples(std::span<const SamplePoint> samples, int d);

}  // namespace kerf
