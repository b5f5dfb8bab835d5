#include "kerf/types.hpp"

#include <cmath>
#include <string>

#include "kerf/error.hpp"

namespace kerf {

void KernelParams::validate() const {
  if (k < 0) throw UsageError("tree depth k must be non-negative, got " + std::to_string(k));
  if (d < 1) throw UsageError("dimension d must be at least 1, got " + std::to_string(d));
}

std::string_view to_string(Variant v) {
  return v == Variant::centered ? "centered" : "uniform";
}

Variant parse_variant(std::string_view name) {
  if (name == "centered") return Variant::centered;
  if (name == "uniform") return Variant::uniform;
  throw UsageError("unknown variant '" + std::string(name) + "' (expected centered or uniform)");
}

void check_point(std::span<const double> x, int d) {
  if (static_cast<int>(x.size()) != d) {
    throw UsageError("point has " + std::to_string(x.size()) + " coordinates, expected " +
                     std::to_string(d));
  }
  for (double v : x) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw DomainError("coordinate " + std::to_string(v) + " is outside [0,1]");
    }
  }
}

void check_samples(std::span<const SamplePoint> samples, int d) {
  if (samples.empty()) throw UsageError("training set is empty");
  for (const auto& s : samples) {
    check_point(s.x, d);
    if (!std::isfinite(s.y)) throw DomainError("response must be finite");
  }
}

}  // namespace kerf
