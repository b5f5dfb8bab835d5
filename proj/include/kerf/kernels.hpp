#pragma once

// Closed-form proximity kernels of the centered and uniform random forests.
//
// Both kernels are expectations over the multinomial law of how k splits are
// spread across the d coordinates:
//
//   K = sum_{|l| = k} k! / (l_1! ... l_d!) d^{-k} prod_j w_j(l_j)
//
// with w_j(t) = 1{t <= m_j} for the centered kernel (m = match profile) and
// w_j(t) = P(Poisson(-ln x_j) >= t) for the uniform kernel at (0, x).
// composition_sum() evaluates the sum with a degree-capped product of
// exponential generating functions, normalised per degree so that every
// intermediate value is itself a probability (O(k^2 d), no overflow).

#include <cstddef>
#include <span>
#include <unordered_map>
#include <vector>

#include <gmpxx.h>

#include "kerf/types.hpp"

namespace kerf {

using MatchProfile = std::vector<int>;

/// Cell index ceil(2^t x) with 0 mapped to cell 1, so cells are (c-1, c] / 2^t.
double dyadic_cell(double x, int t);

/// Per-coordinate number of leading dyadic cells shared by x and z, capped at k.
MatchProfile match_profile(std::span<const double> x, std::span<const double> z,
                           const KernelParams& params);

/// Single-coordinate match length; no validation.
int match_length(double x, double z, int k);

/// weights is a d x (k+1) row-major table, weights[j*(k+1)+t] = w_j(t).
double composition_sum(std::span<const double> weights, int k, int d);

double centered_kernel(std::span<const double> x, std::span<const double> z,
                       const KernelParams& params);
double centered_kernel_from_profile(std::span<const int> profile, int k);

/// Number of compositions weighted by multinomial coefficients that fit under
/// the profile, i.e. d^k times the centered kernel.
mpz_class centered_kernel_count(std::span<const int> profile, int k);
mpq_class centered_kernel_exact(std::span<const double> x, std::span<const double> z,
                                const KernelParams& params);
mpq_class centered_kernel_exact_from_profile(std::span<const int> profile, int k);

/// 1 - x * sum_{j<t} (-ln x)^j / j!, extended by continuity to 1 at x = 0.
double uniform_kernel_factor(double x, int t);

/// K^Un_k(0, x).
double uniform_kernel(std::span<const double> x, const KernelParams& params);

/// Memoised centered kernel keyed by the sorted match profile (the kernel is
/// symmetric in the coordinates). Not thread-safe; use one per thread.
class CenteredKernelCache {
 public:
  explicit CenteredKernelCache(int k) : k_(k) {}
  double operator()(std::span<const int> profile);
  std::size_t size() const { return table_.size(); }

 private:
  struct KeyHash {
    std::size_t operator()(const std::vector<int>& key) const noexcept;
  };
  int k_;
  std::vector<int> scratch_;
  std::unordered_map<std::vector<int>, double, KeyHash> table_;
};

/// Dense row-major n x n centered-kernel Gram matrix.
std::vector<double> centered_gram(std::span<const Point> points, const KernelParams& params);

}  // namespace kerf
