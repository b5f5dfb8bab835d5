#include "kerf/kernels.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <string>

#include "kerf/error.hpp"

namespace kerf {

namespace {

constexpr int kMaxIntegerCellDepth = 62;

std::uint64_t cell_index(double x, int k) {
  const double c = std::ceil(std::ldexp(x, k));
  return c < 1.0 ? 1u : static_cast<std::uint64_t>(c);
}

// Row s of the Binomial(s, p) pmf, for s = 0..k, built by the Pascal recurrence.
std::vector<double> binomial_pmf_table(int k, double p) {
  const int w = k + 1;
  std::vector<double> table(static_cast<std::size_t>(w) * w, 0.0);
  table[0] = 1.0;
  const double q = 1.0 - p;
  for (int s = 1; s <= k; ++s) {
    const double* prev = &table[static_cast<std::size_t>(s - 1) * w];
    double* row = &table[static_cast<std::size_t>(s) * w];
    row[0] = q * prev[0];
    for (int t = 1; t <= s; ++t) row[t] = p * prev[t - 1] + q * prev[t];
  }
  return table;
}

void check_profile(std::span<const int> profile, int k) {
  if (k < 0) throw UsageError("tree depth k must be non-negative");
  if (profile.empty()) throw UsageError("match profile must have at least one coordinate");
  for (int m : profile) {
    if (m < 0 || m > k) throw UsageError("match profile entry " + std::to_string(m) + " outside [0,k]");
  }
}

}  // namespace

double dyadic_cell(double x, int t) {
  const double c = std::ceil(std::ldexp(x, t));
  return c < 1.0 ? 1.0 : c;
}

int match_length(double x, double z, int k) {
  if (x == z || k == 0) return k;
  if (k <= kMaxIntegerCellDepth) {
    const std::uint64_t diff = (cell_index(x, k) - 1) ^ (cell_index(z, k) - 1);
    return k - static_cast<int>(std::bit_width(diff));
  }
  for (int t = 1; t <= k; ++t) {
    if (dyadic_cell(x, t) != dyadic_cell(z, t)) return t - 1;
  }
  return k;
}

MatchProfile match_profile(std::span<const double> x, std::span<const double> z,
                           const KernelParams& params) {
  params.validate();
  check_point(x, params.d);
  check_point(z, params.d);
  MatchProfile m(static_cast<std::size_t>(params.d));
  for (int j = 0; j < params.d; ++j) m[j] = match_length(x[j], z[j], params.k);
  return m;
}

double composition_sum(std::span<const double> weights, int k, int d) {
  const std::size_t w = static_cast<std::size_t>(k) + 1;
  if (k < 0 || d < 1 || weights.size() != w * static_cast<std::size_t>(d)) {
    throw UsageError("composition_sum: weight table must be d x (k+1)");
  }
  // acc[s]: expected weight product when s splits are spread uniformly over
  // the coordinates processed so far.
  std::vector<double> acc(weights.begin(), weights.begin() + static_cast<std::ptrdiff_t>(w));
  std::vector<double> next(w);
  for (int j = 1; j < d; ++j) {
    const auto pmf = binomial_pmf_table(k, 1.0 / (j + 1));
    const double* wj = &weights[static_cast<std::size_t>(j) * w];
    for (int s = 0; s <= k; ++s) {
      const double* row = &pmf[static_cast<std::size_t>(s) * w];
      double sum = 0.0;
      for (int t = 0; t <= s; ++t) {
        if (wj[t] != 0.0) sum += row[t] * wj[t] * acc[s - t];
      }
      next[s] = sum;
    }
    acc.swap(next);
  }
  return std::clamp(acc[k], 0.0, 1.0);
}

double centered_kernel_from_profile(std::span<const int> profile, int k) {
  check_profile(profile, k);
  const int d = static_cast<int>(profile.size());
  const std::size_t w = static_cast<std::size_t>(k) + 1;
  std::vector<double> weights(w * d, 0.0);
  for (int j = 0; j < d; ++j) {
    std::fill_n(weights.begin() + static_cast<std::ptrdiff_t>(j * w), profile[j] + 1, 1.0);
  }
  return composition_sum(weights, k, d);
}

double centered_kernel(std::span<const double> x, std::span<const double> z,
                       const KernelParams& params) {
  const auto m = match_profile(x, z, params);
  return centered_kernel_from_profile(m, params.k);
}

mpz_class centered_kernel_count(std::span<const int> profile, int k) {
  check_profile(profile, k);
  const std::size_t w = static_cast<std::size_t>(k) + 1;
  std::vector<std::vector<mpz_class>> binom(w);
  for (int s = 0; s <= k; ++s) {
    binom[s].resize(static_cast<std::size_t>(s) + 1);
    binom[s][0] = 1;
    binom[s][s] = 1;
    for (int t = 1; t < s; ++t) binom[s][t] = binom[s - 1][t - 1] + binom[s - 1][t];
  }
  // count[s]: multinomially weighted number of ways to place s splits on the
  // coordinates seen so far without exceeding any cap.
  std::vector<mpz_class> count(w, 0), next(w);
  for (int s = 0; s <= std::min(profile[0], k); ++s) count[s] = 1;
  for (std::size_t j = 1; j < profile.size(); ++j) {
    for (int s = 0; s <= k; ++s) {
      mpz_class sum = 0;
      for (int t = 0; t <= std::min(s, profile[j]); ++t) {
        mpz_addmul(sum.get_mpz_t(), binom[s][t].get_mpz_t(), count[s - t].get_mpz_t());
      }
      next[s] = std::move(sum);
    }
    count.swap(next);
  }
  return count[k];
}

mpq_class centered_kernel_exact_from_profile(std::span<const int> profile, int k) {
  mpz_class denom;
  mpz_ui_pow_ui(denom.get_mpz_t(), profile.size(), static_cast<unsigned long>(k));
  mpq_class value(centered_kernel_count(profile, k), denom);
  value.canonicalize();
  return value;
}

mpq_class centered_kernel_exact(std::span<const double> x, std::span<const double> z,
                                const KernelParams& params) {
  const auto m = match_profile(x, z, params);
  return centered_kernel_exact_from_profile(m, params.k);
}

double uniform_kernel_factor(double x, int t) {
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("uniform kernel factor needs x in [0,1]");
  if (t < 0) throw UsageError("uniform kernel factor needs t >= 0");
  if (t == 0 || x == 0.0) return 1.0;
  if (x == 1.0) return 0.0;
  // P(N >= t) for N ~ Poisson(lambda), lambda = -ln x, so that P(N = 0) = x.
  const double lambda = -std::log(x);
  double term = x;
  if (static_cast<double>(t) > lambda) {
    for (int j = 1; j <= t; ++j) term *= lambda / j;
    double tail = 0.0;
    for (int j = t; term > 0.0; ++j) {
      tail += term;
      if (term < 1e-18 * tail) break;
      term *= lambda / (j + 1);
    }
    return std::clamp(tail, 0.0, 1.0);
  }
  double head = 0.0;
  for (int j = 0; j < t; ++j) {
    head += term;
    term *= lambda / (j + 1);
  }
  return std::clamp(1.0 - head, 0.0, 1.0);
}

double uniform_kernel(std::span<const double> x, const KernelParams& params) {
  params.validate();
  check_point(x, params.d);
  const std::size_t w = static_cast<std::size_t>(params.k) + 1;
  std::vector<double> weights(w * params.d);
  for (int j = 0; j < params.d; ++j) {
    for (int t = 0; t <= params.k; ++t) weights[j * w + t] = uniform_kernel_factor(x[j], t);
  }
  return composition_sum(weights, params.k, params.d);
}

std::size_t CenteredKernelCache::KeyHash::operator()(const std::vector<int>& key) const noexcept {
  std::size_t h = 0xcbf29ce484222325ull;
  for (int v : key) h = (h ^ static_cast<std::size_t>(v)) * 0x100000001b3ull;
  return h;
}

double CenteredKernelCache::operator()(std::span<const int> profile) {
  scratch_.assign(profile.begin(), profile.end());
  std::sort(scratch_.begin(), scratch_.end());
  if (auto it = table_.find(scratch_); it != table_.end()) return it->second;
  const double value = centered_kernel_from_profile(scratch_, k_);
  table_.emplace(scratch_, value);
  return value;
}

std::vector<double> centered_gram(std::span<const Point> points, const KernelParams& params) {
  params.validate();
  for (const auto& p : points) check_point(p, params.d);
  const std::size_t n = points.size();
  std::vector<double> gram(n * n);
  CenteredKernelCache cache(params.k);
  for (std::size_t i = 0; i < n; ++i) {
    gram[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = cache(match_profile(points[i], points[j], params));
      gram[i * n + j] = v;
      gram[j * n + i] = v;
    }
  }
  return gram;
}

}  // namespace kerf
