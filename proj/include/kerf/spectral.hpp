#pragma once

// Exact harmonic analysis of the centered kernel on G = Z_2^{kd}.
//
// A point of G is a k x d binary matrix x = (x^1 | ... | x^d); column j holds
// the first k dyadic digits of coordinate j. The kernel is translation
// invariant, K(a, b) = phi(a - b), and its spectral measure mu = inverse
// transform of phi is non-negative with sparse support E_K.
//
// Packed layout: entry (row i, column j), 0-based, is bit j*k + i of a 64-bit
// word, so each column occupies k consecutive bits with its first digit lowest.
// Characters are gamma_a(x) = (-1)^{popcount(a & x)}.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <gmpxx.h>

#include "kerf/types.hpp"

namespace kerf {

/// Largest kd for dense functions on G (2^{kd} exact values).
inline constexpr int kMaxDenseBits = 24;
/// Largest kd for the full |G| x |G| reconstructed kernel table.
inline constexpr int kMaxTableBits = 10;
/// Largest number of (composition, free-digit) pairs visited by the closed-form measure.
inline constexpr std::uint64_t kMaxSparseWork = std::uint64_t{1} << 26;
/// Largest |E_K| for the quadratic translation-closure search.
inline constexpr std::size_t kMaxMultiplierSupport = std::size_t{1} << 14;

class BitMatrix {
 public:
  BitMatrix(KernelParams params, std::uint64_t packed);
  /// Columns top-to-bottom separated by '|', e.g. "10|00" for k=2, d=2.
  static BitMatrix parse(KernelParams params, std::string_view text);

  const KernelParams& params() const { return params_; }
  std::uint64_t packed() const { return packed_; }
  bool bit(int row, int column) const;
  std::uint64_t column(int j) const;
  /// 1-based row of the lowest set digit in column j, 0 for a zero column.
  int column_height(int j) const;
  /// Leading zero digits of column j (k for a zero column).
  int leading_zeros(int j) const;
  std::string to_string() const;

  friend bool operator==(const BitMatrix& a, const BitMatrix& b) {
    return a.params_ == b.params_ && a.packed_ == b.packed_;
  }

 private:
  KernelParams params_;
  std::uint64_t packed_;
};

/// Exact rational function on a group of order 2^bits, stored as integer
/// numerators over one shared positive denominator.
class GroupFunction {
 public:
  explicit GroupFunction(int bits);
  /// Throws UsageError unless values.size() is a power of two.
  static GroupFunction from_values(const std::vector<mpq_class>& values);

  int bits() const { return bits_; }
  std::size_t size() const { return numerators_.size(); }
  mpq_class value(std::size_t index) const;
  std::vector<mpq_class> values() const;
  bool vanishes_at(std::size_t index) const { return numerators_[index] == 0; }

  std::vector<mpz_class>& numerators() { return numerators_; }
  const std::vector<mpz_class>& numerators() const { return numerators_; }
  const mpz_class& denominator() const { return denominator_; }
  void set_denominator(mpz_class d);

 private:
  int bits_;
  std::vector<mpz_class> numerators_;
  mpz_class denominator_ = 1;
};

/// phi(a) = K(a, 0): multinomial mass of compositions l with the first l_j
/// digits of every column of a equal to zero.
mpq_class phi(const BitMatrix& a);
/// Dense phi over G.
GroupFunction phi_table(const KernelParams& params);

/// f^(a) = sum_x f(x) (-1)^{a.x}, by an in-place Walsh-Hadamard butterfly.
GroupFunction forward_transform(const GroupFunction& f);
/// f-check(x) = 2^{-bits} sum_a f(a) (-1)^{a.x}.
GroupFunction inverse_transform(const GroupFunction& f);

class SpectralMeasure {
 public:
  SpectralMeasure(KernelParams params, std::map<std::uint64_t, mpz_class> weights, mpz_class denominator);

  const KernelParams& params() const { return params_; }
  /// mu(x); zero off the support.
  mpq_class operator()(std::uint64_t packed) const;
  /// Support in increasing packed order, with integer weights over denominator().
  const std::map<std::uint64_t, mpz_class>& weights() const { return weights_; }
  const mpz_class& denominator() const { return denominator_; }
  std::size_t support_size() const { return weights_.size(); }
  mpq_class total_mass() const;

 private:
  KernelParams params_;
  std::map<std::uint64_t, mpz_class> weights_;
  mpz_class denominator_;
};

/// Closed form: mu(x) = (2^k d^k)^{-1} sum over compositions l with column j
/// of x vanishing below row l_j of the multinomial k!/(l_1!...l_d!).
SpectralMeasure spectral_measure(const KernelParams& params);

/// True iff some composition l leaves x^j_i = 0 for all i > l_j, i.e. the column
/// heights of x sum to at most k.
bool in_support(const BitMatrix& x);
/// E_K in increasing packed order, enumerated by column heights (no duplicates).
std::vector<BitMatrix> support_E_K(const KernelParams& params);

/// k-th coefficient of (1/(1-z)) ((1-z)/(1-2z))^d by truncated big-integer series arithmetic.
mpz_class rkhs_dimension(const KernelParams& params);
/// sum_m sum_lambda 2^{m-lambda} C(d, lambda) C(m-1, lambda-1).
mpz_class dimension_double_sum(const KernelParams& params);
/// 2^{k-d+1} k^{d-1} / (d-1)!.
double dimension_asymptotic(const KernelParams& params);
/// rkhs_dimension / dimension_asymptotic, evaluated in log space.
double dimension_ratio(const KernelParams& params);

/// ||sum_b c(b) K_b||^2 = |G|^2 sum_x mu(x) |c-check(x)|^2.
mpq_class rkhs_norm_squared(const GroupFunction& coefficients, const KernelParams& params);

/// sum_{x in E_K} e_x(a) e_x(b) = sum_x mu(x) (-1)^{x.(a-b)} for every pair (a, b).
class KernelTable {
 public:
  KernelTable(int bits, std::vector<mpz_class> numerators, mpz_class denominator);
  std::size_t size() const { return std::size_t{1} << bits_; }
  mpq_class at(std::size_t a, std::size_t b) const;
  const mpz_class& numerator(std::size_t a, std::size_t b) const { return numerators_[a * size() + b]; }
  const mpz_class& denominator() const { return denominator_; }

 private:
  int bits_;
  std::vector<mpz_class> numerators_;
  mpz_class denominator_;
};
KernelTable onb_reconstruct(const KernelParams& params);

/// psi lies in H_K iff its inverse transform vanishes off E_K.
bool membership_test(const GroupFunction& psi, const KernelParams& params);

/// True iff every nonzero a in E_K has some x in E_K with x + a outside E_K,
/// which rules out nonconstant multipliers. False when E_K is closed under
/// those translations (d = 1, where E_K = G).
bool multiplier_check(const KernelParams& params);

struct SpectralReport {
  KernelParams params;
  mpz_class dimension;
  std::size_t support_size = 0;
  mpq_class mu_sum;
  bool positive = false;
  /// "inverse_transform" when checked against the dense transform, else "closed_form".
  std::string positivity_check;
  bool closed_form_matches_transform = false;
  double asymptotic_ratio = 0.0;
  std::optional<bool> multiplier_obstruction;
  /// mu value -> number of support points with that value.
  std::map<mpq_class, std::size_t> histogram;
};

SpectralReport spectral_report(const KernelParams& params);
std::string report_to_json(const SpectralReport& report);

}  // namespace kerf
