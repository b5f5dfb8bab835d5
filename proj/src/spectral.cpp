#include "kerf/spectral.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <numeric>
#include <unordered_map>

#include "json.hpp"
#include "kerf/error.hpp"
#include "kerf/kernels.hpp"

namespace kerf {

namespace {

constexpr int kMaxPackedBits = 63;
// Dense consistency check inside spectral_report.
constexpr int kReportDenseBits = 20;

int group_bits(const KernelParams& params) {
  params.validate();
  if (params.k * params.d > kMaxPackedBits) {
    throw GuardError("bit matrices are packed in 64 bits; need k*d <= " +
                     std::to_string(kMaxPackedBits) + ", got " + std::to_string(params.k * params.d));
  }
  return params.k * params.d;
}

void check_dense(int bits, const char* what, int limit = kMaxDenseBits) {
  if (bits > limit) {
    throw GuardError(std::string(what) + " enumerates all 2^{kd} group elements; need k*d <= " +
                     std::to_string(limit) + ", got " + std::to_string(bits));
  }
}

std::uint64_t column_mask(int k) { return k == 0 ? 0 : (~std::uint64_t{0} >> (64 - k)); }

int height_sum(std::uint64_t packed, const KernelParams& params) {
  const std::uint64_t mask = column_mask(params.k);
  int total = 0;
  for (int j = 0; j < params.d; ++j) total += std::bit_width((packed >> (j * params.k)) & mask);
  return total;
}

bool packed_in_support(std::uint64_t packed, const KernelParams& params) {
  return height_sum(packed, params) <= params.k;
}

void walsh_hadamard(std::vector<mpz_class>& a) {
  const std::size_t n = a.size();
  if (!std::has_single_bit(n)) throw UsageError("transform size must be a power of two");
  mpz_class tmp;
  for (std::size_t len = 1; len < n; len <<= 1) {
    for (std::size_t i = 0; i < n; i += 2 * len) {
      for (std::size_t j = i; j < i + len; ++j) {
        mpz_set(tmp.get_mpz_t(), a[j + len].get_mpz_t());
        mpz_sub(a[j + len].get_mpz_t(), a[j].get_mpz_t(), tmp.get_mpz_t());
        mpz_add(a[j].get_mpz_t(), a[j].get_mpz_t(), tmp.get_mpz_t());
      }
    }
  }
}

mpz_class power(unsigned long base, unsigned long exponent) {
  mpz_class r;
  mpz_ui_pow_ui(r.get_mpz_t(), base, exponent);
  return r;
}

mpz_class binomial(unsigned long n, unsigned long r) {
  mpz_class b;
  mpz_bin_uiui(b.get_mpz_t(), n, r);
  return b;
}

mpz_class factorial(unsigned long n) {
  mpz_class f;
  mpz_fac_ui(f.get_mpz_t(), n);
  return f;
}

// Calls visit(l) for every composition l of k into d non-negative parts.
void for_each_composition(int k, int d, const std::function<void(const std::vector<int>&)>& visit) {
  std::vector<int> l(d, 0);
  std::function<void(int, int)> rec = [&](int j, int left) {
    if (j == d - 1) {
      l[j] = left;
      visit(l);
      return;
    }
    for (int t = 0; t <= left; ++t) {
      l[j] = t;
      rec(j + 1, left - t);
    }
  };
  rec(0, k);
}

using Series = std::vector<mpz_class>;

Series multiply_truncated(const Series& p, const Series& q, std::size_t terms) {
  Series r(terms, 0);
  for (std::size_t i = 0; i < std::min(terms, p.size()); ++i) {
    if (p[i] == 0) continue;
    for (std::size_t j = 0; j < std::min(terms - i, q.size()); ++j) {
      mpz_addmul(r[i + j].get_mpz_t(), p[i].get_mpz_t(), q[j].get_mpz_t());
    }
  }
  return r;
}

Series power_truncated(Series base, int exponent, std::size_t terms) {
  Series result(terms, 0);
  result[0] = 1;
  while (exponent > 0) {
    if (exponent & 1) result = multiply_truncated(result, base, terms);
    exponent >>= 1;
    if (exponent > 0) base = multiply_truncated(base, base, terms);
  }
  return result;
}

}  // namespace

// ---- BitMatrix ----------------------------------------------------------

BitMatrix::BitMatrix(KernelParams params, std::uint64_t packed) : params_(params), packed_(packed) {
  const int bits = group_bits(params_);
  if (bits < 64 && (packed >> bits) != 0) throw UsageError("packed bits exceed the k x d shape");
}

BitMatrix BitMatrix::parse(KernelParams params, std::string_view text) {
  group_bits(params);
  std::uint64_t packed = 0;
  int column = 0;
  int row = 0;
  for (char c : text) {
    if (c == '|') {
      if (row != params.k) throw UsageError("bit matrix column has the wrong length");
      ++column;
      row = 0;
      continue;
    }
    if (c != '0' && c != '1') throw UsageError("bit matrix text may only contain 0, 1 and '|'");
    if (column >= params.d || row >= params.k) throw UsageError("bit matrix text does not match k x d");
    if (c == '1') packed |= std::uint64_t{1} << (column * params.k + row);
    ++row;
  }
  if (column != params.d - 1 || row != params.k) throw UsageError("bit matrix text does not match k x d");
  return BitMatrix(params, packed);
}

bool BitMatrix::bit(int row, int column) const {
  return (packed_ >> (column * params_.k + row)) & 1u;
}

std::uint64_t BitMatrix::column(int j) const {
  return (packed_ >> (j * params_.k)) & column_mask(params_.k);
}

int BitMatrix::column_height(int j) const { return std::bit_width(column(j)); }

int BitMatrix::leading_zeros(int j) const {
  const std::uint64_t c = column(j);
  return c == 0 ? params_.k : std::countr_zero(c);
}

std::string BitMatrix::to_string() const {
  std::string s;
  for (int j = 0; j < params_.d; ++j) {
    if (j > 0) s += '|';
    for (int i = 0; i < params_.k; ++i) s += bit(i, j) ? '1' : '0';
  }
  return s;
}

// ---- GroupFunction ------------------------------------------------------

GroupFunction::GroupFunction(int bits) : bits_(bits) {
  if (bits < 0 || bits > kMaxDenseBits) {
    throw GuardError("dense group functions need 0 <= bits <= " + std::to_string(kMaxDenseBits));
  }
  numerators_.assign(std::size_t{1} << bits, 0);
}

GroupFunction GroupFunction::from_values(const std::vector<mpq_class>& values) {
  if (values.empty() || !std::has_single_bit(values.size())) {
    throw UsageError("group function size must be a power of two, got " + std::to_string(values.size()));
  }
  GroupFunction f(std::countr_zero(values.size()));
  mpz_class common = 1;
  for (const auto& v : values) mpz_lcm(common.get_mpz_t(), common.get_mpz_t(), v.get_den_mpz_t());
  for (std::size_t i = 0; i < values.size(); ++i) {
    f.numerators_[i] = values[i].get_num() * (common / values[i].get_den());
  }
  f.denominator_ = common;
  return f;
}

mpq_class GroupFunction::value(std::size_t index) const {
  mpq_class v(numerators_[index], denominator_);
  v.canonicalize();
  return v;
}

std::vector<mpq_class> GroupFunction::values() const {
  std::vector<mpq_class> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back(value(i));
  return out;
}

void GroupFunction::set_denominator(mpz_class d) {
  if (d <= 0) throw UsageError("denominator must be positive");
  denominator_ = std::move(d);
}

// ---- phi and transforms -------------------------------------------------

mpq_class phi(const BitMatrix& a) {
  const auto& params = a.params();
  std::vector<int> profile(params.d);
  for (int j = 0; j < params.d; ++j) profile[j] = a.leading_zeros(j);
  return centered_kernel_exact_from_profile(profile, params.k);
}

GroupFunction phi_table(const KernelParams& params) {
  const int bits = group_bits(params);
  check_dense(bits, "phi_table");
  GroupFunction f(bits);
  std::map<std::vector<int>, mpz_class> memo;
  std::vector<int> profile(params.d);
  for (std::size_t a = 0; a < f.size(); ++a) {
    const BitMatrix m(params, a);
    for (int j = 0; j < params.d; ++j) profile[j] = m.leading_zeros(j);
    std::vector<int> key = profile;
    std::sort(key.begin(), key.end());
    auto it = memo.find(key);
    if (it == memo.end()) it = memo.emplace(key, centered_kernel_count(key, params.k)).first;
    f.numerators()[a] = it->second;
  }
  f.set_denominator(power(params.d, params.k));
  return f;
}

GroupFunction forward_transform(const GroupFunction& f) {
  GroupFunction g = f;
  walsh_hadamard(g.numerators());
  return g;
}

GroupFunction inverse_transform(const GroupFunction& f) {
  GroupFunction g = f;
  walsh_hadamard(g.numerators());
  mpz_class den = f.denominator();
  mpz_mul_2exp(den.get_mpz_t(), den.get_mpz_t(), static_cast<mp_bitcnt_t>(f.bits()));
  g.set_denominator(std::move(den));
  return g;
}

// ---- spectral measure and support ---------------------------------------

SpectralMeasure::SpectralMeasure(KernelParams params, std::map<std::uint64_t, mpz_class> weights,
                                 mpz_class denominator)
    : params_(params), weights_(std::move(weights)), denominator_(std::move(denominator)) {}

mpq_class SpectralMeasure::operator()(std::uint64_t packed) const {
  auto it = weights_.find(packed);
  if (it == weights_.end()) return 0;
  mpq_class v(it->second, denominator_);
  v.canonicalize();
  return v;
}

mpq_class SpectralMeasure::total_mass() const {
  mpz_class total = 0;
  for (const auto& [x, w] : weights_) total += w;
  mpq_class v(total, denominator_);
  v.canonicalize();
  return v;
}

SpectralMeasure spectral_measure(const KernelParams& params) {
  group_bits(params);
  const mpz_class work = binomial(params.k + params.d - 1, params.d - 1) * power(2, params.k);
  if (work > mpz_class(static_cast<unsigned long>(kMaxSparseWork))) {
    throw GuardError("spectral_measure visits C(k+d-1,d-1)*2^k = " + work.get_str() +
                     " terms; limit is " + std::to_string(kMaxSparseWork));
  }
  const mpz_class k_factorial = factorial(params.k);
  std::unordered_map<std::uint64_t, mpz_class> acc;
  for_each_composition(params.k, params.d, [&](const std::vector<int>& l) {
    mpz_class multinomial = k_factorial;
    std::uint64_t free = 0;
    for (int j = 0; j < params.d; ++j) {
      multinomial /= factorial(l[j]);
      free |= column_mask(l[j]) << (j * params.k);
    }
    // Every x whose nonzero digits sit in the top l_j rows of each column.
    for (std::uint64_t s = free;; s = (s - 1) & free) {
      acc[s] += multinomial;
      if (s == 0) break;
    }
  });
  std::map<std::uint64_t, mpz_class> weights(acc.begin(), acc.end());
  return SpectralMeasure(params, std::move(weights), power(2, params.k) * power(params.d, params.k));
}

bool in_support(const BitMatrix& x) { return packed_in_support(x.packed(), x.params()); }

std::vector<BitMatrix> support_E_K(const KernelParams& params) {
  group_bits(params);
  const mpz_class size = rkhs_dimension(params);
  if (size > mpz_class(static_cast<unsigned long>(kMaxSparseWork))) {
    throw GuardError("support_E_K would list " + size.get_str() + " matrices; limit is " +
                     std::to_string(kMaxSparseWork));
  }
  std::vector<std::uint64_t> packed;
  packed.reserve(size.get_ui());
  // Choose column heights h_j with sum <= k; a column of height h >= 1 has its
  // lowest one in row h and free digits above it.
  std::function<void(int, int, std::uint64_t)> rec = [&](int j, int left, std::uint64_t partial) {
    if (j == params.d) {
      packed.push_back(partial);
      return;
    }
    const int shift = j * params.k;
    rec(j + 1, left, partial);
    for (int h = 1; h <= left; ++h) {
      const std::uint64_t top = std::uint64_t{1} << (h - 1);
      for (std::uint64_t s = 0; s < top; ++s) rec(j + 1, left - h, partial | ((top | s) << shift));
    }
  };
  rec(0, params.k, 0);
  std::sort(packed.begin(), packed.end());
  std::vector<BitMatrix> out;
  out.reserve(packed.size());
  for (auto p : packed) out.emplace_back(params, p);
  return out;
}

// ---- dimension ----------------------------------------------------------

mpz_class rkhs_dimension(const KernelParams& params) {
  params.validate();
  const std::size_t terms = static_cast<std::size_t>(params.k) + 1;
  // (1 - z) / (1 - 2z) = 1 + sum_{n >= 1} 2^{n-1} z^n.
  Series column(terms);
  column[0] = 1;
  for (std::size_t n = 1; n < terms; ++n) column[n] = power(2, n - 1);
  Series all = power_truncated(std::move(column), params.d, terms);
  // Multiplying by 1/(1 - z) takes prefix sums.
  mpz_class total = 0;
  for (const auto& c : all) total += c;
  return total;
}

mpz_class dimension_double_sum(const KernelParams& params) {
  params.validate();
  mpz_class total = 0;
  for (int m = 0; m <= params.k; ++m) {
    for (int lambda = 0; lambda <= std::min(params.d, m); ++lambda) {
      // C(m-1, lambda-1) with C(-1, -1) = 1 and C(n, -1) = 0 for n >= 0.
      mpz_class compositions;
      if (lambda == 0) {
        compositions = (m == 0) ? 1 : 0;
      } else {
        compositions = binomial(m - 1, lambda - 1);
      }
      total += power(2, m - lambda) * binomial(params.d, lambda) * compositions;
    }
  }
  return total;
}

namespace {
double log_asymptotic(const KernelParams& params) {
  params.validate();
  if (params.k < 1) throw UsageError("dimension asymptotics need k >= 1");
  return (params.k - params.d + 1) * std::log(2.0) + (params.d - 1) * std::log(static_cast<double>(params.k)) -
         std::lgamma(static_cast<double>(params.d));
}
}  // namespace

double dimension_asymptotic(const KernelParams& params) { return std::exp(log_asymptotic(params)); }

double dimension_ratio(const KernelParams& params) {
  const double log_asym = log_asymptotic(params);
  const mpz_class dim = rkhs_dimension(params);
  long exponent = 0;
  const double mantissa = mpz_get_d_2exp(&exponent, dim.get_mpz_t());
  const double log_dim = std::log(mantissa) + static_cast<double>(exponent) * std::log(2.0);
  return std::exp(log_dim - log_asym);
}

// ---- RKHS structure -----------------------------------------------------

mpq_class rkhs_norm_squared(const GroupFunction& coefficients, const KernelParams& params) {
  const int bits = group_bits(params);
  if (coefficients.bits() != bits) throw UsageError("coefficient table does not match 2^{kd}");
  const GroupFunction check = inverse_transform(coefficients);
  const SpectralMeasure mu = spectral_measure(params);
  mpz_class total = 0;
  for (const auto& [x, w] : mu.weights()) {
    const mpz_class& c = check.numerators()[x];
    total += w * c * c;
  }
  // |G|^2 * sum_x (w / D_mu) (c / D_check)^2, with D_check = D_c 2^{bits}.
  mpz_class den = mu.denominator() * coefficients.denominator() * coefficients.denominator();
  mpq_class result(total, den);
  result.canonicalize();
  return result;
}

KernelTable::KernelTable(int bits, std::vector<mpz_class> numerators, mpz_class denominator)
    : bits_(bits), numerators_(std::move(numerators)), denominator_(std::move(denominator)) {}

mpq_class KernelTable::at(std::size_t a, std::size_t b) const {
  mpq_class v(numerators_[a * size() + b], denominator_);
  v.canonicalize();
  return v;
}

KernelTable onb_reconstruct(const KernelParams& params) {
  const int bits = group_bits(params);
  check_dense(bits, "onb_reconstruct", kMaxTableBits);
  const SpectralMeasure mu = spectral_measure(params);
  const std::size_t n = std::size_t{1} << bits;
  std::vector<mpz_class> table(n * n, 0);
  // e_x(a) conj(e_x(b)) = mu(x) (-1)^{x.a} (-1)^{x.b}; summing over x avoids square roots.
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      mpz_class& acc = table[a * n + b];
      for (const auto& [x, w] : mu.weights()) {
        const int sign = std::popcount(x & a) + std::popcount(x & b);
        if (sign & 1) {
          mpz_sub(acc.get_mpz_t(), acc.get_mpz_t(), w.get_mpz_t());
        } else {
          mpz_add(acc.get_mpz_t(), acc.get_mpz_t(), w.get_mpz_t());
        }
      }
    }
  }
  return KernelTable(bits, std::move(table), mu.denominator());
}

bool membership_test(const GroupFunction& psi, const KernelParams& params) {
  const int bits = group_bits(params);
  if (psi.bits() != bits) throw UsageError("function table does not match 2^{kd}");
  const GroupFunction check = inverse_transform(psi);
  for (std::size_t x = 0; x < check.size(); ++x) {
    if (!check.vanishes_at(x) && !packed_in_support(x, params)) return false;
  }
  return true;
}

bool multiplier_check(const KernelParams& params) {
  group_bits(params);
  const mpz_class size = rkhs_dimension(params);
  if (size > mpz_class(static_cast<unsigned long>(kMaxMultiplierSupport))) {
    throw GuardError("multiplier_check needs |E_K| <= " + std::to_string(kMaxMultiplierSupport) +
                     ", got " + size.get_str());
  }
  const auto support = support_E_K(params);
  for (const auto& a : support) {
    if (a.packed() == 0) continue;
    const bool obstructed = std::any_of(support.begin(), support.end(), [&](const BitMatrix& x) {
      return !packed_in_support(x.packed() ^ a.packed(), params);
    });
    if (!obstructed) return false;
  }
  return true;
}

// ---- report -------------------------------------------------------------

SpectralReport spectral_report(const KernelParams& params) {
  SpectralReport r;
  r.params = params;
  r.dimension = rkhs_dimension(params);
  const SpectralMeasure mu = spectral_measure(params);
  r.support_size = mu.support_size();
  r.mu_sum = mu.total_mass();
  r.positive = std::all_of(mu.weights().begin(), mu.weights().end(),
                           [](const auto& entry) { return entry.second > 0; });
  r.positivity_check = "closed_form";
  const int bits = params.k * params.d;
  if (bits <= kReportDenseBits) {
    const GroupFunction check = inverse_transform(phi_table(params));
    bool nonnegative = true;
    bool matches = true;
    for (std::size_t x = 0; x < check.size(); ++x) {
      const mpq_class v = check.value(x);
      if (v < 0) nonnegative = false;
      if (v != mu(x)) matches = false;
    }
    r.positive = r.positive && nonnegative;
    r.closed_form_matches_transform = matches;
    r.positivity_check = "inverse_transform";
  }
  r.asymptotic_ratio = params.k >= 1 ? dimension_ratio(params) : std::nan("");
  if (r.dimension <= mpz_class(static_cast<unsigned long>(kMaxMultiplierSupport))) {
    r.multiplier_obstruction = multiplier_check(params);
  }
  for (const auto& [x, w] : mu.weights()) {
    mpq_class v(w, mu.denominator());
    v.canonicalize();
    ++r.histogram[v];
  }
  return r;
}

std::string report_to_json(const SpectralReport& r) {
  nlohmann::ordered_json doc;
  doc["d"] = r.params.d;
  doc["k"] = r.params.k;
  if (mpz_fits_ulong_p(r.dimension.get_mpz_t())) {
    doc["dim"] = r.dimension.get_ui();
  } else {
    doc["dim"] = r.dimension.get_str();
  }
  doc["support_size"] = r.support_size;
  doc["mu_sum"] = r.mu_sum.get_str();
  doc["positive"] = r.positive;
  doc["positivity_check"] = r.positivity_check;
  if (r.positivity_check == "inverse_transform") {
    doc["closed_form_matches_transform"] = r.closed_form_matches_transform;
  }
  if (std::isfinite(r.asymptotic_ratio)) {
    doc["asymptotic_ratio"] = r.asymptotic_ratio;
  } else {
    doc["asymptotic_ratio"] = nullptr;
  }
  if (r.multiplier_obstruction) {
    doc["multiplier_obstruction"] = *r.multiplier_obstruction;
  } else {
    doc["multiplier_obstruction"] = nullptr;
  }
  auto& hist = doc["mu_histogram"] = nlohmann::ordered_json::array();
  for (const auto& [value, count] : r.histogram) hist.push_back({{"mu", value.get_str()}, {"count", count}});
  return doc.dump(2) + "\n";
}

}  // namespace kerf
