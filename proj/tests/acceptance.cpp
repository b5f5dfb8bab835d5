// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "kerf/estimator.hpp"
#include "kerf/experiments.hpp"
#include "kerf/forest.hpp"
#include "kerf/kernels.hpp"
#include "kerf/spectral.hpp"
#include "oracles.hpp"

using namespace kerf;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

template <class F>
void criterion(const std::string& name, F&& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!o.pass) ++failures;
  std::printf("%s  %-28s %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

unsigned workers() { return std::max(1u, std::min(8u, std::thread::hardware_concurrency())); }

Outcome centered_oracle() {
  std::mt19937_64 rng(101);
  long mismatches = 0, checked = 0;
  for (int d = 1; d <= 4; ++d)
    for (int k = 0; k <= 8; ++k)
      for (int trial = 0; trial < 200; ++trial) {
        const auto x = oracle::random_point(rng, d, k);
        const auto z = trial % 2 ? oracle::nearby_point(rng, x, k) : oracle::random_point(rng, d, k);
        const mpq_class expected = oracle::centered_kernel(oracle::match_profile(x, z, k), k);
        mismatches += centered_kernel_exact(x, z, KernelParams{k, d}) != expected;
        ++checked;
      }
  return {mismatches == 0, fmt("%ld/%ld pairs exact", checked - mismatches, checked)};
}

Outcome uniform_oracle() {
  std::mt19937_64 rng(102);
  double worst = 0.0;
  for (int d = 1; d <= 3; ++d)
    for (int k = 0; k <= 6; ++k)
      for (int trial = 0; trial < 200; ++trial) {
        const auto x = oracle::random_point(rng, d, k);
        worst = std::max(worst, std::abs(uniform_kernel(x, KernelParams{k, d}) - oracle::uniform_kernel(x, k)));
      }
  return {worst <= 1e-10, fmt("max |dp - enumeration| = %.2e", worst)};
}

Outcome monte_carlo() {
  const std::size_t trees = 200000;
  std::string detail;
  bool ok = true;
  std::mt19937_64 rng(103);
  for (Variant v : {Variant::centered, Variant::uniform}) {
    for (auto [d, k] : std::vector<std::pair<int, int>>{{1, 3}, {2, 2}, {3, 4}}) {
      const KernelParams p{k, d};
      std::vector<std::pair<Point, Point>> pairs;
      for (int i = 0; i < 20; ++i) {
        if (v == Variant::centered) {
          const auto x = oracle::random_point(rng, d, k);
          pairs.emplace_back(x, oracle::nearby_point(rng, x, k));
        } else {
          pairs.emplace_back(Point(d, 0.0), oracle::random_point(rng, d, k));
        }
      }
      std::vector<int> good(pairs.size(), 0);
      std::vector<std::jthread> pool;
      const unsigned w = workers();
      for (unsigned t = 0; t < w; ++t)
        pool.emplace_back([&, t] {
          for (std::size_t i = t; i < pairs.size(); i += w) {
            const auto& [x, z] = pairs[i];
            const double mc = implicit_proximity(v, p, trees, 1000 + i, x, z);
            const double exact = v == Variant::centered ? centered_kernel(x, z, p) : uniform_kernel(z, p);
            good[i] = std::abs(mc - exact) <= 0.01;
          }
        });
      pool.clear();
      const int passed = static_cast<int>(std::count(good.begin(), good.end(), 1));
      ok = ok && passed >= 19;
      detail += fmt("%s(%d,%d)=%d/20 ", std::string(to_string(v)).substr(0, 3).c_str(), d, k, passed);
    }
  }
  return {ok, detail};
}

Outcome spectral_triangle() {
  int configs = 0;
  bool ok = true;
  std::string bad;
  for (int d = 1; d <= 16; ++d)
    for (int k = 1; k * d <= 16; ++k) {
      const KernelParams p{k, d};
      const auto phis = phi_table(p);
      // phi against direct enumeration, memoised on the leading-zero profile.
      std::map<std::vector<int>, mpq_class> memo;
      for (std::size_t a = 0; a < phis.size(); ++a) {
        std::vector<int> m(d);
        for (int j = 0; j < d; ++j) m[j] = oracle::leading_zeros(a, k, j);
        auto it = memo.find(m);
        if (it == memo.end()) it = memo.emplace(m, oracle::centered_kernel(m, k)).first;
        if (phis.value(a) != it->second) ok = false;
      }
      const auto check = inverse_transform(phis);
      const auto mu = spectral_measure(p);
      mpq_class total = 0;
      for (std::size_t x = 0; x < check.size(); ++x) {
        const mpq_class v = check.value(x);
        if (v < 0 || v != mu(x)) ok = false;
        total += v;
      }
      if (total != 1 || mu.total_mass() != 1) ok = false;
      if (k * d <= 10) {
        const auto slow = oracle::inverse_transform(phis.values());
        for (std::size_t x = 0; x < slow.size(); ++x)
          if (slow[x] != check.value(x)) ok = false;
      }
      if (!ok && bad.empty()) bad = fmt(" first failure at (d=%d,k=%d)", d, k);
      ++configs;
    }
  return {ok, fmt("%d (d,k) with kd<=16: closed form = transform, sum 1, mu >= 0", configs) + bad};
}

Outcome dimension_table() {
  bool ok = true;
  for (int d = 1; d <= 3; ++d)
    for (int k = 1; k <= 6; ++k) {
      const KernelParams p{k, d};
      const mpz_class series = rkhs_dimension(p);
      ok = ok && series == support_E_K(p).size() && series == dimension_double_sum(p) &&
           series == oracle::count_E_K(k, d);
    }
  for (int k = 1; k <= 20; ++k) ok = ok && rkhs_dimension(KernelParams{k, 1}) == mpz_class(1) << k;
  ok = ok && rkhs_dimension(KernelParams{1, 2}) == 3 && dimension_double_sum(KernelParams{1, 2}) == 3;
  for (int k = 1; k <= 20; ++k) ok = ok && rkhs_dimension(KernelParams{k, 2}) == (mpz_class(1) << (k - 1)) * (k + 2);
  return {ok, "support = series = double sum = brute count (d<=3,k<=6); 2^k; N(2,1)=3; 2^{k-1}(k+2) k<=20"};
}

Outcome asymptotic() {
  const double r = dimension_ratio(KernelParams{200, 2});
  return {r >= 1.0 && r <= 1.02, fmt("ratio at d=2,k=200 = %.6f", r)};
}

Outcome rkhs_identities() {
  const KernelParams p{2, 2};
  const auto phis = oracle::phi_table(2, 2);
  const auto table = onb_reconstruct(p);
  bool ok = true;
  for (std::size_t a = 0; a < 16; ++a)
    for (std::size_t b = 0; b < 16; ++b) ok = ok && table.at(a, b) == phis[a ^ b];
  std::mt19937_64 rng(104);
  int matched = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<mpq_class> c(16);
    for (auto& q : c) {
      q = mpq_class(static_cast<long>(rng() % 201) - 100, 1 + static_cast<long>(rng() % 12));
      q.canonicalize();
    }
    matched += rkhs_norm_squared(GroupFunction::from_values(c), p) == oracle::gram_form(c, phis);
  }
  ok = ok && matched == 50;
  return {ok, fmt("16x16 reconstruction exact, norm = Gram form on %d/50 vectors", matched)};
}

Outcome multiplier() {
  bool ok = true;
  for (int d = 2; d <= 3; ++d)
    for (int k = 1; k <= 5; ++k) ok = ok && multiplier_check(KernelParams{k, d});
  for (int k = 1; k <= 5; ++k) ok = ok && !multiplier_check(KernelParams{k, 1});
  return {ok, "true for d in {2,3}, k<=5; false for d=1"};
}

Outcome gram_psd() {
  std::mt19937_64 rng(105);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::string detail;
  bool ok = true;
  for (auto [d, k] : std::vector<std::pair<int, int>>{{2, 4}, {5, 6}}) {
    std::vector<Point> pts(50, Point(d));
    for (auto& x : pts)
      for (auto& v : x) v = u(rng);
    const auto g = centered_gram(pts, KernelParams{k, d});
    const Eigen::Map<const Eigen::MatrixXd> m(g.data(), 50, 50);
    const double lo = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    ok = ok && lo >= -1e-8;
    detail += fmt("(d=%d,k=%d) min eig %.3e  ", d, k, lo);
  }
  return {ok, detail};
}

Outcome estimator_sanity() {
  bool ok = true;
  const auto constant = generate_dataset(TargetFunction::constant, 2, 200, 0.0, 5);
  const auto noisy = generate_dataset(TargetFunction::f1, 2, 300, 0.5, 5);
  const auto queries = generate_dataset(TargetFunction::f1, 2, 200, 0.0, 6);
  const auto [lo, hi] =
      std::minmax_element(noisy.begin(), noisy.end(), [](const auto& a, const auto& b) { return a.y < b.y; });
  double mean = 0.0;
  for (const auto& s : noisy) mean += s.y;
  mean /= noisy.size();
  for (Variant v : {Variant::centered, Variant::uniform}) {
    for (int k : {1, 4, 9}) {
      const KerfModel flat(constant, KernelParams{k, 2}, v);
      const KerfModel model(noisy, KernelParams{k, 2}, v);
      for (const auto& q : queries) {
        ok = ok && flat.predict(q.x) == 1.0;
        const double y = model.predict(q.x);
        ok = ok && y >= lo->y && y <= hi->y;
      }
    }
    const KerfModel root(noisy, KernelParams{0, 2}, v);
    for (const auto& q : queries) ok = ok && std::abs(root.predict(q.x) - mean) <= 1e-12 * std::abs(mean);
  }
  return {ok, "constant exact, predictions in [min Y, max Y], k=0 gives the mean"};
}

Outcome consistency() {
  ExperimentConfig c;
  c.target = TargetFunction::f1;
  c.d = 2;
  c.sigma = 0.5;
  c.rules = {DepthRuleKind::improved};
  c.sizes = {500, 5000};
  c.seeds.clear();
  for (std::uint64_t s = 1; s <= 10; ++s) c.seeds.push_back(s);
  c.threads = workers();
  const auto rows = run_experiment(c);
  std::vector<double> small, large;
  for (const auto& r : rows) (r.n == 500 ? small : large).push_back(r.l2_error);
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return (v[v.size() / 2] + v[(v.size() - 1) / 2]) / 2;
  };
  const double m1 = median(small), m2 = median(large);
  return {m2 < m1, fmt("median L2 n=500: %.5f, n=5000: %.5f", m1, m2)};
}

Outcome exponents() {
  double worst = 0.0;
  bool ordered = true;
  for (int d = 1; d <= 50; ++d) {
    const auto e = rate_exponents(d);
    const auto o = oracle::exponents(d);
    for (auto [got, want] : {std::pair{e.centered_previous, o.centered_previous},
                             std::pair{e.centered_new, o.centered_new},
                             std::pair{e.uniform_previous, o.uniform_previous},
                             std::pair{e.uniform_new, o.uniform_new},
                             std::pair{e.minimax, o.minimax}})
      worst = std::max(worst, std::abs(got - static_cast<double>(want)));
    ordered = ordered && e.minimax >= e.centered_new && e.centered_new > e.centered_previous &&
              e.minimax >= e.uniform_new && e.uniform_new > e.uniform_previous;
  }
  return {worst <= 1e-12 && ordered, fmt("max deviation %.2e, ordering %s", worst, ordered ? "holds" : "broken")};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "kerf_acceptance_determinism";
  fs::remove_all(root);
  const std::string cli = KERF_CLI_PATH;
  const std::vector<std::string> outputs{"experiment.csv", "summary.json", "model.json",
                                         "predictions.csv", "spectrum.json", "exponents.csv"};
  for (const char* run : {"a", "b"}) {
    const fs::path dir = root / run;
    fs::create_directories(dir);
    std::ofstream(dir / "run.cfg") << "variant = uniform\ntarget = f2\nd = 3\nn = 80, 120\n"
                                      "rules = improved, scornet, interpolation\nseeds = 3, 4\nthreads = 3\n";
    std::ofstream(dir / "queries.csv") << "x1,x2,x3\n0.1,0.2,0.3\n0.9,0.5,0\n0.33,0.66,0.99\n";
    const std::string d = "'" + dir.string() + "'";
    const std::vector<std::string> commands{
        cli + " experiment --config " + d + "/run.cfg --output " + d + "/experiment.csv --summary " + d +
            "/summary.json",
        cli + " fit --target f2 -n 150 --seed 11 --rule improved --variant centered --out " + d + "/model.json",
        cli + " predict --model " + d + "/model.json --queries " + d + "/queries.csv --out " + d +
            "/predictions.csv",
        cli + " spectrum -k 3 -d 2 --report " + d + "/spectrum.json",
        cli + " depth --exponents --d-max 12 --out " + d + "/exponents.csv"};
    for (const auto& cmd : commands)
      if (std::system(cmd.c_str()) != 0) return {false, "command failed: " + cmd};
  }
  for (const auto& name : outputs) {
    const std::string a = slurp(root / "a" / name), b = slurp(root / "b" / name);
    if (a.empty() || a != b) return {false, name + " differs between runs"};
  }
  fs::remove_all(root);
  return {true, fmt("%zu seeded output files byte-identical across two runs", outputs.size())};
}

}  // namespace

int main() {
  criterion("kernel-oracle-equivalence", centered_oracle);
  criterion("uniform-oracle-equivalence", uniform_oracle);
  criterion("monte-carlo-limit", monte_carlo);
  criterion("spectral-triangle", spectral_triangle);
  criterion("dimension-table", dimension_table);
  criterion("asymptotic-dimension", asymptotic);
  criterion("rkhs-identities", rkhs_identities);
  criterion("multiplier-property", multiplier);
  criterion("gram-psd", gram_psd);
  criterion("estimator-sanity", estimator_sanity);
  criterion("consistency-trend", consistency);
  criterion("exponent-tables", exponents);
  criterion("determinism", determinism);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
