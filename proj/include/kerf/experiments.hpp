#pragma once

// Depth-selection rules, convergence-rate exponents, synthetic regression
// targets and the train/test L2-error harness.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kerf/types.hpp"

namespace kerf {

enum class DepthRuleKind { scornet, improved, interpolation };

std::string_view to_string(DepthRuleKind rule);
DepthRuleKind parse_depth_rule(std::string_view name);

struct DepthRule {
  Variant variant = Variant::centered;
  DepthRuleKind rule = DepthRuleKind::improved;
  std::uint64_t n = 0;
};

/// Unrounded depth expression (natural log unless log2 is written):
///   scornet:       (1 / (log 2 + 3/d)) log(n / (log n)^2)
///   improved:      ((e - 1) / (2 log2(1 - 1/(c d)) - (1 - e))) log2(n / (log n)^{e/(1-e)}),
///                  e = 1/log n, c = 2 (centered) or 3 (uniform)
///   interpolation: log2 n
/// Throws UsageError for n < 3 or d < 1.
double depth_expression(const DepthRule& rule, int d);
/// ceil(depth_expression), floored at 1.
int depth(const DepthRule& rule, int d);

/// Exponents of n in the upper bounds n^{-exponent}.
struct RateExponents {
  int d = 1;
  double centered_previous = 0.0;  // 1 / (d log 2 + 3)
  double centered_new = 0.0;       // 1 / (1 + d log 2)
  double uniform_previous = 0.0;   // 2 / (3 d log 2 + 6)
  double uniform_new = 0.0;        // 2 / (3 d log 2 + 2)
  double minimax = 0.0;            // 2 / (d + 2)
};

RateExponents rate_exponents(int d);
/// CSV with header d,centered_previous,centered_new,uniform_previous,uniform_new,minimax.
std::string exponent_table_csv(int d_max);

enum class TargetFunction {
  f1,        // x1^2 + exp(-x2^2)
  f2,        // x1^2 + 1 / (exp(x2^2) + exp(x3^2))
  constant,  // 1
};

std::string_view to_string(TargetFunction f);
TargetFunction parse_target(std::string_view name);
/// Number of leading coordinates the target reads.
int target_arity(TargetFunction f);
double evaluate_target(TargetFunction f, std::span<const double> x);

/// n samples with X uniform on [0,1)^d and Y = f(X) + sigma * N(0,1), from a
/// mt19937_64 stream seeded with `seed`. The draws for sample i do not depend
/// on n, so smaller datasets are prefixes of larger ones.
std::vector<SamplePoint> generate_dataset(TargetFunction f, int d, std::size_t n, double sigma,
                                          std::uint64_t seed);

struct ExperimentConfig {
  Variant variant = Variant::centered;
  TargetFunction target = TargetFunction::f1;
  int d = 2;
  double sigma = 0.5;
  std::vector<std::uint64_t> sizes;
  std::vector<DepthRuleKind> rules{DepthRuleKind::scornet, DepthRuleKind::improved,
                                   DepthRuleKind::interpolation};
  std::vector<std::uint64_t> seeds{1};
  double train_fraction = 0.8;
  std::string output;
  std::string summary;
  unsigned threads = 1;
  /// When false the wall_time_ms column is written as 0 so output files are reproducible.
  bool timing = false;

  void validate() const;
};

/// Parses flat "key = value" text; '#' starts a comment. Keys: variant,
/// target, d, sigma, n, rules, seeds, train_fraction, output, summary,
/// threads, timing. List values are comma separated.
ExperimentConfig parse_config(std::string_view text);

struct ExperimentRow {
  Variant variant = Variant::centered;
  DepthRuleKind rule = DepthRuleKind::improved;
  std::uint64_t n = 0;
  int k = 0;
  std::uint64_t seed = 0;
  double l2_error = 0.0;
  double wall_time_ms = 0.0;
};

/// Train/test split: the first round(train_fraction * n) samples train the model.
std::size_t train_size(std::uint64_t n, double train_fraction);

/// One row per (rule, n, seed), sorted by rule (config order), n, then seed
/// (config order). The depth rule is applied to the training-set size.
std::vector<ExperimentRow> run_experiment(const ExperimentConfig& config);

inline constexpr std::string_view kExperimentCsvHeader = "variant,rule,n,k,seed,l2_error,wall_time_ms";
std::string experiment_csv(const std::vector<ExperimentRow>& rows);
/// Per-(variant, rule, n) median L2 error over seeds.
std::string experiment_summary_json(const std::vector<ExperimentRow>& rows);

/// Shortest decimal string that parses back to exactly v.
std::string format_double(double v);

}  // namespace kerf
