#include "cli.hpp"

#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "csv.hpp"
#include "kerf/error.hpp"
#include "kerf/estimator.hpp"
#include "kerf/experiments.hpp"
#include "kerf/kernels.hpp"
#include "kerf/spectral.hpp"

namespace kerf::cli {

namespace {

void emit(const std::string& path, const std::string& contents, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << contents;
  } else {
    write_file(path, contents);
  }
}

struct KernelArgs {
  std::string variant = "centered";
  int k = -1;
  int d = -1;
  std::string x, z;
  bool exact = false;
};

void cmd_kernel(const KernelArgs& a, std::ostream& out) {
  const KernelParams params{a.k, a.d};
  params.validate();
  const Variant variant = parse_variant(a.variant);
  const Point x = parse_point(a.x);
  check_point(x, params.d);
  std::optional<Point> z;
  if (!a.z.empty()) {
    z = parse_point(a.z);
    check_point(*z, params.d);
  }
  if (variant == Variant::centered) {
    if (!z) throw UsageError("the centered kernel needs both --x and --z");
    out << format_double(centered_kernel(x, *z, params)) << '\n';
    if (a.exact) out << centered_kernel_exact(x, *z, params).get_str() << '\n';
    return;
  }
  if (a.exact) throw UsageError("--exact is only available for the centered kernel");
  // Uniform: K(0, x), or the translation-invariant K(0, |x - z|) when z is given.
  Point arg = x;
  if (z) {
    for (int j = 0; j < params.d; ++j) arg[j] = std::abs(x[j] - (*z)[j]);
  }
  out << format_double(uniform_kernel(arg, params)) << '\n';
}

struct DepthArgs {
  std::string variant = "centered";
  std::string rule;
  std::uint64_t n = 0;
  int d = -1;
  bool exponents = false;
  int d_max = 10;
  std::string out;
};

void cmd_depth(const DepthArgs& a, std::ostream& out) {
  if (a.exponents) {
    emit(a.out, exponent_table_csv(a.d_max), out);
    return;
  }
  if (a.rule.empty() || a.d < 1) throw UsageError("depth needs --rule, -n and -d (or --exponents)");
  const DepthRule rule{parse_variant(a.variant), parse_depth_rule(a.rule), a.n};
  emit(a.out, std::to_string(depth(rule, a.d)) + "\n", out);
}

struct SpectrumArgs {
  int k = -1;
  int d = -1;
  std::string report;
};

void cmd_spectrum(const SpectrumArgs& a, std::ostream& out) {
  const KernelParams params{a.k, a.d};
  params.validate();
  emit(a.report, report_to_json(spectral_report(params)), out);
}

struct FitArgs {
  std::string data;
  std::string target;
  std::uint64_t n = 0;
  double sigma = 0.5;
  std::uint64_t seed = 1;
  int d = -1;
  std::string variant = "centered";
  int k = -1;
  std::string rule;
  std::string out;
};

void cmd_fit(const FitArgs& a, std::ostream& out) {
  std::vector<SamplePoint> train;
  int d = a.d;
  if (!a.data.empty()) {
    if (!a.target.empty()) throw UsageError("use either --data or --target, not both");
    train = parse_samples_csv(read_file(a.data));
    if (train.empty()) throw UsageError("'" + a.data + "' contains no samples");
    const int file_d = static_cast<int>(train.front().x.size());
    if (d >= 1 && d != file_d) throw UsageError("-d does not match the data file dimension");
    d = file_d;
  } else if (!a.target.empty()) {
    const TargetFunction f = parse_target(a.target);
    if (d < 1) d = target_arity(f);
    if (a.n == 0) throw UsageError("--target needs -n");
    train = generate_dataset(f, d, a.n, a.sigma, a.seed);
  } else {
    throw UsageError("fit needs --data or --target");
  }
  const Variant variant = parse_variant(a.variant);
  int k = a.k;
  if (!a.rule.empty()) {
    if (k >= 0) throw UsageError("use either -k or --rule, not both");
    k = depth(DepthRule{variant, parse_depth_rule(a.rule), train.size()}, d);
  }
  if (k < 0) throw UsageError("fit needs -k or --rule");
  const KerfModel model(std::move(train), KernelParams{k, d}, variant);
  emit(a.out, serialize_model(model), out);
}

struct PredictArgs {
  std::string model;
  std::string queries;
  std::string out;
  unsigned threads = 1;
};

void cmd_predict(const PredictArgs& a, std::ostream& out) {
  const KerfModel model = deserialize_model(read_file(a.model));
  const auto queries = parse_points_csv(read_file(a.queries));
  const int d = model.params().d;
  for (const auto& q : queries) check_point(q, d);
  const auto predictions = model.predict_batch(queries, a.threads);
  std::string csv;
  for (int j = 0; j < d; ++j) csv += "x" + std::to_string(j + 1) + ",";
  csv += "prediction\n";
  for (std::size_t i = 0; i < queries.size(); ++i) {
    for (double v : queries[i]) csv += format_double(v) + ",";
    csv += format_double(predictions[i]) + "\n";
  }
  emit(a.out, csv, out);
}

struct ExperimentArgs {
  std::string config;
  std::string output;
  std::string summary;
  std::optional<unsigned> threads;
  bool timing = false;
};

void cmd_experiment(const ExperimentArgs& a, std::ostream& out) {
  ExperimentConfig config = parse_config(read_file(a.config));
  if (!a.output.empty()) config.output = a.output;
  if (!a.summary.empty()) config.summary = a.summary;
  if (a.threads) config.threads = *a.threads;
  if (a.timing) config.timing = true;
  const auto rows = run_experiment(config);
  emit(config.output, experiment_csv(rows), out);
  if (!config.summary.empty()) write_file(config.summary, experiment_summary_json(rows));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Kernel random forest regression and spectral analysis of the centered kernel", "kerf"};
  app.require_subcommand(1);

  KernelArgs kernel_args;
  auto* kernel = app.add_subcommand("kernel", "Evaluate the centered or uniform kernel");
  kernel->add_option("--variant", kernel_args.variant, "centered or uniform")->capture_default_str();
  kernel->add_option("-k,--depth", kernel_args.k, "Tree depth")->required();
  kernel->add_option("-d,--dim", kernel_args.d, "Dimension")->required();
  kernel->add_option("--x", kernel_args.x, "First point, comma separated")->required();
  kernel->add_option("--z", kernel_args.z, "Second point (uniform: evaluates K(0,|x-z|))");
  kernel->add_flag("--exact", kernel_args.exact, "Also print the exact rational value");

  DepthArgs depth_args;
  auto* depth_cmd = app.add_subcommand("depth", "Recommended tree depth, or the rate-exponent table");
  depth_cmd->add_option("--variant", depth_args.variant, "centered or uniform")->capture_default_str();
  depth_cmd->add_option("--rule", depth_args.rule, "scornet, improved or interpolation");
  depth_cmd->add_option("-n,--samples", depth_args.n, "Training-set size");
  depth_cmd->add_option("-d,--dim", depth_args.d, "Dimension");
  depth_cmd->add_flag("--exponents", depth_args.exponents, "Write the rate-exponent table as CSV");
  depth_cmd->add_option("--d-max", depth_args.d_max, "Largest d in the exponent table")->capture_default_str();
  depth_cmd->add_option("--out", depth_args.out, "Output file (default stdout)");

  SpectrumArgs spectrum_args;
  auto* spectrum = app.add_subcommand("spectrum", "Spectral report of the centered kernel on Z_2^{kd}");
  spectrum->add_option("-k,--depth", spectrum_args.k, "Tree depth")->required();
  spectrum->add_option("-d,--dim", spectrum_args.d, "Dimension")->required();
  spectrum->add_option("--report", spectrum_args.report, "JSON output file (default stdout)");

  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "Fit a KeRF model and write it as JSON");
  fit->add_option("--data", fit_args.data, "Training CSV (coordinate columns plus y)");
  fit->add_option("--target", fit_args.target, "Generate data instead: f1, f2 or constant");
  fit->add_option("-n,--samples", fit_args.n, "Generated sample count");
  fit->add_option("--sigma", fit_args.sigma, "Generated noise standard deviation")->capture_default_str();
  fit->add_option("--seed", fit_args.seed, "Generator seed")->capture_default_str();
  fit->add_option("-d,--dim", fit_args.d, "Dimension (generated data defaults to the target arity)");
  fit->add_option("--variant", fit_args.variant, "centered or uniform")->capture_default_str();
  fit->add_option("-k,--depth", fit_args.k, "Tree depth");
  fit->add_option("--rule", fit_args.rule, "Pick the depth with a rule instead of -k");
  fit->add_option("--out", fit_args.out, "Model JSON file (default stdout)");

  PredictArgs predict_args;
  auto* predict = app.add_subcommand("predict", "Predict query points with a saved model");
  predict->add_option("--model", predict_args.model, "Model JSON")->required();
  predict->add_option("--queries", predict_args.queries, "Query CSV (a y column is ignored)")->required();
  predict->add_option("--out", predict_args.out, "Prediction CSV (default stdout)");
  predict->add_option("--threads", predict_args.threads, "Worker threads")->capture_default_str();

  ExperimentArgs experiment_args;
  auto* experiment = app.add_subcommand("experiment", "Run the L2-error benchmark described by a config file");
  experiment->add_option("--config", experiment_args.config, "Config file")->required();
  experiment->add_option("--output", experiment_args.output, "Override the CSV output path");
  experiment->add_option("--summary", experiment_args.summary, "Override the JSON summary path");
  experiment->add_option("--threads", experiment_args.threads, "Override worker threads");
  experiment->add_flag("--timing", experiment_args.timing, "Record wall_time_ms (otherwise written as 0)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*kernel) cmd_kernel(kernel_args, out);
    if (*depth_cmd) cmd_depth(depth_args, out);
    if (*spectrum) cmd_spectrum(spectrum_args, out);
    if (*fit) cmd_fit(fit_args, out);
    if (*predict) cmd_predict(predict_args, out);
    if (*experiment) cmd_experiment(experiment_args, out);
  } catch (const GuardError& e) {
    err << "kerf: size limit exceeded: " << e.what() << '\n';
    return 3;
  } catch (const DomainError& e) {
    err << "kerf: domain error: " << e.what() << '\n';
    return 2;
  } catch (const UsageError& e) {
    err << "kerf: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "kerf: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace kerf::cli
