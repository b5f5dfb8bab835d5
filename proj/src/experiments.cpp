#include "kerf/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "kerf/error.hpp"
#include "kerf/estimator.hpp"

namespace kerf {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = s.find(',');
    const auto item = trim(s.substr(0, comma));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw UsageError("config key '" + std::string(key) + "': cannot parse '" + std::string(text) + "'");
  }
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw UsageError("config key '" + std::string(key) + "': expected true or false, got '" +
                   std::string(text) + "'");
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

std::string_view to_string(DepthRuleKind rule) {
  switch (rule) {
    case DepthRuleKind::scornet:
      return "scornet";
    case DepthRuleKind::improved:
      return "improved";
    case DepthRuleKind::interpolation:
      return "interpolation";
  }
  return "unknown";
}

DepthRuleKind parse_depth_rule(std::string_view name) {
  if (name == "scornet") return DepthRuleKind::scornet;
  if (name == "improved") return DepthRuleKind::improved;
  if (name == "interpolation") return DepthRuleKind::interpolation;
  throw UsageError("unknown depth rule '" + std::string(name) +
                   "' (expected scornet, improved or interpolation)");
}

double depth_expression(const DepthRule& rule, int d) {
  if (d < 1) throw UsageError("depth rules need d >= 1");
  if (rule.n < 3) throw UsageError("depth rules need n >= 3, got " + std::to_string(rule.n));
  const double n = static_cast<double>(rule.n);
  const double log_n = std::log(n);
  switch (rule.rule) {
    case DepthRuleKind::scornet:
      return std::log(n / (log_n * log_n)) / (std::log(2.0) + 3.0 / d);
    case DepthRuleKind::improved: {
      const double eps = 1.0 / log_n;
      const double c = rule.variant == Variant::centered ? 2.0 : 3.0;
      const double coefficient = (eps - 1.0) / (2.0 * std::log2(1.0 - 1.0 / (c * d)) - (1.0 - eps));
      return coefficient * std::log2(n / std::pow(log_n, eps / (1.0 - eps)));
    }
    case DepthRuleKind::interpolation:
      return std::log2(n);
  }
  throw UsageError("unknown depth rule");
}

int depth(const DepthRule& rule, int d) {
  return std::max(1, static_cast<int>(std::ceil(depth_expression(rule, d))));
}

RateExponents rate_exponents(int d) {
  if (d < 1) throw UsageError("rate exponents need d >= 1");
  const double dl = d * std::log(2.0);
  return RateExponents{
      .d = d,
      .centered_previous = 1.0 / (dl + 3.0),
      .centered_new = 1.0 / (1.0 + dl),
      .uniform_previous = 2.0 / (3.0 * dl + 6.0),
      .uniform_new = 2.0 / (3.0 * dl + 2.0),
      .minimax = 2.0 / (d + 2.0),
  };
}

std::string exponent_table_csv(int d_max) {
  if (d_max < 1) throw UsageError("exponent table needs d_max >= 1");
  std::string out = "d,centered_previous,centered_new,uniform_previous,uniform_new,minimax\n";
  for (int d = 1; d <= d_max; ++d) {
    const auto e = rate_exponents(d);
    out += std::to_string(d) + ',' + format_double(e.centered_previous) + ',' + format_double(e.centered_new) +
           ',' + format_double(e.uniform_previous) + ',' + format_double(e.uniform_new) + ',' +
           format_double(e.minimax) + '\n';
  }
  return out;
}

std::string_view to_string(TargetFunction f) {
  switch (f) {
    case TargetFunction::f1:
      return "f1";
    case TargetFunction::f2:
      return "f2";
    case TargetFunction::constant:
      return "constant";
  }
  return "unknown";
}

TargetFunction parse_target(std::string_view name) {
  if (name == "f1") return TargetFunction::f1;
  if (name == "f2") return TargetFunction::f2;
  if (name == "constant") return TargetFunction::constant;
  throw UsageError("unknown target '" + std::string(name) + "' (expected f1, f2 or constant)");
}

int target_arity(TargetFunction f) {
  switch (f) {
    case TargetFunction::f1:
      return 2;
    case TargetFunction::f2:
      return 3;
    case TargetFunction::constant:
      return 1;
  }
  return 1;
}

double evaluate_target(TargetFunction f, std::span<const double> x) {
  if (static_cast<int>(x.size()) < target_arity(f)) {
    throw UsageError("target " + std::string(to_string(f)) + " needs d >= " + std::to_string(target_arity(f)));
  }
  switch (f) {
    case TargetFunction::f1:
      return x[0] * x[0] + std::exp(-x[1] * x[1]);
    case TargetFunction::f2:
      return x[0] * x[0] + 1.0 / (std::exp(x[1] * x[1]) + std::exp(x[2] * x[2]));
    case TargetFunction::constant:
      return 1.0;
  }
  return 0.0;
}

std::vector<SamplePoint> generate_dataset(TargetFunction f, int d, std::size_t n, double sigma,
                                          std::uint64_t seed) {
  if (d < target_arity(f)) {
    throw UsageError("target " + std::string(to_string(f)) + " needs d >= " + std::to_string(target_arity(f)) +
                     ", got d = " + std::to_string(d));
  }
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw UsageError("noise sigma must be finite and >= 0");
  std::mt19937_64 engine(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<SamplePoint> data(n);
  for (auto& s : data) {
    s.x.resize(d);
    for (auto& v : s.x) v = static_cast<double>(engine() >> 11) * 0x1.0p-53;
    s.y = evaluate_target(f, s.x) + sigma * noise(engine);
  }
  return data;
}

void ExperimentConfig::validate() const {
  if (d < target_arity(target)) {
    throw UsageError("target " + std::string(to_string(target)) + " needs d >= " +
                     std::to_string(target_arity(target)));
  }
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw UsageError("sigma must be finite and >= 0");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw UsageError("train_fraction must lie in (0,1)");
  if (sizes.empty()) throw UsageError("config needs at least one n value");
  if (rules.empty()) throw UsageError("config needs at least one depth rule");
  if (seeds.empty()) throw UsageError("config needs at least one seed");
  for (auto n : sizes) {
    const auto train = train_size(n, train_fraction);
    if (train < 3 || train >= n) {
      throw UsageError("n = " + std::to_string(n) + " leaves " + std::to_string(train) +
                       " training points; need at least 3 and a non-empty test set");
    }
  }
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig config;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key == "variant") {
      config.variant = parse_variant(value);
    } else if (key == "target") {
      config.target = parse_target(value);
    } else if (key == "d") {
      config.d = parse_number<int>(key, value);
    } else if (key == "sigma") {
      config.sigma = parse_number<double>(key, value);
    } else if (key == "n") {
      config.sizes.clear();
      for (auto item : split_list(value)) config.sizes.push_back(parse_number<std::uint64_t>(key, item));
    } else if (key == "rules") {
      config.rules.clear();
      for (auto item : split_list(value)) config.rules.push_back(parse_depth_rule(item));
    } else if (key == "seeds") {
      config.seeds.clear();
      for (auto item : split_list(value)) config.seeds.push_back(parse_number<std::uint64_t>(key, item));
    } else if (key == "train_fraction") {
      config.train_fraction = parse_number<double>(key, value);
    } else if (key == "output") {
      config.output = std::string(value);
    } else if (key == "summary") {
      config.summary = std::string(value);
    } else if (key == "threads") {
      config.threads = parse_number<unsigned>(key, value);
    } else if (key == "timing") {
      config.timing = parse_bool(key, value);
    } else {
      throw UsageError("config line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
    }
  }
  config.validate();
  return config;
}

std::size_t train_size(std::uint64_t n, double train_fraction) {
  return static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
}

std::vector<ExperimentRow> run_experiment(const ExperimentConfig& config) {
  config.validate();
  struct Cell {
    std::size_t rule_index, size_index, seed_index;
  };
  std::vector<Cell> cells;
  for (std::size_t r = 0; r < config.rules.size(); ++r) {
    for (std::size_t s = 0; s < config.sizes.size(); ++s) {
      for (std::size_t e = 0; e < config.seeds.size(); ++e) cells.push_back({r, s, e});
    }
  }
  std::vector<ExperimentRow> rows(cells.size());
  auto run_cell = [&](const Cell& cell, ExperimentRow& row) {
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t n = config.sizes[cell.size_index];
    const std::uint64_t seed = config.seeds[cell.seed_index];
    auto data = generate_dataset(config.target, config.d, n, config.sigma, seed);
    const std::size_t n_train = train_size(n, config.train_fraction);
    std::vector<SamplePoint> test(data.begin() + static_cast<std::ptrdiff_t>(n_train), data.end());
    data.resize(n_train);
    const DepthRule rule{config.variant, config.rules[cell.rule_index], n_train};
    const int k = depth(rule, config.d);
    const KerfModel model(std::move(data), KernelParams{k, config.d}, config.variant);
    row.variant = config.variant;
    row.rule = rule.rule;
    row.n = n;
    row.k = k;
    row.seed = seed;
    row.l2_error = l2_error(model, test);
    if (config.timing) {
      row.wall_time_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
  };
  const unsigned workers =
      std::clamp<unsigned>(config.threads, 1, static_cast<unsigned>(std::max<std::size_t>(cells.size(), 1)));
  if (workers == 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(cells[i], rows[i]);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < cells.size(); i += workers) run_cell(cells[i], rows[i]);
      });
    }
  }
  // Cells were laid out in (rule, n, seed) order; n is additionally sorted.
  std::stable_sort(rows.begin(), rows.end(), [&](const ExperimentRow& a, const ExperimentRow& b) {
    const auto ra = std::find(config.rules.begin(), config.rules.end(), a.rule);
    const auto rb = std::find(config.rules.begin(), config.rules.end(), b.rule);
    if (ra != rb) return ra < rb;
    return a.n < b.n;
  });
  return rows;
}

std::string experiment_csv(const std::vector<ExperimentRow>& rows) {
  std::string out(kExperimentCsvHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += std::string(to_string(r.variant)) + ',' + std::string(to_string(r.rule)) + ',' + std::to_string(r.n) +
           ',' + std::to_string(r.k) + ',' + std::to_string(r.seed) + ',' + format_double(r.l2_error) + ',' +
           format_double(r.wall_time_ms) + '\n';
  }
  return out;
}

std::string experiment_summary_json(const std::vector<ExperimentRow>& rows) {
  struct Group {
    int k = 0;
    std::vector<double> errors;
  };
  std::vector<std::tuple<std::string, std::string, std::uint64_t>> order;
  std::map<std::tuple<std::string, std::string, std::uint64_t>, Group> groups;
  for (const auto& r : rows) {
    const auto key = std::make_tuple(std::string(to_string(r.variant)), std::string(to_string(r.rule)), r.n);
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.k = r.k;
    it->second.errors.push_back(r.l2_error);
  }
  nlohmann::ordered_json doc;
  auto& cells = doc["cells"] = nlohmann::ordered_json::array();
  for (const auto& key : order) {
    const auto& g = groups.at(key);
    nlohmann::ordered_json cell;
    cell["variant"] = std::get<0>(key);
    cell["rule"] = std::get<1>(key);
    cell["n"] = std::get<2>(key);
    cell["k"] = g.k;
    cell["seeds"] = g.errors.size();
    cell["median_l2_error"] = median(g.errors);
    cells.push_back(std::move(cell));
  }
  return doc.dump(2) + "\n";
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace kerf
