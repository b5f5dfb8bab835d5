#include "kerf/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "json.hpp"
#include "kerf/error.hpp"
#include "kerf/kernels.hpp"

namespace kerf {

namespace {

// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      carry_ += (sum_ - t) + v;
    } else {
      carry_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

class Evaluator {
 public:
  explicit Evaluator(const KerfModel& model)
      : model_(model), cache_(model.params().k), profile_(model.params().d), diff_(model.params().d) {}

  double operator()(std::span<const double> x) {
    const auto& params = model_.params();
    check_point(x, params.d);
    CompensatedSum numerator, denominator;
    for (const auto& s : model_.train()) {
      const double w = weight(x, s.x);
      if (w == 0.0) continue;
      numerator.add(w * s.y);
      denominator.add(w);
    }
    const double den = denominator.value();
    if (!(den > 0.0)) return model_.global_mean();
    const double prediction = numerator.value() / den;
    // Keep the convex-combination bound exact under rounding.
    return std::clamp(prediction, lo(), hi());
  }

 private:
  double weight(std::span<const double> x, std::span<const double> xi) {
    const auto& params = model_.params();
    if (model_.variant() == Variant::centered) {
      for (int j = 0; j < params.d; ++j) profile_[j] = match_length(x[j], xi[j], params.k);
      return cache_(profile_);
    }
    for (int j = 0; j < params.d; ++j) diff_[j] = std::abs(xi[j] - x[j]);
    return uniform_kernel(diff_, params);
  }

  double lo() {
    if (!bounds_) compute_bounds();
    return min_y_;
  }
  double hi() {
    if (!bounds_) compute_bounds();
    return max_y_;
  }
  void compute_bounds() {
    const auto [mn, mx] = std::minmax_element(
        model_.train().begin(), model_.train().end(),
        [](const SamplePoint& a, const SamplePoint& b) { return a.y < b.y; });
    min_y_ = mn->y;
    max_y_ = mx->y;
    bounds_ = true;
  }

  const KerfModel& model_;
  CenteredKernelCache cache_;
  MatchProfile profile_;
  std::vector<double> diff_;
  bool bounds_ = false;
  double min_y_ = 0.0;
  double max_y_ = 0.0;
};

}  // namespace

KerfModel::KerfModel(std::vector<SamplePoint> train, KernelParams params, Variant variant)
    : train_(std::move(train)), params_(params), variant_(variant) {
  params_.validate();
  check_samples(train_, params_.d);
  CompensatedSum total;
  for (const auto& s : train_) total.add(s.y);
  global_mean_ = total.value() / static_cast<double>(train_.size());
}

double KerfModel::predict(std::span<const double> x) const {
  Evaluator eval(*this);
  return eval(x);
}

std::vector<double> KerfModel::predict_batch(std::span<const Point> queries, unsigned threads) const {
  std::vector<double> out(queries.size());
  const unsigned workers =
      std::clamp<unsigned>(threads, 1, static_cast<unsigned>(std::max<std::size_t>(queries.size(), 1)));
  auto work = [&](unsigned w) {
    Evaluator eval(*this);
    for (std::size_t i = w; i < queries.size(); i += workers) out[i] = eval(queries[i]);
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }
  return out;
}

double kerf_predict(const KerfModel& model, std::span<const double> x) { return model.predict(x); }

double kerf_predict_finite(const ForestModel& forest, std::span<const SamplePoint> train,
                           std::span<const double> x) {
  return LeafStatistics(forest, train).kerf_predict(x);
}

double l2_error(const std::function<double(std::span<const double>)>& predictor,
                std::span<const SamplePoint> test) {
  if (test.empty()) throw UsageError("l2_error needs a non-empty test set");
  CompensatedSum total;
  for (const auto& s : test) {
    const double r = predictor(s.x) - s.y;
    total.add(r * r);
  }
  return total.value() / static_cast<double>(test.size());
}

double l2_error(const KerfModel& model, std::span<const SamplePoint> test, unsigned threads) {
  if (test.empty()) throw UsageError("l2_error needs a non-empty test set");
  std::vector<Point> queries;
  queries.reserve(test.size());
  for (const auto& s : test) queries.push_back(s.x);
  const auto predictions = model.predict_batch(queries, threads);
  CompensatedSum total;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const double r = predictions[i] - test[i].y;
    total.add(r * r);
  }
  return total.value() / static_cast<double>(test.size());
}

std::string serialize_model(const KerfModel& model) {
  nlohmann::ordered_json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["variant"] = std::string(to_string(model.variant()));
  doc["k"] = model.params().k;
  doc["d"] = model.params().d;
  auto& train = doc["train"] = nlohmann::ordered_json::array();
  for (const auto& s : model.train()) {
    train.push_back({{"x", s.x}, {"y", s.y}});
  }
  return doc.dump(1) + "\n";
}

KerfModel deserialize_model(std::string_view json) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError(std::string("model is not valid JSON: ") + e.what());
  }
  try {
    const int version = doc.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw UsageError("unsupported model format_version " + std::to_string(version) +
                       " (this build reads version " + std::to_string(kModelFormatVersion) + ")");
    }
    const Variant variant = parse_variant(doc.at("variant").get<std::string>());
    const KernelParams params{doc.at("k").get<int>(), doc.at("d").get<int>()};
    std::vector<SamplePoint> train;
    for (const auto& row : doc.at("train")) {
      train.push_back({row.at("x").get<std::vector<double>>(), row.at("y").get<double>()});
    }
    return KerfModel(std::move(train), params, variant);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("malformed model document: ") + e.what());
  }
}

}  // namespace kerf
