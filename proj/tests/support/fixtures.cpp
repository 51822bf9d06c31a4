#include "fixtures.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <unistd.h>

namespace errloc::fixture {

Dataset with_correctness(std::vector<FeatureColumn> features, const std::vector<int>& correct,
                         std::vector<std::string> labels) {
  if (labels.empty()) {
    labels.resize(correct.size());
    for (std::size_t i = 0; i < correct.size(); ++i) labels[i] = i % 3 == 0 ? "b" : "a";
  }
  std::vector<std::string> preds(labels);
  for (std::size_t i = 0; i < correct.size(); ++i) {
    if (!correct[i]) preds[i] = labels[i] == "a" ? "b" : "a";
  }
  DatasetParts parts;
  parts.features = std::move(features);
  parts.labels = std::move(labels);
  parts.predictions = std::move(preds);
  return derive_z(Dataset(std::move(parts)));
}

Dataset table1_dataset() {
  const std::size_t n = 1000;
  std::vector<int> correct(n, 1);
  for (std::size_t r = 0; r < 13; ++r) correct[r] = 0;
  for (std::size_t r = 37; r < 45; ++r) correct[r] = 0;
  for (std::size_t r = 100; r < 129; ++r) correct[r] = 0;
  std::vector<double> id(n);
  for (std::size_t r = 0; r < n; ++r) id[r] = static_cast<double>(r);
  std::vector<FeatureColumn> f;
  f.push_back(FeatureColumn::make_numeric("id", std::move(id)));
  return with_correctness(std::move(f), correct);
}

SetInstance set_instance(const std::vector<int>& correct,
                         const std::vector<std::vector<std::size_t>>& members) {
  const std::size_t n = correct.size();
  std::vector<FeatureColumn> cols;
  std::vector<double> id(n);
  for (std::size_t r = 0; r < n; ++r) id[r] = static_cast<double>(r);
  cols.push_back(FeatureColumn::make_numeric("id", std::move(id)));
  std::vector<Slice> slices;
  for (std::size_t k = 0; k < members.size(); ++k) {
    std::vector<std::string> cell(n, "out");
    for (std::size_t r : members[k]) cell[r] = "in";
    const std::string name = "s" + std::to_string(k);
    cols.push_back(FeatureColumn::make_categorical(name, cell));
    Slice s;
    s.predicates.push_back(Predicate::category_set(name, {"in"}));
    slices.push_back(std::move(s));
  }
  SetInstance out{with_correctness(std::move(cols), correct), {}};
  for (auto& s : slices) {
    const auto rows = slice_members(s, out.data);
    s.support = rows.size();
    s.errors = out.data.error_count(rows);
    s.accuracy = s.support ? 1.0 - s.error_rate() : 1.0;
  }
  out.slices = std::move(slices);
  return out;
}

Dataset synthetic(std::uint64_t seed, const SyntheticSpec& spec) {
  Rng rng(seed);
  const char* colors[] = {"blue", "green", "red", "yellow"};
  const char* shapes[] = {"circle", "square", "triangle"};
  std::vector<double> age(spec.rows), income(spec.rows);
  std::vector<std::string> color(spec.rows), shape(spec.rows), labels(spec.rows), preds(spec.rows);
  std::vector<double> conf(spec.rows);
  for (std::size_t r = 0; r < spec.rows; ++r) {
    age[r] = static_cast<double>(18 + rng.below(73));
    income[r] = rng.uniform() < 0.05 ? std::nan("") : std::round(rng.uniform() * 1000.0) / 10.0;
    color[r] = rng.uniform() < 0.03 ? "" : colors[rng.below(4)];
    shape[r] = shapes[rng.below(3)];
    const std::size_t y = rng.below(spec.n_labels);
    labels[r] = "L" + std::to_string(y);
    const bool planted = age[r] >= 60 || color[r] == "red";
    const bool wrong = rng.uniform() < (planted ? spec.planted_error : spec.base_error);
    std::size_t yhat = y;
    if (wrong) yhat = (y + 1 + rng.below(spec.n_labels - 1)) % spec.n_labels;
    preds[r] = "L" + std::to_string(yhat);
    // Wrong predictions tend to come with lower confidence; values on a 1/20 grid.
    const double c = wrong ? 0.5 + 0.35 * rng.uniform() : 0.6 + 0.4 * rng.uniform();
    conf[r] = std::round(c * 20.0) / 20.0;
  }
  DatasetParts parts;
  parts.features.push_back(FeatureColumn::make_numeric("age", std::move(age)));
  parts.features.push_back(FeatureColumn::make_numeric("income", std::move(income)));
  parts.features.push_back(FeatureColumn::make_categorical("color", color));
  parts.features.push_back(FeatureColumn::make_categorical("shape", shape));
  parts.labels = std::move(labels);
  parts.predictions = std::move(preds);
  if (spec.confidence) parts.confidence = std::move(conf);
  return derive_z(Dataset(std::move(parts)));
}

namespace {
std::atomic<unsigned> counter{0};
}

TempDir::TempDir() {
  const auto base = std::filesystem::temp_directory_path();
  for (int attempt = 0; attempt < 1000; ++attempt) {
    auto candidate = base / ("errloc_test_" + std::to_string(::getpid()) + "_" +
                             std::to_string(counter.fetch_add(1)));
    if (std::filesystem::create_directory(candidate)) {
      path_ = candidate;
      return;
    }
  }
  throw std::runtime_error("cannot create a temporary directory");
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace errloc::fixture
