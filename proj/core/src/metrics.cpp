#include "errloc/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "errloc/error.hpp"

namespace errloc {

AttentionStats attention_stats(const Dataset& d, std::span<const std::size_t> indices) {
  const std::size_t total_errors = d.error_count();
  const auto big_n = static_cast<double>(d.size());
  AttentionStats s;
  s.n = indices.size();
  if (s.n > d.size()) throw InvalidArgument("attention set larger than its dataset");
  s.n_frac = static_cast<double>(s.n) / big_n;
  s.m = d.error_count(indices);
  if (total_errors > 0) s.mc = static_cast<double>(s.m) / static_cast<double>(total_errors);
  if (s.n > 0) s.error_rate = static_cast<double>(s.m) / static_cast<double>(s.n);
  if (s.mc && s.error_rate) {
    const double sum = *s.mc + *s.error_rate;
    s.harmonic = sum == 0.0 ? 0.0 : 2.0 * *s.mc * *s.error_rate / sum;
  }
  if (s.n < d.size()) {
    s.sanitized_rate = static_cast<double>(total_errors - s.m) / static_cast<double>(d.size() - s.n);
  }
  s.fixed_rate = static_cast<double>(total_errors - s.m) / big_n;
  return s;
}

AttentionStats attention_stats(const Dataset& d, const AttentionSet& att) {
  return attention_stats(d, att.indices);
}

std::size_t StepFunction::defined() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(points.begin(), points.end(), [](const auto& p) { return p.has_value(); }));
}

StepFunction step_function(const AttentionRule& rule, const Dataset& d, const BudgetGrid& grid) {
  StepFunction sf;
  sf.budgets = grid.budgets;
  sf.points.reserve(grid.size());
  for (double b : grid.budgets) {
    const auto att = materialize(rule, d, b);
    if (!att) {
      sf.points.emplace_back();
      continue;
    }
    const auto st = attention_stats(d, *att);
    if (st.mc) {
      sf.points.push_back(StepPoint{st.n_frac, *st.mc});
    } else {
      sf.points.emplace_back();
    }
  }
  return sf;
}

StepFunction undefined_step_function(const BudgetGrid& grid) {
  StepFunction sf;
  sf.budgets = grid.budgets;
  sf.points.assign(grid.size(), std::nullopt);
  return sf;
}

namespace {

std::vector<StepPoint> defined_points(const StepFunction& sf) {
  std::vector<StepPoint> out;
  for (const auto& p : sf.points) {
    if (p) out.push_back(*p);
  }
  return out;
}

}  // namespace

std::optional<double> auc(const StepFunction& sf) {
  if (sf.budgets.size() < 2) return std::nullopt;
  const auto pts = defined_points(sf);
  if (pts.empty()) return std::nullopt;
  const double n_last = pts.back().n;
  if (!(n_last > 0.0)) return std::nullopt;
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) area += pts[i].m * (pts[i + 1].n - pts[i].n);
  return area / n_last;
}

std::optional<double> generalizability(const StepFunction& build, const StepFunction& eval) {
  if (build.points.size() != eval.points.size()) {
    throw InvalidArgument("generalizability: step functions use different grids");
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < build.points.size(); ++i) {
    if (!build.points[i] || !eval.points[i]) continue;
    const double e = build.points[i]->m - eval.points[i]->m;
    num += e * e;
    den += build.points[i]->m * build.points[i]->m;
  }
  if (!(den > 0.0)) return std::nullopt;
  return num / den;
}

std::optional<double> interpolate_mc(const StepFunction& sf, double x) {
  constexpr double tol = 1e-12;
  const auto pts = defined_points(sf);
  if (pts.empty() || x < pts.front().n - tol || x > pts.back().n + tol) return std::nullopt;
  std::size_t j = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].n <= x + tol) j = i;
  }
  if (pts[j].n >= x - tol || j + 1 == pts.size()) return pts[j].m;
  const StepPoint& a = pts[j];
  const StepPoint& b = pts[j + 1];
  return a.m + (b.m - a.m) * (x - a.n) / (b.n - a.n);
}

std::optional<double> stability(std::span<const StepFunction> splits) {
  if (splits.size() < 2) throw InvalidArgument("stability needs at least two splits");
  const auto& budgets = splits.front().budgets;
  for (const auto& sf : splits) {
    if (sf.budgets.size() != budgets.size()) throw InvalidArgument("stability: grids differ");
  }
  double weighted = 0.0;
  std::size_t contributing = 0;
  for (double b : budgets) {
    std::vector<double> values;
    for (const auto& sf : splits) {
      if (const auto m = interpolate_mc(sf, b)) values.push_back(*m);
    }
    if (values.empty()) continue;
    // shifted by the first value so that equal values give exactly 0
    double mean = 0.0;
    for (double v : values) mean += v - values.front();
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - values.front() - mean) * (v - values.front() - mean);
    var /= static_cast<double>(values.size());
    weighted += var / std::sqrt(static_cast<double>(values.size()));
    ++contributing;
  }
  if (contributing == 0) return std::nullopt;
  return weighted / static_cast<double>(contributing);
}

MeanValue mean_defined(std::span<const std::optional<double>> values) {
  MeanValue out;
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& v : values) {
    if (v) {
      sum += *v;
      ++n;
    } else {
      ++out.undefined;
    }
  }
  if (n > 0) out.value = sum / static_cast<double>(n);
  return out;
}

double best_harmonic(double n_frac, double mcr) {
  if (!(n_frac > 0.0) || !(mcr > 0.0)) return 0.0;
  const double captured = std::min(n_frac, mcr);
  const double coverage = captured / mcr;
  const double rate = captured / n_frac;
  return 2.0 * coverage * rate / (coverage + rate);
}

}  // namespace errloc
