#include "errloc/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "errloc/error.hpp"
#include "errloc/rng.hpp"

namespace errloc {

std::string_view to_string(Strategy s) noexcept {
  switch (s) {
    case Strategy::set_cover:
      return "set_cover";
    case Strategy::rank_order:
      return "rank_order";
    case Strategy::random_order:
      return "random_order";
    case Strategy::worst_label:
      return "worst_label";
    case Strategy::confidence:
      return "confidence";
    case Strategy::random_subset:
      return "random_subset";
  }
  return "unknown";
}

Strategy strategy_from_string(std::string_view name) {
  for (Strategy s : kAllStrategies) {
    if (to_string(s) == name) return s;
  }
  throw InvalidArgument("unknown strategy '" + std::string(name) + "'");
}

bool uses_slices(Strategy s) noexcept {
  return s == Strategy::set_cover || s == Strategy::rank_order || s == Strategy::random_order;
}

std::size_t budget_capacity(double b, std::size_t n) {
  return static_cast<std::size_t>(std::floor(b * static_cast<double>(n) + 1e-9));
}

BudgetGrid BudgetGrid::uniform(double max_budget, double delta) {
  if (!(max_budget > 0.0 && max_budget <= 1.0)) throw InvalidArgument("max budget must be in (0,1]");
  if (!(delta > 0.0 && delta <= max_budget)) throw InvalidArgument("delta must be in (0, max budget]");
  const auto k = static_cast<std::size_t>(std::ceil(max_budget / delta - 1e-9));
  BudgetGrid grid;
  for (std::size_t i = 1; i < k; ++i) grid.budgets.push_back(static_cast<double>(i) * delta);
  grid.budgets.push_back(max_budget);
  return grid;
}

std::uint64_t fingerprint(const Dataset& d) {
  std::uint64_t h = fnv1a("dataset");
  auto mix = [&](std::uint64_t v) { h = splitmix64(h ^ v); };
  mix(d.size());
  for (std::size_t id : d.row_ids()) mix(id);
  return h;
}

namespace {

void check_budget(double b) {
  if (!(b > 0.0 && b <= 1.0)) throw InvalidArgument("budget must be in (0,1]");
}

AttentionRule base_rule(Strategy s, const Dataset& build, double max_budget) {
  AttentionRule rule;
  rule.strategy = s;
  rule.max_budget = max_budget;
  rule.build_rows = build.size();
  rule.build_fingerprint = fingerprint(build);
  return rule;
}

std::vector<std::vector<std::size_t>> members_on(const Dataset& d, std::span<const Slice> slices) {
  std::vector<std::vector<std::size_t>> out;
  out.reserve(slices.size());
  for (const auto& s : slices) out.push_back(slice_members(s, d));
  return out;
}

// Maximal prefix of `order` whose union stays within capacity.
FitResult prefix_rule(Strategy strategy, const Dataset& build, std::span<const Slice> slices,
                      const std::vector<std::size_t>& order, double max_budget) {
  const auto members = members_on(build, slices);
  const std::size_t cap = budget_capacity(max_budget, build.size());
  std::vector<std::uint8_t> covered(build.size(), 0);
  std::size_t union_size = 0;
  SliceUnionRule body;
  for (std::size_t idx : order) {
    std::size_t added = 0;
    for (std::size_t r : members[idx]) added += covered[r] == 0;
    if (union_size + added > cap) break;
    for (std::size_t r : members[idx]) covered[r] = 1;
    union_size += added;
    body.slices.push_back(slices[idx]);
    body.cumulative_union.push_back(union_size);
  }
  if (body.slices.empty()) {
    return FitFailure{strategy, "first slice in the ordering exceeds the budget"};
  }
  AttentionRule rule = base_rule(strategy, build, max_budget);
  rule.body = std::move(body);
  return rule;
}

}  // namespace

FitResult fit_set_cover(const Dataset& build, std::span<const Slice> slices, double max_budget) {
  check_budget(max_budget);
  if (slices.empty()) return FitFailure{Strategy::set_cover, "no slices"};
  const auto& z = build.correct();
  const auto members = members_on(build, slices);
  const std::size_t cap = budget_capacity(max_budget, build.size());

  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < slices.size(); ++i) {
    if (members[i].size() <= cap) candidates.push_back(i);
  }
  if (candidates.empty()) {
    return FitFailure{Strategy::set_cover, "every slice exceeds the budget on its own"};
  }

  std::vector<std::uint8_t> covered(build.size(), 0);
  std::vector<std::uint8_t> chosen(slices.size(), 0);
  std::size_t union_size = 0;
  SliceUnionRule body;
  while (true) {
    bool have = false;
    std::size_t best = 0, best_reward = 0, best_cost = 0;
    // a beats b: zero cost first; then higher reward/cost; then higher
    // reward; then smaller support; then earlier position.
    auto better = [&](std::size_t i, std::size_t r, std::size_t c) {
      if (!have) return true;
      if ((c == 0) != (best_cost == 0)) return c == 0;
      if (c != 0) {
        // exact ratio comparison; counts are row counts, far below 2^32
        const auto lhs = static_cast<std::uint64_t>(r) * best_cost;
        const auto rhs = static_cast<std::uint64_t>(best_reward) * c;
        if (lhs != rhs) return lhs > rhs;
      }
      if (r != best_reward) return r > best_reward;
      if (members[i].size() != members[best].size()) return members[i].size() < members[best].size();
      return i < best;
    };
    for (std::size_t i : candidates) {
      if (chosen[i]) continue;
      std::size_t reward = 0, cost = 0;
      for (std::size_t r : members[i]) {
        if (covered[r]) continue;
        if (z[r] == 0) {
          ++reward;
        } else {
          ++cost;
        }
      }
      if (reward == 0) continue;
      if (better(i, reward, cost)) {
        have = true;
        best = i;
        best_reward = reward;
        best_cost = cost;
      }
    }
    if (!have || union_size + best_reward + best_cost > cap) break;
    chosen[best] = 1;
    for (std::size_t r : members[best]) covered[r] = 1;
    union_size += best_reward + best_cost;
    body.slices.push_back(slices[best]);
    body.cumulative_union.push_back(union_size);
  }
  if (body.slices.empty()) return FitFailure{Strategy::set_cover, "no slice fits within the budget"};
  AttentionRule rule = base_rule(Strategy::set_cover, build, max_budget);
  rule.body = std::move(body);
  return rule;
}

FitResult fit_rank_order(const Dataset& build, std::span<const Slice> slices, double max_budget) {
  check_budget(max_budget);
  if (slices.empty()) return FitFailure{Strategy::rank_order, "no slices"};
  std::vector<std::size_t> order(slices.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (slices[a].rank != slices[b].rank) return slices[a].rank > slices[b].rank;
    return slices[a].p_value < slices[b].p_value;
  });
  return prefix_rule(Strategy::rank_order, build, slices, order, max_budget);
}

FitResult fit_random_order(const Dataset& build, std::span<const Slice> slices, double max_budget,
                           std::uint64_t seed) {
  check_budget(max_budget);
  if (slices.empty()) return FitFailure{Strategy::random_order, "no slices"};
  std::vector<std::size_t> order(slices.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  return prefix_rule(Strategy::random_order, build, slices, order, max_budget);
}

FitResult fit_worst_label(const Dataset& build, double max_budget) {
  check_budget(max_budget);
  const auto& y = build.labels();
  const auto& z = build.correct();
  std::map<std::string, std::pair<std::size_t, std::size_t>> tally;  // label -> (rows, errors)
  for (std::size_t i = 0; i < build.size(); ++i) {
    auto& [rows, errors] = tally[y[i]];
    ++rows;
    errors += z[i] == 0;
  }
  struct Entry {
    std::string label;
    double rate;
    std::size_t rows;
  };
  std::vector<Entry> entries;
  for (const auto& [label, t] : tally) {
    entries.push_back({label, static_cast<double>(t.second) / static_cast<double>(t.first), t.first});
  }
  // std::map iteration already gives lexicographic order for ties.
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return a.rate > b.rate; });

  const std::size_t cap = budget_capacity(max_budget, build.size());
  LabelRule body;
  std::size_t total = 0;
  for (const auto& e : entries) {
    if (total + e.rows > cap) break;
    total += e.rows;
    body.labels.push_back(e.label);
    body.error_rates.push_back(e.rate);
    body.cumulative_count.push_back(total);
  }
  if (body.labels.empty()) {
    return FitFailure{Strategy::worst_label, "rows of the worst label '" + entries.front().label +
                                                 "' exceed the budget"};
  }
  AttentionRule rule = base_rule(Strategy::worst_label, build, max_budget);
  rule.body = std::move(body);
  return rule;
}

FitResult fit_confidence(const Dataset& build, double max_budget) {
  check_budget(max_budget);
  std::vector<double> conf = build.confidence();
  std::sort(conf.begin(), conf.end());
  const std::size_t cap = budget_capacity(max_budget, build.size());
  ConfidenceRule body;
  for (std::size_t i = 0; i < conf.size(); ++i) {
    if (i + 1 < conf.size() && conf[i + 1] == conf[i]) continue;
    if (i + 1 > cap) break;
    body.thresholds.push_back(conf[i]);
    body.cumulative_count.push_back(i + 1);
  }
  if (body.thresholds.empty()) {
    return FitFailure{Strategy::confidence, "rows tied at the lowest confidence exceed the budget"};
  }
  AttentionRule rule = base_rule(Strategy::confidence, build, max_budget);
  rule.body = std::move(body);
  return rule;
}

FitResult fit_random_subset(const Dataset& build, double max_budget, std::uint64_t seed) {
  check_budget(max_budget);
  if (budget_capacity(max_budget, build.size()) == 0) {
    return FitFailure{Strategy::random_subset, "budget admits no rows"};
  }
  AttentionRule rule = base_rule(Strategy::random_subset, build, max_budget);
  rule.body = RandomSubsetRule{seed};
  return rule;
}

FitResult fit_strategy(Strategy s, const Dataset& build, std::span<const Slice> slices,
                       double max_budget, std::uint64_t seed) {
  switch (s) {
    case Strategy::set_cover:
      return fit_set_cover(build, slices, max_budget);
    case Strategy::rank_order:
      return fit_rank_order(build, slices, max_budget);
    case Strategy::random_order:
      return fit_random_order(build, slices, max_budget, seed);
    case Strategy::worst_label:
      return fit_worst_label(build, max_budget);
    case Strategy::confidence:
      return fit_confidence(build, max_budget);
    case Strategy::random_subset:
      return fit_random_subset(build, max_budget, seed);
  }
  throw InvalidArgument("unknown strategy");
}

std::size_t active_prefix(const AttentionRule& rule, double b) {
  const std::size_t cap = budget_capacity(b, rule.build_rows);
  auto within = [&](const std::vector<std::size_t>& cumulative) {
    return static_cast<std::size_t>(
        std::upper_bound(cumulative.begin(), cumulative.end(), cap) - cumulative.begin());
  };
  return std::visit(
      [&](const auto& body) -> std::size_t {
        using T = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<T, SliceUnionRule>) {
          return within(body.cumulative_union);
        } else if constexpr (std::is_same_v<T, LabelRule> || std::is_same_v<T, ConfidenceRule>) {
          return within(body.cumulative_count);
        } else {
          return cap > 0 ? 1 : 0;
        }
      },
      rule.body);
}

std::optional<AttentionSet> materialize(const AttentionRule& rule, const Dataset& target, double b) {
  if (!(b > 0.0) || b > rule.max_budget + 1e-12) {
    throw InvalidArgument("materialize: budget must be in (0, rule max budget]");
  }
  const std::size_t prefix = active_prefix(rule, b);
  if (prefix == 0) return std::nullopt;

  AttentionSet out;
  out.budget = b;
  out.strategy = rule.strategy;
  out.prefix = prefix;

  std::visit(
      [&](const auto& body) {
        using T = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<T, SliceUnionRule>) {
          std::vector<std::uint8_t> in(target.size(), 0);
          for (std::size_t i = 0; i < prefix; ++i) {
            const auto mask = slice_mask(body.slices[i], target);
            for (std::size_t r = 0; r < mask.size(); ++r) in[r] |= mask[r];
          }
          for (std::size_t r = 0; r < in.size(); ++r) {
            if (in[r]) out.indices.push_back(r);
          }
        } else if constexpr (std::is_same_v<T, LabelRule>) {
          if (!target.has_labels()) throw DataError("worst-label rule needs labels on the target");
          const auto& y = target.labels();
          const std::vector<std::string> chosen(body.labels.begin(), body.labels.begin() + prefix);
          for (std::size_t r = 0; r < y.size(); ++r) {
            if (std::find(chosen.begin(), chosen.end(), y[r]) != chosen.end()) out.indices.push_back(r);
          }
        } else if constexpr (std::is_same_v<T, ConfidenceRule>) {
          if (!target.has_confidence()) throw DataError("confidence rule needs confidences on the target");
          const double t = body.thresholds[prefix - 1];
          const auto& c = target.confidence();
          for (std::size_t r = 0; r < c.size(); ++r) {
            if (c[r] <= t) out.indices.push_back(r);
          }
        } else {
          std::vector<std::size_t> perm(target.size());
          std::iota(perm.begin(), perm.end(), std::size_t{0});
          Rng rng(body.seed);
          rng.shuffle(std::span<std::size_t>(perm));
          perm.resize(budget_capacity(b, target.size()));
          std::sort(perm.begin(), perm.end());
          out.indices = std::move(perm);
        }
      },
      rule.body);
  return out;
}

}  // namespace errloc
