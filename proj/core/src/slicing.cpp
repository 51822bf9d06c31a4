#include "errloc/slicing.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "errloc/csv.hpp"
#include "errloc/error.hpp"
#include "errloc/hypergeom.hpp"
#include "errloc/parallel.hpp"

namespace errloc {

Predicate Predicate::interval(std::string feature, double lo, double hi) {
  if (!(lo <= hi)) throw InvalidArgument("interval predicate needs lo <= hi");
  Predicate p;
  p.feature = std::move(feature);
  p.kind = ColumnKind::numeric;
  p.lo = lo;
  p.hi = hi;
  return p;
}

Predicate Predicate::category_set(std::string feature, std::vector<std::string> values) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  if (values.empty()) throw InvalidArgument("category predicate needs at least one value");
  Predicate p;
  p.feature = std::move(feature);
  p.kind = ColumnKind::categorical;
  p.values = std::move(values);
  return p;
}

std::size_t default_min_support(std::size_t build_rows) {
  const auto proportional = static_cast<std::size_t>(std::ceil(0.005 * static_cast<double>(build_rows)));
  return std::max<std::size_t>(20, proportional);
}

double default_accuracy_threshold(const Dataset& build) {
  const double acc = 1.0 - build.error_rate();
  return acc - 2.0 * std::sqrt(acc * (1.0 - acc) / static_cast<double>(build.size()));
}

std::vector<std::uint8_t> slice_mask(const Slice& slice, const Dataset& d) {
  std::vector<std::uint8_t> mask(d.size(), 1);
  for (const Predicate& p : slice.predicates) {
    const auto fi = d.find_feature(p.feature);
    if (!fi) throw SchemaError("dataset has no feature '" + p.feature + "'");
    const FeatureColumn& col = d.feature(*fi);
    if (col.kind() != p.kind) throw SchemaError("feature '" + p.feature + "' has a different kind");
    if (p.kind == ColumnKind::numeric) {
      for (std::size_t r = 0; r < d.size(); ++r) {
        const double v = col.numeric[r];
        mask[r] &= static_cast<std::uint8_t>(!std::isnan(v) && v >= p.lo && v <= p.hi);
      }
    } else {
      std::vector<std::uint8_t> allowed(col.levels->size(), 0);
      for (const auto& v : p.values) {
        if (const auto code = col.code_of(v)) allowed[*code] = 1;
      }
      for (std::size_t r = 0; r < d.size(); ++r) {
        const std::int32_t c = col.codes[r];
        mask[r] &= static_cast<std::uint8_t>(c != kMissingCode && allowed[c]);
      }
    }
  }
  return mask;
}

std::vector<std::size_t> slice_members(const Slice& slice, const Dataset& d) {
  const auto mask = slice_mask(slice, d);
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < mask.size(); ++r) {
    if (mask[r]) rows.push_back(r);
  }
  return rows;
}

std::vector<std::vector<std::size_t>> feature_combinations(std::size_t n_features, int max_combo) {
  if (max_combo < 1 || max_combo > 3) throw InvalidArgument("max_combo must be in 1..3");
  std::vector<std::vector<std::size_t>> out;
  const auto limit = std::min<std::size_t>(static_cast<std::size_t>(max_combo), n_features);
  for (std::size_t size = 1; size <= limit; ++size) {
    std::vector<std::size_t> combo(size);
    std::iota(combo.begin(), combo.end(), std::size_t{0});
    while (true) {
      out.push_back(combo);
      // Advance to the next lexicographic combination.
      std::size_t i = size;
      while (i > 0 && combo[i - 1] == n_features - size + i - 1) --i;
      if (i == 0) break;
      ++combo[i - 1];
      for (std::size_t j = i; j < size; ++j) combo[j] = combo[j - 1] + 1;
    }
  }
  return out;
}

ErrorTree grow_tree(const Dataset& build, std::span<const std::size_t> features,
                    const TreeParams& params) {
  if (features.empty()) throw InvalidArgument("grow_tree: empty feature combination");
  for (std::size_t f : features) {
    if (f >= build.num_features()) throw InvalidArgument("grow_tree: feature index out of range");
  }
  const auto& z = build.correct();
  ErrorTree out;
  out.encoded = encode_features(build, features, 0);
  std::vector<std::uint32_t> targets(z.begin(), z.end());
  std::vector<std::size_t> rows(build.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  out.tree = DecisionTree::fit(out.encoded, targets, 2, std::move(rows), params);
  return out;
}

std::optional<std::vector<Predicate>> leaf_predicates(const ErrorTree& tree, const Dataset& build,
                                                      std::size_t leaf) {
  const auto& nodes = tree.tree.nodes();
  // Parent links, recovered from the pre-order layout.
  std::vector<std::int32_t> parent(nodes.size(), -1);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!nodes[i].is_leaf()) {
      parent[nodes[i].left] = static_cast<std::int32_t>(i);
      parent[nodes[i].right] = static_cast<std::int32_t>(i);
    }
  }
  if (leaf == 0) return std::nullopt;

  struct Bounds {
    bool used = false;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    std::vector<std::uint8_t> allowed;  // categorical, indexed by level code
  };
  std::vector<Bounds> bounds(tree.encoded.size());

  for (std::size_t child = leaf; parent[child] >= 0; child = static_cast<std::size_t>(parent[child])) {
    const TreeNode& node = nodes[parent[child]];
    const bool left = node.left == static_cast<std::int32_t>(child);
    const EncodedFeature& f = tree.encoded[node.feature];
    Bounds& b = bounds[node.feature];
    if (f.kind == ColumnKind::numeric) {
      b.used = true;
      if (left) {
        b.hi = std::min(b.hi, node.left_max);
      } else {
        b.lo = std::max(b.lo, node.right_min);
      }
      continue;
    }
    const FeatureColumn& col = build.feature(f.column);
    if (!b.used) {
      b.used = true;
      b.allowed.assign(col.levels->size(), 0);
      for (std::int32_t c : col.codes) {
        if (c != kMissingCode) b.allowed[c] = 1;
      }
    }
    if (node.split_code == f.missing_code()) {
      if (left) std::fill(b.allowed.begin(), b.allowed.end(), 0);
    } else if (left) {
      for (std::size_t c = 0; c < b.allowed.size(); ++c) b.allowed[c] &= c == node.split_code;
    } else {
      b.allowed[node.split_code] = 0;
    }
  }

  std::vector<Predicate> preds;
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    const Bounds& b = bounds[i];
    if (!b.used) continue;
    const FeatureColumn& col = build.feature(tree.encoded[i].column);
    if (col.kind() == ColumnKind::numeric) {
      if (!(b.lo <= b.hi)) return std::nullopt;
      preds.push_back(Predicate::interval(col.name(), b.lo, b.hi));
    } else {
      std::vector<std::string> values;
      for (std::size_t c = 0; c < b.allowed.size(); ++c) {
        if (b.allowed[c]) values.push_back(col.level(static_cast<std::int32_t>(c)));
      }
      if (values.empty()) return std::nullopt;
      preds.push_back(Predicate::category_set(col.name(), std::move(values)));
    }
  }
  if (preds.empty()) return std::nullopt;
  return preds;
}

namespace {

std::string canonical_key(const std::vector<Predicate>& preds) {
  std::ostringstream key;
  for (const auto& p : preds) {
    key << p.feature << '\x1f';
    if (p.kind == ColumnKind::numeric) {
      key << 'n' << csv::format_number(p.lo) << ':' << csv::format_number(p.hi);
    } else {
      key << 'c';
      for (const auto& v : p.values) key << v << '\x1e';
    }
    key << '\x1d';
  }
  return key.str();
}

// Solves the small dense system a * x = b in place (partial pivoting).
std::vector<double> solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    if (std::abs(a[col][col]) < 1e-300) return std::vector<double>(n, 0.0);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double factor = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= factor * a[col][c];
      b[r] -= factor * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
    x[i] = s / a[i][i];
  }
  return x;
}

}  // namespace

std::vector<Slice> rank_slices(std::vector<Slice> slices) {
  if (slices.empty()) return slices;
  // Canonical (x, y) order keeps every floating-point sum independent of the
  // input order.
  std::vector<std::pair<double, double>> points;
  points.reserve(slices.size());
  for (const auto& s : slices) {
    points.emplace_back(std::log(static_cast<double>(std::max<std::size_t>(s.support, 1))), s.error_rate());
  }
  std::vector<std::pair<double, double>> sorted = points;
  std::sort(sorted.begin(), sorted.end());

  std::vector<double> xs;
  for (const auto& [x, y] : sorted) {
    if (xs.empty() || xs.back() != x) xs.push_back(x);
  }
  const std::size_t degree = std::min<std::size_t>(2, xs.size() - 1);
  double mean_x = 0.0;
  for (const auto& [x, y] : sorted) mean_x += x;
  mean_x /= static_cast<double>(sorted.size());

  const std::size_t terms = degree + 1;
  std::vector<std::vector<double>> normal(terms, std::vector<double>(terms, 0.0));
  std::vector<double> rhs(terms, 0.0);
  for (const auto& [x, y] : sorted) {
    std::array<double, 5> pw{1.0, 0.0, 0.0, 0.0, 0.0};
    for (std::size_t k = 1; k < pw.size(); ++k) pw[k] = pw[k - 1] * (x - mean_x);
    for (std::size_t i = 0; i < terms; ++i) {
      rhs[i] += pw[i] * y;
      for (std::size_t j = 0; j < terms; ++j) normal[i][j] += pw[i + j];
    }
  }
  const auto coef = solve(normal, rhs);
  auto fit = [&](double x) {
    double v = 0.0, p = 1.0;
    for (std::size_t i = 0; i < terms; ++i, p *= x - mean_x) v += coef[i] * p;
    return v;
  };

  // Running minimum over increasing support: a larger slice never sits
  // under a higher reference curve than a smaller one.
  std::vector<double> curve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    curve[i] = i == 0 ? fit(xs[i]) : std::min(curve[i - 1], fit(xs[i]));
  }
  auto reference = [&](double x) {
    return curve[static_cast<std::size_t>(std::lower_bound(xs.begin(), xs.end(), x) - xs.begin())];
  };

  std::vector<double> residual(slices.size());
  for (std::size_t i = 0; i < slices.size(); ++i) {
    residual[i] = points[i].second - reference(points[i].first);
  }
  const auto [lo_it, hi_it] = std::minmax_element(residual.begin(), residual.end());
  const double lo = *lo_it, span = *hi_it - *lo_it;
  for (std::size_t i = 0; i < slices.size(); ++i) {
    slices[i].rank = span < 1e-12 ? 0.5 : std::clamp((residual[i] - lo) / span, 0.0, 1.0);
  }
  return slices;
}

SliceSearch search_slices(const Dataset& build, const SliceConfig& cfg) {
  if (build.num_features() == 0) throw InvalidArgument("find_slices: dataset has no feature columns");
  if (cfg.max_combo < 1 || cfg.max_combo > 3) throw InvalidArgument("max_combo must be in 1..3");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw InvalidArgument("alpha must be in (0,1)");

  SliceSearch out;
  out.min_support = cfg.min_support.value_or(default_min_support(build.size()));
  out.accuracy_threshold = cfg.accuracy_threshold.value_or(default_accuracy_threshold(build));
  if (build.size() < out.min_support) {
    throw InvalidArgument("find_slices: build has fewer rows than min_support");
  }

  const auto& z = build.correct();
  const std::size_t n = build.size();
  const std::size_t correct_total = n - build.error_count();

  TreeParams params;
  params.max_depth = cfg.tree.max_depth;
  params.min_leaf = cfg.tree.min_leaf.value_or(out.min_support);

  const auto combos = feature_combinations(build.num_features(), cfg.max_combo);
  std::vector<std::vector<Slice>> found(combos.size());
  std::vector<std::size_t> leaves(combos.size(), 0);

  parallel_for(
      combos.size(),
      [&](std::size_t ci) {
        const ErrorTree tree = grow_tree(build, combos[ci], params);
        const auto& nodes = tree.tree.nodes();
        for (std::size_t id = 0; id < nodes.size(); ++id) {
          if (!nodes[id].is_leaf()) continue;
          ++leaves[ci];
          auto preds = leaf_predicates(tree, build, id);
          if (!preds) continue;
          Slice s;
          s.predicates = std::move(*preds);
          const auto mask = slice_mask(s, build);
          std::size_t correct = 0;
          for (std::size_t r = 0; r < n; ++r) {
            if (mask[r]) {
              ++s.support;
              correct += z[r];
            }
          }
          if (s.support < out.min_support) continue;
          s.errors = s.support - correct;
          s.accuracy = static_cast<double>(correct) / static_cast<double>(s.support);
          if (s.accuracy > out.accuracy_threshold) continue;
          s.p_value = hypergeom_p(n, correct_total, s.support, correct);
          if (!(s.p_value < cfg.alpha)) continue;
          found[ci].push_back(std::move(s));
        }
      },
      cfg.workers);

  std::set<std::string> seen;
  for (std::size_t ci = 0; ci < combos.size(); ++ci) {
    out.leaves_examined += leaves[ci];
    for (auto& s : found[ci]) {
      if (seen.insert(canonical_key(s.predicates)).second) out.slices.push_back(std::move(s));
    }
  }
  out.trees_grown = combos.size();
  out.slices = rank_slices(std::move(out.slices));
  return out;
}

std::vector<Slice> find_slices(const Dataset& build, const SliceConfig& cfg) {
  return search_slices(build, cfg).slices;
}

std::string render(const Predicate& p) {
  std::string out = "(";
  if (p.kind == ColumnKind::categorical) {
    out += p.feature + " ∈ {";
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      if (i) out += ", ";
      out += p.values[i];
    }
    out += "}";
  } else if (std::isinf(p.lo) && std::isinf(p.hi)) {
    out += p.feature + " present";
  } else if (std::isinf(p.lo)) {
    out += p.feature + " ≤ " + csv::format_number(p.hi);
  } else if (std::isinf(p.hi)) {
    out += p.feature + " ≥ " + csv::format_number(p.lo);
  } else {
    out += csv::format_number(p.lo) + " ≤ " + p.feature + " ≤ " + csv::format_number(p.hi);
  }
  return out + ")";
}

std::string render(const Slice& s) {
  std::string out;
  for (std::size_t i = 0; i < s.predicates.size(); ++i) {
    if (i) out += " & ";
    out += render(s.predicates[i]);
  }
  return out;
}

}  // namespace errloc
