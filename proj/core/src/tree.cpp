#include "errloc/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "errloc/error.hpp"
#include "errloc/rng.hpp"

namespace errloc {

std::vector<EncodedFeature> encode_features(const Dataset& d, std::span<const std::size_t> columns,
                                            std::size_t max_bins) {
  std::vector<EncodedFeature> out;
  out.reserve(columns.size());
  for (std::size_t c : columns) {
    const FeatureColumn& col = d.feature(c);
    EncodedFeature enc;
    enc.column = c;
    enc.kind = col.kind();
    enc.codes.resize(d.size());

    if (col.kind() == ColumnKind::categorical) {
      const auto missing = static_cast<std::uint32_t>(col.levels->size());
      enc.n_codes = missing + 1;
      for (std::size_t r = 0; r < d.size(); ++r) {
        enc.codes[r] = col.codes[r] == kMissingCode ? missing : static_cast<std::uint32_t>(col.codes[r]);
      }
      out.push_back(std::move(enc));
      continue;
    }

    std::vector<double> sorted;
    sorted.reserve(d.size());
    for (double v : col.numeric) {
      if (!std::isnan(v)) sorted.push_back(v);
    }
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::pair<double, std::size_t>> distinct;  // value, count
    for (double v : sorted) {
      if (distinct.empty() || distinct.back().first != v) {
        distinct.emplace_back(v, 1);
      } else {
        ++distinct.back().second;
      }
    }

    if (max_bins == 0 || distinct.size() <= max_bins) {
      for (const auto& [v, n] : distinct) {
        enc.bin_min.push_back(v);
        enc.bin_max.push_back(v);
      }
    } else {
      const double per_bin = static_cast<double>(sorted.size()) / static_cast<double>(max_bins);
      std::size_t seen = 0;
      bool open = false;
      for (const auto& [v, n] : distinct) {
        if (!open) {
          enc.bin_min.push_back(v);
          enc.bin_max.push_back(v);
          open = true;
        }
        enc.bin_max.back() = v;
        seen += n;
        if (static_cast<double>(seen) >= per_bin * static_cast<double>(enc.bin_min.size())) {
          open = false;
        }
      }
    }
    const auto bins = static_cast<std::uint32_t>(enc.bin_max.size());
    enc.n_codes = bins + 1;
    for (std::size_t r = 0; r < d.size(); ++r) {
      const double v = col.numeric[r];
      if (std::isnan(v)) {
        enc.codes[r] = bins;
      } else {
        const auto it = std::lower_bound(enc.bin_max.begin(), enc.bin_max.end(), v);
        enc.codes[r] = static_cast<std::uint32_t>(it - enc.bin_max.begin());
      }
    }
    out.push_back(std::move(enc));
  }
  return out;
}

namespace {

struct Candidate {
  double score = -std::numeric_limits<double>::infinity();
  std::int32_t feature = -1;
  std::uint32_t split_code = 0;
  bool missing_left = false;
  double left_max = 0.0;
  double right_min = 0.0;
};

}  // namespace

class TreeBuilder {
 public:
  TreeBuilder(std::span<const EncodedFeature> features, std::span<const std::uint32_t> targets,
              std::uint32_t n_classes, const TreeParams& params)
      : features_(features), targets_(targets), k_(n_classes), params_(params), rng_(params.seed) {
    order_.resize(features.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
  }

  DecisionTree run(std::vector<std::size_t> rows) {
    rows_ = std::move(rows);
    tree_.n_classes_ = k_;
    if (rows_.empty()) throw InvalidArgument("decision tree: no training rows");
    grow(0, rows_.size(), 0);
    return std::move(tree_);
  }

 private:
  std::size_t grow(std::size_t begin, std::size_t end, std::uint32_t depth) {
    const std::size_t id = tree_.nodes_.size();
    tree_.nodes_.emplace_back();
    {
      TreeNode& node = tree_.nodes_.back();
      node.depth = depth;
      node.count = end - begin;
      node.class_counts.assign(k_, 0);
      for (std::size_t i = begin; i < end; ++i) ++node.class_counts[targets_[rows_[i]]];
      node.prediction = static_cast<std::uint32_t>(
          std::max_element(node.class_counts.begin(), node.class_counts.end()) -
          node.class_counts.begin());
    }
    const TreeNode& node = tree_.nodes_[id];
    const bool pure = node.class_counts[node.prediction] == node.count;
    const bool depth_capped = params_.max_depth >= 0 && depth >= static_cast<std::uint32_t>(params_.max_depth);
    const std::size_t min_leaf = std::max<std::size_t>(1, params_.min_leaf);
    if (pure || depth_capped || node.count < 2 * min_leaf) return id;

    const Candidate best = best_split(begin, end, node.class_counts, min_leaf);
    if (best.feature < 0) return id;

    const EncodedFeature& f = features_[best.feature];
    auto goes_left = [&](std::size_t row) {
      const std::uint32_t code = f.codes[row];
      if (f.kind == ColumnKind::categorical) return code == best.split_code;
      if (code == f.missing_code()) return best.missing_left;
      return code <= best.split_code;
    };
    const auto mid = static_cast<std::size_t>(
        std::stable_partition(rows_.begin() + begin, rows_.begin() + end, goes_left) -
        rows_.begin());

    {
      TreeNode& n = tree_.nodes_[id];
      n.feature = best.feature;
      n.split_code = best.split_code;
      n.missing_left = best.missing_left;
      n.left_max = best.left_max;
      n.right_min = best.right_min;
    }
    const std::size_t left = grow(begin, mid, depth + 1);
    const std::size_t right = grow(mid, end, depth + 1);
    tree_.nodes_[id].left = static_cast<std::int32_t>(left);
    tree_.nodes_[id].right = static_cast<std::int32_t>(right);
    return id;
  }

  // Fills present_/counts_ with the codes occurring in rows [begin, end) of
  // feature f, ascending, and their per-class counts.
  void histogram(const EncodedFeature& f, std::size_t begin, std::size_t end) {
    present_.clear();
    counts_.clear();
    const std::size_t n = end - begin;
    if (n * 4 >= f.n_codes) {
      hist_.assign(static_cast<std::size_t>(f.n_codes) * k_, 0);
      for (std::size_t i = begin; i < end; ++i) {
        const std::size_t r = rows_[i];
        ++hist_[static_cast<std::size_t>(f.codes[r]) * k_ + targets_[r]];
      }
      for (std::uint32_t c = 0; c < f.n_codes; ++c) {
        const auto first = hist_.begin() + static_cast<std::ptrdiff_t>(c) * k_;
        if (std::any_of(first, first + k_, [](std::size_t v) { return v != 0; })) {
          present_.push_back(c);
          counts_.insert(counts_.end(), first, first + k_);
        }
      }
      return;
    }
    pairs_.clear();
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t r = rows_[i];
      pairs_.emplace_back(f.codes[r], targets_[r]);
    }
    std::sort(pairs_.begin(), pairs_.end());
    for (const auto& [code, cls] : pairs_) {
      if (present_.empty() || present_.back() != code) {
        present_.push_back(code);
        counts_.resize(counts_.size() + k_, 0);
      }
      ++counts_[counts_.size() - k_ + cls];
    }
  }

  static double purity(std::span<const std::size_t> counts, std::size_t n) {
    double s = 0.0;
    for (std::size_t c : counts) s += static_cast<double>(c) * static_cast<double>(c);
    return s / static_cast<double>(n);
  }

  Candidate best_split(std::size_t begin, std::size_t end, const std::vector<std::size_t>& parent,
                       std::size_t min_leaf) {
    const std::size_t n = end - begin;
    std::size_t n_candidates = features_.size();
    if (params_.features_per_split > 0 && params_.features_per_split < features_.size()) {
      n_candidates = params_.features_per_split;
      for (std::size_t i = 0; i < n_candidates; ++i) {
        std::swap(order_[i], order_[i + rng_.below(order_.size() - i)]);
      }
      std::sort(order_.begin(), order_.begin() + static_cast<std::ptrdiff_t>(n_candidates));
    }
    const double tolerance = 1e-12 * static_cast<double>(n);

    Candidate best;
    std::vector<std::size_t> left(k_), right(k_), missing(k_);
    for (std::size_t oi = 0; oi < n_candidates; ++oi) {
      const std::size_t fi = order_[oi];
      const EncodedFeature& f = features_[fi];
      histogram(f, begin, end);
      const std::size_t present = present_.size();
      if (present < 2) continue;
      auto counts_of = [&](std::size_t i) {
        return std::span<const std::size_t>(counts_.data() + i * k_, k_);
      };
      auto consider = [&](double score, std::uint32_t code, bool missing_left, double lmax,
                          double rmin) {
        if (score > best.score + tolerance) {
          best = {score, static_cast<std::int32_t>(fi), code, missing_left, lmax, rmin};
        }
      };

      if (f.kind == ColumnKind::categorical) {
        for (std::size_t i = 0; i < present; ++i) {
          const auto lc = counts_of(i);
          std::size_t nl = 0;
          for (std::uint32_t k = 0; k < k_; ++k) {
            left[k] = lc[k];
            right[k] = parent[k] - lc[k];
            nl += lc[k];
          }
          const std::size_t nr = n - nl;
          if (nl < min_leaf || nr < min_leaf) continue;
          consider(purity(left, nl) + purity(right, nr), present_[i], false, 0.0, 0.0);
        }
        continue;
      }

      std::size_t value_codes = present;
      std::fill(missing.begin(), missing.end(), 0);
      std::size_t n_missing = 0;
      if (present_.back() == f.missing_code()) {
        --value_codes;
        const auto mc = counts_of(value_codes);
        for (std::uint32_t k = 0; k < k_; ++k) missing[k] = mc[k];
        n_missing = std::accumulate(mc.begin(), mc.end(), std::size_t{0});
      }
      if (value_codes < 2) continue;
      std::fill(left.begin(), left.end(), 0);
      std::size_t nl_values = 0;
      const std::size_t n_values = n - n_missing;
      for (std::size_t i = 0; i + 1 < value_codes; ++i) {
        const auto c = counts_of(i);
        for (std::uint32_t k = 0; k < k_; ++k) {
          left[k] += c[k];
          nl_values += c[k];
        }
        const std::size_t nr_values = n_values - nl_values;
        const bool missing_left = nl_values >= nr_values;
        std::size_t nl = nl_values, nr = nr_values;
        if (missing_left) {
          nl += n_missing;
        } else {
          nr += n_missing;
        }
        if (nl < min_leaf || nr < min_leaf) continue;
        std::vector<std::size_t>& l = scratch_left_;
        l.assign(left.begin(), left.end());
        for (std::uint32_t k = 0; k < k_; ++k) {
          if (missing_left) l[k] += missing[k];
          right[k] = parent[k] - l[k];
        }
        consider(purity(l, nl) + purity(right, nr), present_[i], missing_left,
                 f.bin_max[present_[i]], f.bin_min[present_[i + 1]]);
      }
    }
    return best;
  }

  std::span<const EncodedFeature> features_;
  std::span<const std::uint32_t> targets_;
  std::uint32_t k_;
  TreeParams params_;
  Rng rng_;
  DecisionTree tree_;
  std::vector<std::size_t> rows_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> hist_;
  std::vector<std::uint32_t> present_;
  std::vector<std::size_t> counts_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs_;
  std::vector<std::size_t> scratch_left_;
};

DecisionTree DecisionTree::fit(std::span<const EncodedFeature> features,
                               std::span<const std::uint32_t> targets, std::uint32_t n_classes,
                               std::vector<std::size_t> rows, const TreeParams& params) {
  if (n_classes == 0) throw InvalidArgument("decision tree: no classes");
  for (const auto& f : features) {
    if (f.codes.size() != targets.size()) throw InvalidArgument("decision tree: length mismatch");
  }
  for (std::uint32_t t : targets) {
    if (t >= n_classes) throw InvalidArgument("decision tree: target code out of range");
  }
  return TreeBuilder(features, targets, n_classes, params).run(std::move(rows));
}

std::size_t DecisionTree::leaf_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::size_t DecisionTree::leaf_of(std::span<const EncodedFeature> features, std::size_t row) const {
  std::size_t id = 0;
  while (!nodes_[id].is_leaf()) {
    const TreeNode& n = nodes_[id];
    const EncodedFeature& f = features[n.feature];
    const std::uint32_t code = f.codes[row];
    bool left;
    if (f.kind == ColumnKind::categorical) {
      left = code == n.split_code;
    } else if (code == f.missing_code()) {
      left = n.missing_left;
    } else {
      left = code <= n.split_code;
    }
    id = static_cast<std::size_t>(left ? n.left : n.right);
  }
  return id;
}

}  // namespace errloc
