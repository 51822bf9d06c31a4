#include "errloc/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "errloc/error.hpp"
#include "errloc/parallel.hpp"
#include "errloc/rng.hpp"

namespace errloc {

RandomForest RandomForest::fit(const Dataset& train, const ForestParams& params) {
  if (params.n_trees == 0) throw InvalidArgument("forest: n_trees must be at least 1");
  const auto& labels = train.labels();

  RandomForest rf;
  rf.classes_ = labels;
  std::sort(rf.classes_.begin(), rf.classes_.end());
  rf.classes_.erase(std::unique(rf.classes_.begin(), rf.classes_.end()), rf.classes_.end());
  for (const auto& f : train.features()) {
    Feature out{f.name(), f.kind(), {}};
    if (f.kind() == ColumnKind::categorical) out.levels = *f.levels;
    rf.features_.push_back(std::move(out));
  }

  std::vector<std::uint32_t> targets(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    targets[i] = static_cast<std::uint32_t>(
        std::lower_bound(rf.classes_.begin(), rf.classes_.end(), labels[i]) - rf.classes_.begin());
  }

  std::vector<std::size_t> columns(train.num_features());
  std::iota(columns.begin(), columns.end(), std::size_t{0});
  const auto encoded = encode_features(train, columns, params.max_bins);

  std::size_t mtry = params.features_per_split;
  if (mtry == 0) {
    mtry = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(columns.size()))));
  }
  mtry = std::clamp<std::size_t>(mtry, 1, std::max<std::size_t>(1, columns.size()));

  const auto n_classes = static_cast<std::uint32_t>(rf.classes_.size());
  rf.trees_.resize(params.n_trees);
  parallel_for(params.n_trees, [&](std::size_t t) {
    const std::uint64_t seed = derive_seed(params.seed, "tree", t);
    Rng rng(seed);
    std::vector<std::size_t> rows(train.size());
    if (params.bootstrap) {
      for (auto& r : rows) r = static_cast<std::size_t>(rng.below(train.size()));
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    TreeParams tp;
    tp.max_depth = params.max_depth;
    tp.min_leaf = params.min_leaf;
    tp.features_per_split = mtry;
    tp.seed = rng.next();
    rf.trees_[t] = DecisionTree::fit(encoded, targets, n_classes, std::move(rows), tp);
  });
  return rf;
}

Predictions RandomForest::predict(const Dataset& d) const {
  // Per training feature: the target column, plus a level remap for categoricals.
  std::vector<const FeatureColumn*> cols;
  std::vector<std::vector<std::int32_t>> remap(features_.size());
  for (std::size_t f = 0; f < features_.size(); ++f) {
    const auto idx = d.find_feature(features_[f].name);
    if (!idx) throw SchemaError("forest: dataset lacks feature '" + features_[f].name + "'");
    const FeatureColumn& col = d.feature(*idx);
    if (col.kind() != features_[f].kind) {
      throw SchemaError("forest: feature '" + features_[f].name + "' changed kind");
    }
    cols.push_back(&col);
    if (col.kind() == ColumnKind::categorical) {
      const auto& train_levels = features_[f].levels;
      for (const auto& level : *col.levels) {
        const auto it = std::lower_bound(train_levels.begin(), train_levels.end(), level);
        remap[f].push_back(it != train_levels.end() && *it == level
                               ? static_cast<std::int32_t>(it - train_levels.begin())
                               : -2);
      }
    }
  }

  auto goes_left = [&](const TreeNode& node, std::size_t row) {
    const std::size_t f = static_cast<std::size_t>(node.feature);
    const FeatureColumn& col = *cols[f];
    if (col.kind() == ColumnKind::categorical) {
      const std::int32_t code = col.codes[row];
      // The training missing slot is the code after the last level.
      const auto missing = static_cast<std::int32_t>(features_[f].levels.size());
      const std::int32_t mapped = code == kMissingCode ? missing : remap[f][code];
      return mapped == static_cast<std::int32_t>(node.split_code);
    }
    const double v = col.numeric[row];
    if (std::isnan(v)) return node.missing_left;
    return v <= node.left_max + (node.right_min - node.left_max) / 2.0;
  };

  Predictions out;
  out.labels.resize(d.size());
  out.confidence.resize(d.size());
  std::vector<std::size_t> votes(classes_.size());
  for (std::size_t row = 0; row < d.size(); ++row) {
    std::fill(votes.begin(), votes.end(), 0);
    for (const auto& tree : trees_) {
      const auto& nodes = tree.nodes();
      std::size_t id = 0;
      while (!nodes[id].is_leaf()) {
        id = static_cast<std::size_t>(goes_left(nodes[id], row) ? nodes[id].left : nodes[id].right);
      }
      ++votes[nodes[id].prediction];
    }
    const auto best = static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    out.labels[row] = classes_[best];
    out.confidence[row] = static_cast<double>(votes[best]) / static_cast<double>(trees_.size());
  }
  return out;
}

}  // namespace errloc
