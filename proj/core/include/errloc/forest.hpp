#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "errloc/dataset.hpp"
#include "errloc/tree.hpp"

namespace errloc {

struct ForestParams {
  std::size_t n_trees = 100;
  /// Negative means unlimited.
  int max_depth = -1;
  std::size_t min_leaf = 5;
  /// 0 picks round(sqrt(p)).
  std::size_t features_per_split = 0;
  std::uint64_t seed = 0;
  bool bootstrap = true;
  /// Quantile bins per numeric feature; 0 keeps exact thresholds.
  std::size_t max_bins = 255;
};

struct Predictions {
  std::vector<std::string> labels;
  /// Fraction of trees voting for the predicted label.
  std::vector<double> confidence;
};

/// Bagged CART ensemble with majority vote.
class RandomForest {
 public:
  /// Requires labels on `train`. A single-class target gives a forest that
  /// predicts that class with confidence 1.
  static RandomForest fit(const Dataset& train, const ForestParams& params = {});

  /// Features are matched by name; categorical levels unseen in training
  /// never take the "equals" branch. Vote ties go to the label that sorts first.
  Predictions predict(const Dataset& d) const;

  const std::vector<std::string>& classes() const noexcept { return classes_; }
  std::size_t size() const noexcept { return trees_.size(); }

 private:
  struct Feature {
    std::string name;
    ColumnKind kind = ColumnKind::numeric;
    std::vector<std::string> levels;
  };
  std::vector<Feature> features_;
  std::vector<std::string> classes_;
  std::vector<DecisionTree> trees_;
};

}  // namespace errloc
