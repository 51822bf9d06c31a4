#include <cmath>

#include "errloc/error.hpp"
#include "errloc/metrics.hpp"

namespace errloc {

std::vector<double> topsis(const std::vector<std::vector<double>>& matrix,
                           std::span<const double> weights, std::span<const CriterionSense> senses) {
  const std::size_t rows = matrix.size();
  if (rows == 0) return {};
  const std::size_t cols = weights.size();
  if (senses.size() != cols) throw InvalidArgument("topsis: weights and senses differ in length");
  for (const auto& row : matrix) {
    if (row.size() != cols) throw InvalidArgument("topsis: ragged matrix");
    for (double v : row) {
      if (!std::isfinite(v)) throw InvalidArgument("topsis: non-finite criterion value");
    }
  }
  if (rows == 1) return {1.0};

  std::vector<std::vector<double>> weighted(rows, std::vector<double>(cols, 0.0));
  std::vector<double> ideal(cols), anti(cols);
  for (std::size_t j = 0; j < cols; ++j) {
    double norm = 0.0;
    for (std::size_t i = 0; i < rows; ++i) norm += matrix[i][j] * matrix[i][j];
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < rows; ++i) {
      weighted[i][j] = norm > 0.0 ? weights[j] * matrix[i][j] / norm : 0.0;
    }
    double lo = weighted[0][j], hi = weighted[0][j];
    for (std::size_t i = 1; i < rows; ++i) {
      lo = std::min(lo, weighted[i][j]);
      hi = std::max(hi, weighted[i][j]);
    }
    ideal[j] = senses[j] == CriterionSense::benefit ? hi : lo;
    anti[j] = senses[j] == CriterionSense::benefit ? lo : hi;
  }

  std::vector<double> scores(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    double to_ideal = 0.0, to_anti = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      to_ideal += (weighted[i][j] - ideal[j]) * (weighted[i][j] - ideal[j]);
      to_anti += (weighted[i][j] - anti[j]) * (weighted[i][j] - anti[j]);
    }
    to_ideal = std::sqrt(to_ideal);
    to_anti = std::sqrt(to_anti);
    const double total = to_ideal + to_anti;
    scores[i] = total > 0.0 ? to_anti / total : 0.5;
  }
  return scores;
}

void score_strategies(std::vector<StrategyScorecard>& cards, const TopsisWeights& weights) {
  std::vector<std::vector<double>> matrix;
  std::vector<std::size_t> ranked;
  for (std::size_t i = 0; i < cards.size(); ++i) {
    auto& c = cards[i];
    c.topsis.reset();
    if (c.auc_build.value && c.generalizability.value && c.stability) {
      matrix.push_back({*c.auc_build.value, *c.generalizability.value, *c.stability});
      ranked.push_back(i);
    }
  }
  const double w[] = {weights.performance, weights.generalizability, weights.stability};
  const CriterionSense senses[] = {CriterionSense::benefit, CriterionSense::cost, CriterionSense::cost};
  const auto scores = topsis(matrix, w, senses);
  for (std::size_t k = 0; k < ranked.size(); ++k) cards[ranked[k]].topsis = scores[k];
}

}  // namespace errloc
