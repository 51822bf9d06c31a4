#include "errloc/hypergeom.hpp"

#include <algorithm>
#include <cmath>

#include "errloc/error.hpp"

namespace errloc {

namespace {

double log_choose(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace

double hypergeom_p(std::uint64_t population, std::uint64_t successes, std::uint64_t draws,
                   std::uint64_t k) {
  if (draws > population || successes > population || k > std::min(draws, successes)) {
    throw InvalidArgument("hypergeom_p: parameters out of range");
  }
  const std::uint64_t failures = population - successes;
  const std::uint64_t lo = draws > failures ? draws - failures : 0;
  if (k < lo) return 0.0;
  const std::uint64_t hi = std::min(draws, successes);
  if (k >= hi) return 1.0;

  const auto N = static_cast<double>(population);
  const auto K = static_cast<double>(successes);
  const auto n = static_cast<double>(draws);
  const double log_total = log_choose(N, n);
  // Sum the shorter tail; the complement of the upper tail is used when the
  // lower tail holds more terms past the mode.
  const double mode = std::floor((n + 1.0) * (K + 1.0) / (N + 2.0));
  auto term = [&](std::uint64_t i) {
    const auto x = static_cast<double>(i);
    return std::exp(log_choose(K, x) + log_choose(N - K, n - x) - log_total);
  };
  if (static_cast<double>(k) <= mode) {
    double sum = 0.0;
    for (std::uint64_t i = lo; i <= k; ++i) sum += term(i);
    return std::clamp(sum, 0.0, 1.0);
  }
  double upper = 0.0;
  for (std::uint64_t i = hi; i > k; --i) upper += term(i);
  return std::clamp(1.0 - upper, 0.0, 1.0);
}

}  // namespace errloc
