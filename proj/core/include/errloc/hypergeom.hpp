#pragma once

#include <cstdint>

namespace errloc {

/// Lower tail P(X <= k) for X ~ Hypergeometric(population, successes, draws):
/// the probability that a random subset of `draws` rows holds at most `k` of
/// the `successes` marked rows. Summed term by term from log-factorials.
/// Throws InvalidArgument unless k <= min(draws, successes), draws <= population
/// and successes <= population.
double hypergeom_p(std::uint64_t population, std::uint64_t successes, std::uint64_t draws,
                   std::uint64_t k);

}  // namespace errloc
