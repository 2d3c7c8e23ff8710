#pragma once

#include <cstddef>

#include <boost/math/distributions/beta.hpp>

namespace ckm {

/// One-sided Clopper-Pearson lower confidence bound on a binomial rate.
inline double binomial_lower_bound(std::size_t successes, std::size_t trials, double confidence = 0.99) {
  if (trials == 0 || successes == 0) {
    return 0.0;
  }
  const boost::math::beta_distribution<double> dist(static_cast<double>(successes),
                                                    static_cast<double>(trials - successes + 1));
  return boost::math::quantile(dist, 1.0 - confidence);
}

}  // namespace ckm
