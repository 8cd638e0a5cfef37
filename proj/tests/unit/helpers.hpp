#pragma once
#include <cmath>
#include <random>

#include "ibc/grid.hpp"

namespace ibc::test {

inline FockVector random_vector(FockSpacePtr space, std::mt19937_64 &rng) {
  std::normal_distribution<double> n;
  FockVector v(space);
  for (int s = 0; s <= space->n_max(); ++s)
    for (Eigen::Index i = 0; i < v.sector(s).size(); ++i)
      v.sector(s)[i] = {n(rng), n(rng)};
  return v;
}

inline double rel_diff(const FockVector &a, const FockVector &b) {
  FockVector d = a;
  d -= b;
  return norm(d) / std::max(1e-300, std::max(norm(a), norm(b)));
}

} // namespace ibc::test
