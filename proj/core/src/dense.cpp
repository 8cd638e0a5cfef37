#include "ibc/dense.hpp"

#include <cmath>
#include <string>

#include "ibc/error.hpp"

namespace ibc {

Eigen::VectorXd orthonormal_scale(const FockSpace &space) {
  Eigen::VectorXd s(Eigen::Index(space.dimension()));
  Eigen::Index pos = 0;
  for (int n = 0; n <= space.n_max(); ++n) {
    const auto &w = space.sector(n).weights();
    s.segment(pos, w.size()) = (space.source_weight() * w).cwiseSqrt();
    pos += w.size();
  }
  return s;
}

Eigen::VectorXcd to_orthonormal(const FockVector &v) {
  return orthonormal_scale(v.space()).cast<std::complex<double>>().cwiseProduct(v.flatten());
}

FockVector from_orthonormal(FockSpacePtr space, const Eigen::VectorXcd &y) {
  const Eigen::VectorXd s = orthonormal_scale(*space);
  return FockVector::from_flat(space, y.cwiseQuotient(s.cast<std::complex<double>>()));
}

Eigen::MatrixXd assemble_dense(const OperatorHandle &op, int n_lo, int n_hi, std::size_t cap) {
  const FockSpace &space = *op.space;
  if (n_hi < 0 || n_hi > space.n_max())
    n_hi = space.n_max();
  if (n_lo < 0 || n_lo > n_hi)
    throw ConfigError("assemble_dense: empty sector range");
  const std::size_t begin = space.offset(n_lo);
  const std::size_t end = space.offset(n_hi) + space.sector(n_hi).size();
  const std::size_t dim = end - begin;
  if (dim > cap)
    throw DimensionCap("dense assembly of " + std::to_string(dim) + " columns exceeds the cap of " +
                       std::to_string(cap));
  const Eigen::VectorXd s = orthonormal_scale(space);
  Eigen::MatrixXd A(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  Eigen::VectorXcd e = Eigen::VectorXcd::Zero(Eigen::Index(space.dimension()));
  for (std::size_t j = 0; j < dim; ++j) {
    const Eigen::Index col = Eigen::Index(begin + j);
    e[col] = 1.0 / s[col];
    const Eigen::VectorXcd y = op(FockVector::from_flat(op.space, e)).flatten();
    e[col] = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      const Eigen::Index row = Eigen::Index(begin + i);
      const std::complex<double> v = s[row] * y[row];
      if (v.imag() != 0.0)
        throw Error("assemble_dense: operator '" + op.name + "' is not real in the orthonormal basis");
      A(Eigen::Index(i), Eigen::Index(j)) = v.real();
    }
  }
  return A;
}

double hermiticity_defect(const Eigen::MatrixXd &A) {
  return (A - A.transpose()).cwiseAbs().maxCoeff();
}

} // namespace ibc
