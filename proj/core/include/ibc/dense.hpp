#pragma once
#include <cstddef>

#include <Eigen/Core>

#include "ibc/ops.hpp"

namespace ibc {

constexpr std::size_t kDefaultDenseCap = 20000;

//! √(weight) of every basis state, sectors concatenated. Scaling coefficients by it maps the
//! weighted inner product to the Euclidean one.
Eigen::VectorXd orthonormal_scale(const FockSpace &space);
Eigen::VectorXcd to_orthonormal(const FockVector &v);
FockVector from_orthonormal(FockSpacePtr space, const Eigen::VectorXcd &y);

//! Matrix of op in the orthonormal basis restricted to sectors [n_lo, n_hi] (n_hi < 0: up to
//! N_max), built column by column. All shipped operators are real there; a nonzero imaginary
//! part throws. DimensionCap when the restricted dimension exceeds cap.
Eigen::MatrixXd assemble_dense(const OperatorHandle &op, int n_lo = 0, int n_hi = -1,
                               std::size_t cap = kDefaultDenseCap);

//! Largest |A - Aᵀ| entry.
double hermiticity_defect(const Eigen::MatrixXd &A);

} // namespace ibc
