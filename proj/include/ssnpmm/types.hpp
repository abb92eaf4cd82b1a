#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace ssnpmm {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Triplet = Eigen::Triplet<double, int>;
using Mask = Eigen::Matrix<bool, Eigen::Dynamic, 1>;

}  // namespace ssnpmm
