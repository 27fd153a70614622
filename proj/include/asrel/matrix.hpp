#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace asrel {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

}  // namespace asrel
