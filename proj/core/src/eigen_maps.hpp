#pragma once

#include <Eigen/Core>

namespace selrcn::detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

inline ConstMatrixMap cmap(const double* p, Eigen::Index rows, Eigen::Index cols) {
  return ConstMatrixMap(p, rows, cols);
}
inline MatrixMap map(double* p, Eigen::Index rows, Eigen::Index cols) { return MatrixMap(p, rows, cols); }

}  // namespace selrcn::detail
