#pragma once

// Closed-form ridge regression used as a linear decoding reference.
// Solved in the dual (N x N) since voxel counts exceed sample counts:
//   W = X^T (X X^T + lambda I)^-1 Y,   Y_hat = X_test W

#include <Eigen/Dense>

#include "litemind/numerics/tensor.hpp"

namespace oracle {

template <typename T>
Eigen::MatrixXd to_eigen(const litemind::RealTensor<T>& t) {
  const std::size_t rows = t.shape.empty() ? 0 : t.shape[0];
  const std::size_t cols = rows == 0 ? 0 : t.size() / rows;
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = static_cast<double>(t.data[r * cols + c]);
  return m;
}

template <typename T>
litemind::RealTensor<T> from_eigen(const Eigen::MatrixXd& m) {
  litemind::RealTensor<T> t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      t.data[static_cast<std::size_t>(r * m.cols() + c)] = static_cast<T>(m(r, c));
  return t;
}

template <typename T>
litemind::RealTensor<T> ridge_predict(const litemind::RealTensor<T>& x_train, const litemind::RealTensor<T>& y_train,
                                      const litemind::RealTensor<T>& x_test, double lambda) {
  const Eigen::MatrixXd X = to_eigen(x_train), Y = to_eigen(y_train), Xt = to_eigen(x_test);
  Eigen::MatrixXd K = X * X.transpose();
  K.diagonal().array() += lambda;
  const Eigen::MatrixXd alpha = K.ldlt().solve(Y);
  return from_eigen<T>((Xt * X.transpose()) * alpha);
}

}  // namespace oracle
