/* Copyright 2026 The Cisspin Authors. All Rights Reserved.
Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at
    http://www.apache.org/licenses/LICENSE-2.0
Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

#include <complex>
#include <Eigen/Dense>

namespace ciss {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Kronecker product, first factor most significant.
inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline double hermiticity_defect(const Matrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const Matrix& m, double tol = 1e-10) {
  return hermiticity_defect(m) <= tol;
}

// Column-stacking vectorization; Eigen matrices are column-major so this is a view.
inline CVector vec(const Matrix& rho) {
  return Eigen::Map<const CVector>(rho.data(), rho.size());
}

inline Matrix unvec(const CVector& v, Eigen::Index d) {
  return Eigen::Map<const Matrix>(v.data(), d, d);
}

// Superoperator of rho -> A rho B, column-stacking convention: B^T (x) A.
inline Matrix sandwich_superop(const Matrix& a, const Matrix& b) {
  return kron(b.transpose(), a);
}

inline Matrix left_mult_superop(const Matrix& a) {
  Matrix id = Matrix::Identity(a.rows(), a.cols());
  return kron(id, a);
}

inline Matrix right_mult_superop(const Matrix& b) {
  Matrix id = Matrix::Identity(b.rows(), b.cols());
  return kron(b.transpose(), id);
}

}  // namespace ciss
