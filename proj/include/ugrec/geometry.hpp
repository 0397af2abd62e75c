#pragma once

#include <Eigen/Core>

#include <cmath>

#include "ugrec/error.hpp"

// Forward geometry of the model as free functions over Eigen expressions.
// Everything here is scalar-generic and allocation-light; the concrete model
// instantiates these with double.

namespace ugrec {

/// Normals with squared norm below this are degenerate: the hyperplane
/// projection would divide by (almost) zero.
inline constexpr double kDegenerateNormalSq = 1e-12;

template <typename Derived>
using PlainVector = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>;

/// Numerically stable softmax. Entries are strictly positive and sum to 1.
template <typename Derived>
PlainVector<Derived> softmax(const Eigen::MatrixBase<Derived>& z) {
  detail::require(z.size() > 0, "softmax: empty input");
  using Scalar = typename Derived::Scalar;
  const Scalar zmax = z.maxCoeff();
  PlainVector<Derived> e = (z.array() - zmax).exp().matrix();
  return e / e.sum();
}

template <typename Derived>
PlainVector<Derived> relu(const Eigen::MatrixBase<Derived>& s) {
  using Scalar = typename Derived::Scalar;
  return s.cwiseMax(Scalar(0));
}

/// TransD projection into a relation space: (r_p e_p^T + I) e, evaluated in
/// the rank-1 form r_p (e_p . e) + e. The k x k matrix is never materialized.
template <typename DerivedE, typename DerivedP, typename DerivedR>
PlainVector<DerivedE> transd_project(const Eigen::MatrixBase<DerivedE>& e,
                                     const Eigen::MatrixBase<DerivedP>& e_p,
                                     const Eigen::MatrixBase<DerivedR>& r_p) {
  detail::require(e.size() == e_p.size() && e.size() == r_p.size(),
                  "transd_project: dimension mismatch");
  return e + r_p * e_p.dot(e);
}

/// Removes the component of e along r_hat: e - (r_hat . e) r_hat / |r_hat|^2.
/// The output is orthogonal to r_hat and invariant to rescaling of r_hat.
template <typename DerivedE, typename DerivedR>
PlainVector<DerivedE> hyperplane_project(const Eigen::MatrixBase<DerivedE>& e,
                                         const Eigen::MatrixBase<DerivedR>& r_hat) {
  detail::require(e.size() == r_hat.size(), "hyperplane_project: dimension mismatch");
  const auto n2 = r_hat.squaredNorm();
  if (!(n2 > kDegenerateNormalSq))
    throw NumericalError("hyperplane_project: degenerate normal (|r|^2 <= 1e-12)");
  return e - r_hat * (r_hat.dot(e) / n2);
}

/// Projects v back into the Euclidean unit ball; vectors already inside are
/// returned unchanged.
template <typename Derived>
PlainVector<Derived> project_unit_ball(const Eigen::MatrixBase<Derived>& v) {
  const auto n = v.norm();
  if (n <= typename Derived::Scalar(1)) return v;
  return v / n;
}

/// Head-tail attention gate: softmax(ReLU(W [left : right] + b)).
/// The concatenation order is head first, then tail.
template <typename DerivedH, typename DerivedT, typename DerivedW, typename DerivedB>
PlainVector<DerivedB> attention_vector(const Eigen::MatrixBase<DerivedH>& left,
                                       const Eigen::MatrixBase<DerivedT>& right,
                                       const Eigen::MatrixBase<DerivedW>& weight,
                                       const Eigen::MatrixBase<DerivedB>& bias) {
  const auto k = bias.size();
  detail::require(left.size() == right.size(), "attention_vector: head/tail dimension mismatch");
  detail::require(weight.rows() == k && weight.cols() == 2 * left.size(),
                  "attention_vector: weight shape mismatch");
  PlainVector<DerivedB> s = weight.leftCols(left.size()) * left +
                            weight.rightCols(right.size()) * right + bias;
  return softmax(relu(s));
}

/// Scores h against t through diag(r): sum_i h_i r_i t_i. Symmetric in h, t.
template <typename DerivedH, typename DerivedT, typename DerivedR>
typename DerivedH::Scalar distmult(const Eigen::MatrixBase<DerivedH>& h,
                                   const Eigen::MatrixBase<DerivedT>& t,
                                   const Eigen::MatrixBase<DerivedR>& r) {
  detail::require(h.size() == t.size() && h.size() == r.size(),
                  "distmult: dimension mismatch");
  return h.cwiseProduct(t).dot(r);
}

}  // namespace ugrec
