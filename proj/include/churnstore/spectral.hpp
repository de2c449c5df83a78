#ifndef CHURNSTORE_SPECTRAL_HPP
#define CHURNSTORE_SPECTRAL_HPP

#include <churnstore/common.hpp>
#include <churnstore/netgen.hpp>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace churnstore {

/// Random-walk transition operator A/d over slots. Symmetric for regular
/// undirected graphs, so it serves for both forward and reverse propagation.
template <typename Scalar>
Eigen::SparseMatrix<Scalar> transition_operator(const GraphSnapshot& g) {
  const auto n = static_cast<Eigen::Index>(g.size());
  const Scalar w = Scalar(1) / Scalar(g.degree);
  std::vector<Eigen::Triplet<Scalar>> entries;
  entries.reserve(static_cast<std::size_t>(n) * g.degree);
  for (Slot s = 0; s < g.size(); ++s) {
    for (Slot t : g.neighbors(s)) entries.emplace_back(static_cast<Eigen::Index>(t), s, w);
  }
  Eigen::SparseMatrix<Scalar> op(n, n);
  op.setFromTriplets(entries.begin(), entries.end());
  return op;
}

template <typename Scalar>
struct DeflatedSpectrum {
  Scalar largest = 0;   // most positive eigenvalue orthogonal to the uniform vector
  Scalar smallest = 0;  // most negative one
  int iterations = 0;
  bool converged = false;

  Scalar magnitude() const { return std::max(std::abs(largest), std::abs(smallest)); }
};

/// Lanczos iteration with full reorthogonalisation on the operator restricted
/// to the complement of the uniform vector (the known top eigenvector of a
/// regular graph). Both extreme Ritz values are iterated until their residual
/// bounds drop below `tol`, or the Krylov space exhausts the complement.
template <typename Scalar, typename Apply>
DeflatedSpectrum<Scalar> deflated_extremes(Apply&& apply, Eigen::Index n, Scalar tol, int max_iterations,
                                           std::uint64_t seed = 0x5eed) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  DeflatedSpectrum<Scalar> out;
  if (n < 2) {
    out.converged = true;
    return out;
  }
  const Eigen::Index limit =
      std::min<Eigen::Index>(n - 1, max_iterations > 0 ? max_iterations : std::max<Eigen::Index>(n - 1, 1));
  const Vector ones = Vector::Constant(n, Scalar(1) / std::sqrt(Scalar(n)));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Vector q(n);
  for (Eigen::Index i = 0; i < n; ++i) q[i] = Scalar(gauss(rng));
  q -= ones * ones.dot(q);
  q.normalize();

  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> basis(n, limit + 1);
  std::vector<Scalar> alpha, beta;
  basis.col(0) = q;
  Vector w(n);
  for (Eigen::Index j = 0; j < limit; ++j) {
    apply(basis.col(j), w);
    const Scalar a = basis.col(j).dot(w);
    alpha.push_back(a);
    // Two passes of classical Gram-Schmidt against the basis and the deflated vector.
    for (int pass = 0; pass < 2; ++pass) {
      w -= ones * ones.dot(w);
      w -= basis.leftCols(j + 1) * (basis.leftCols(j + 1).transpose() * w);
    }
    const Scalar b = w.norm();
    const auto m = static_cast<Eigen::Index>(alpha.size());

    const bool exhausted = b <= Scalar(1e-12) || j + 1 == limit;
    if (exhausted || m % 4 == 0) {
      Vector diag = Eigen::Map<Vector>(alpha.data(), m);
      Vector sub(std::max<Eigen::Index>(m - 1, 0));
      for (Eigen::Index i = 0; i + 1 < m; ++i) sub[i] = beta[static_cast<std::size_t>(i)];
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> tri;
      tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
      const auto& theta = tri.eigenvalues();
      const auto& s = tri.eigenvectors();
      out.smallest = theta[0];
      out.largest = theta[m - 1];
      out.iterations = static_cast<int>(m);
      const Scalar r_low = std::abs(b * s(m - 1, 0));
      const Scalar r_high = std::abs(b * s(m - 1, m - 1));
      const bool full_space = m == n - 1;
      if (b <= Scalar(1e-12) || full_space || (r_low < tol && r_high < tol)) {
        out.converged = true;
        return out;
      }
      if (exhausted) return out;
    }
    beta.push_back(b);
    basis.col(j + 1) = w / b;
  }
  return out;
}

template <typename Scalar>
DeflatedSpectrum<Scalar> deflated_extremes(const Eigen::SparseMatrix<Scalar>& op, Scalar tol, int max_iterations) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  return deflated_extremes<Scalar>(
      [&op](const auto& x, Vector& y) { y.noalias() = op * x; }, op.rows(), tol, max_iterations);
}

}  // namespace churnstore

#endif  // CHURNSTORE_SPECTRAL_HPP
