#pragma once

#include "hpsbl/errors.hpp"
#include "hpsbl/poly_quad.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cmath>
#include <vector>

namespace hpsbl {

// ---------------------------------------------------------------------------
// Banded symmetric matrices (1D systems)
// ---------------------------------------------------------------------------

/// Symmetric n x n matrix with half-bandwidth k, lower band stored column-wise:
/// band_(d, j) = A(j + d, j), 0 <= d <= k.
template <typename Scalar = double> class BandedSpd {
public:
  BandedSpd(Eigen::Index n, Eigen::Index k) : n_(n), k_(k), band_(MatrixX<Scalar>::Zero(k + 1, n)) {}

  Eigen::Index size() const { return n_; }
  Eigen::Index bandwidth() const { return k_; }

  /// Adds v to A(i,j) (and implicitly A(j,i)). |i-j| must not exceed k.
  void add(Eigen::Index i, Eigen::Index j, Scalar v) {
    if (i < j)
      std::swap(i, j);
    assert(i - j <= k_);
    band_(i - j, j) += v;
  }

  Scalar operator()(Eigen::Index i, Eigen::Index j) const {
    if (i < j)
      std::swap(i, j);
    return i - j <= k_ ? band_(i - j, j) : Scalar(0);
  }

  VectorX<Scalar> multiply(const VectorX<Scalar> &x) const {
    VectorX<Scalar> y = VectorX<Scalar>::Zero(n_);
    for (Eigen::Index j = 0; j < n_; ++j) {
      y[j] += band_(0, j) * x[j];
      for (Eigen::Index d = 1; d <= k_ && j + d < n_; ++d) {
        y[j + d] += band_(d, j) * x[j];
        y[j] += band_(d, j) * x[j + d];
      }
    }
    return y;
  }

  MatrixX<Scalar> to_dense() const {
    MatrixX<Scalar> a = MatrixX<Scalar>::Zero(n_, n_);
    for (Eigen::Index j = 0; j < n_; ++j)
      for (Eigen::Index d = 0; d <= k_ && j + d < n_; ++d)
        a(j + d, j) = a(j, j + d) = band_(d, j);
    return a;
  }

  const MatrixX<Scalar> &band() const { return band_; }

private:
  Eigen::Index n_, k_;
  MatrixX<Scalar> band_;
};

/// L L^T factorization of a BandedSpd; L keeps the band layout.
template <typename Scalar = double> class BandedCholesky {
public:
  explicit BandedCholesky(const BandedSpd<Scalar> &a) : n_(a.size()), k_(a.bandwidth()), l_(a.band()) {
    for (Eigen::Index j = 0; j < n_; ++j) {
      Scalar diag = l_(0, j);
      for (Eigen::Index c = std::max<Eigen::Index>(0, j - k_); c < j; ++c)
        diag -= at(j, c) * at(j, c);
      if (!(diag > Scalar(0)))
        throw NotPositiveDefiniteError(j);
      const Scalar ljj = std::sqrt(diag);
      l_(0, j) = ljj;
      for (Eigen::Index i = j + 1; i <= std::min(n_ - 1, j + k_); ++i) {
        Scalar s = l_(i - j, j);
        for (Eigen::Index c = std::max<Eigen::Index>(0, i - k_); c < j; ++c)
          s -= at(i, c) * at(j, c);
        l_(i - j, j) = s / ljj;
      }
    }
  }

  VectorX<Scalar> solve(const VectorX<Scalar> &b) const {
    VectorX<Scalar> x = b;
    for (Eigen::Index i = 0; i < n_; ++i) {
      Scalar s = x[i];
      for (Eigen::Index c = std::max<Eigen::Index>(0, i - k_); c < i; ++c)
        s -= at(i, c) * x[c];
      x[i] = s / l_(0, i);
    }
    for (Eigen::Index i = n_ - 1; i >= 0; --i) {
      Scalar s = x[i];
      for (Eigen::Index r = i + 1; r <= std::min(n_ - 1, i + k_); ++r)
        s -= at(r, i) * x[r];
      x[i] = s / l_(0, i);
    }
    return x;
  }

private:
  Scalar at(Eigen::Index i, Eigen::Index j) const { return l_(i - j, j); }

  Eigen::Index n_, k_;
  MatrixX<Scalar> l_;
};

inline constexpr double kDirectResidualTarget = 1e-12;

/// Direct solve with one step of iterative refinement when the relative
/// residual exceeds 1e-12.
template <typename Scalar>
VectorX<Scalar> cholesky_solve(const BandedSpd<Scalar> &a, const VectorX<Scalar> &rhs) {
  const BandedCholesky<Scalar> chol(a);
  VectorX<Scalar> x = chol.solve(rhs);
  const Scalar bnorm = rhs.norm();
  if (bnorm == Scalar(0))
    return x;
  const VectorX<Scalar> r = rhs - a.multiply(x);
  if (r.norm() > Scalar(kDirectResidualTarget) * bnorm)
    x += chol.solve(r);
  return x;
}

// ---------------------------------------------------------------------------
// Sparse symmetric matrices (2D systems)
// ---------------------------------------------------------------------------

/// Structurally symmetric SPD matrix; only the lower triangle is stored, in
/// compressed rows, without explicit zeros.
class SparseSpd {
public:
  using Storage = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

  SparseSpd() = default;
  /// Triplets may address either triangle; entries are summed into the lower one.
  SparseSpd(Eigen::Index n, const std::vector<Eigen::Triplet<double, int>> &triplets);
  explicit SparseSpd(const Eigen::MatrixXd &dense);

  Eigen::Index size() const { return lower_.rows(); }
  Eigen::Index nonzeros() const { return lower_.nonZeros(); }
  const Storage &lower() const { return lower_; }

  Eigen::VectorXd multiply(const Eigen::VectorXd &x) const;
  Eigen::VectorXd diagonal() const;
  Eigen::MatrixXd to_dense() const;
  /// Full symmetric matrix (both triangles).
  Eigen::SparseMatrix<double> to_full() const;

private:
  Storage lower_;
};

/// Reverse Cuthill-McKee permutation: perm[new] = old.
std::vector<int> reverse_cuthill_mckee(const SparseSpd &a);

/// Envelope (profile) Cholesky after RCM reordering.
class SparseCholesky {
public:
  explicit SparseCholesky(const SparseSpd &a);
  Eigen::VectorXd solve(const Eigen::VectorXd &b) const;
  Eigen::Index envelope_size() const { return static_cast<Eigen::Index>(values_.size()); }

private:
  int n_ = 0;
  std::vector<int> perm_;     // perm_[new] = old
  std::vector<int> first_;    // first column of row i's envelope
  std::vector<std::size_t> start_; // offset of row i in values_
  std::vector<double> values_;     // row i holds L(i, first_[i] .. i)
};

Eigen::VectorXd cholesky_solve(const SparseSpd &a, const Eigen::VectorXd &rhs);

struct PcgResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Jacobi-preconditioned conjugate gradients. Throws ConvergenceError after
/// 20 n iterations without reaching tol.
PcgResult pcg(const SparseSpd &a, const Eigen::VectorXd &rhs, double tol = 1e-12);
Eigen::VectorXd pcg_solve(const SparseSpd &a, const Eigen::VectorXd &rhs, double tol = 1e-12);

/// Default DOF count above which 2D systems go to PCG instead of Cholesky.
inline constexpr Eigen::Index kPcgThreshold = 200000;

/// Direct below `pcg_threshold`, PCG above.
Eigen::VectorXd spd_solve(const SparseSpd &a, const Eigen::VectorXd &rhs,
                          Eigen::Index pcg_threshold = kPcgThreshold);

// ---------------------------------------------------------------------------
// Extremal generalized eigenvalue
// ---------------------------------------------------------------------------

struct GenEig {
  double value = 0.0;
  Eigen::VectorXd vector; // M-normalised
  int iterations = 0;
};

/// Largest mu with K z = mu M z by power iteration on M^{-1} K. Stops when the
/// relative change of the Rayleigh quotient drops below tol; throws
/// ConvergenceError after 1e5 iterations.
GenEig max_gen_eig(const Eigen::MatrixXd &K, const Eigen::MatrixXd &M, double tol = 1e-8);

} // namespace hpsbl
