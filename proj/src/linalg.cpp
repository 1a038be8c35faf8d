#include "hpsbl/linalg.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <random>

namespace hpsbl {

SparseSpd::SparseSpd(Eigen::Index n, const std::vector<Eigen::Triplet<double, int>> &triplets) {
  std::vector<Eigen::Triplet<double, int>> low;
  low.reserve(triplets.size());
  for (const auto &t : triplets) {
    if (t.row() >= t.col())
      low.push_back(t);
    else
      low.emplace_back(t.col(), t.row(), t.value());
  }
  lower_.resize(n, n);
  lower_.setFromTriplets(low.begin(), low.end());
  lower_.prune(0.0);
  lower_.makeCompressed();
}

SparseSpd::SparseSpd(const Eigen::MatrixXd &dense) {
  std::vector<Eigen::Triplet<double, int>> trips;
  for (Eigen::Index i = 0; i < dense.rows(); ++i)
    for (Eigen::Index j = 0; j <= i; ++j)
      if (dense(i, j) != 0.0)
        trips.emplace_back(static_cast<int>(i), static_cast<int>(j), dense(i, j));
  *this = SparseSpd(dense.rows(), trips);
}

Eigen::VectorXd SparseSpd::multiply(const Eigen::VectorXd &x) const {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(size());
  for (int i = 0; i < lower_.outerSize(); ++i) {
    for (Storage::InnerIterator it(lower_, i); it; ++it) {
      const int j = it.col();
      y[i] += it.value() * x[j];
      if (j != i)
        y[j] += it.value() * x[i];
    }
  }
  return y;
}

Eigen::VectorXd SparseSpd::diagonal() const { return lower_.diagonal(); }

Eigen::MatrixXd SparseSpd::to_dense() const {
  Eigen::MatrixXd d = Eigen::MatrixXd(lower_);
  Eigen::MatrixXd full = d + d.transpose();
  full.diagonal() = d.diagonal();
  return full;
}

Eigen::SparseMatrix<double> SparseSpd::to_full() const {
  Eigen::SparseMatrix<double> low(lower_);
  Eigen::SparseMatrix<double> up = low.transpose();
  Eigen::SparseMatrix<double> full = low + up;
  for (int i = 0; i < full.outerSize(); ++i)
    full.coeffRef(i, i) *= 0.5;
  return full;
}

namespace {

// Symmetric adjacency lists without the diagonal.
std::vector<std::vector<int>> adjacency(const SparseSpd &a) {
  const int n = static_cast<int>(a.size());
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  const auto &l = a.lower();
  for (int i = 0; i < n; ++i)
    for (SparseSpd::Storage::InnerIterator it(l, i); it; ++it)
      if (it.col() != i) {
        adj[i].push_back(it.col());
        adj[it.col()].push_back(i);
      }
  return adj;
}

// BFS levels from `root` restricted to unvisited nodes; returns the last level.
std::vector<int> last_level(const std::vector<std::vector<int>> &adj, int root,
                            const std::vector<char> &done, int &depth) {
  std::vector<int> dist(adj.size(), -1);
  std::vector<int> level{root}, last{root};
  dist[root] = 0;
  depth = 0;
  while (!level.empty()) {
    last = level;
    std::vector<int> next;
    for (int v : level)
      for (int w : adj[v])
        if (!done[w] && dist[w] < 0) {
          dist[w] = dist[v] + 1;
          next.push_back(w);
        }
    if (!next.empty())
      ++depth;
    level = std::move(next);
  }
  return last;
}

} // namespace

std::vector<int> reverse_cuthill_mckee(const SparseSpd &a) {
  const int n = static_cast<int>(a.size());
  const auto adj = adjacency(a);
  std::vector<int> degree(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    degree[i] = static_cast<int>(adj[i].size());

  std::vector<char> done(static_cast<std::size_t>(n), 0);
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(n));

  for (;;) {
    int seed = -1;
    for (int i = 0; i < n; ++i)
      if (!done[i] && (seed < 0 || degree[i] < degree[seed]))
        seed = i;
    if (seed < 0)
      break;
    // pseudo-peripheral root (George-Liu)
    int depth = 0;
    auto last = last_level(adj, seed, done, depth);
    for (int round = 0; round < 8; ++round) {
      int cand = *std::min_element(last.begin(), last.end(),
                                   [&](int u, int v) { return degree[u] < degree[v]; });
      int d2 = 0;
      auto last2 = last_level(adj, cand, done, d2);
      if (d2 <= depth)
        break;
      seed = cand, depth = d2, last = std::move(last2);
    }

    std::deque<int> queue{seed};
    done[seed] = 1;
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      order.push_back(v);
      std::vector<int> nbrs;
      for (int w : adj[v])
        if (!done[w]) {
          done[w] = 1;
          nbrs.push_back(w);
        }
      std::sort(nbrs.begin(), nbrs.end(), [&](int u, int w) {
        return degree[u] != degree[w] ? degree[u] < degree[w] : u < w;
      });
      queue.insert(queue.end(), nbrs.begin(), nbrs.end());
    }
  }
  std::reverse(order.begin(), order.end());
  return order;
}

SparseCholesky::SparseCholesky(const SparseSpd &a) : n_(static_cast<int>(a.size())) {
  perm_ = reverse_cuthill_mckee(a);
  std::vector<int> inv(static_cast<std::size_t>(n_));
  for (int k = 0; k < n_; ++k)
    inv[perm_[k]] = k;

  // Permuted lower-triangle entries grouped by row.
  std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(n_));
  const auto &l = a.lower();
  for (int i = 0; i < n_; ++i)
    for (SparseSpd::Storage::InnerIterator it(l, i); it; ++it) {
      int r = inv[i], c = inv[it.col()];
      if (r < c)
        std::swap(r, c);
      rows[r].emplace_back(c, it.value());
    }

  first_.assign(static_cast<std::size_t>(n_), 0);
  start_.assign(static_cast<std::size_t>(n_) + 1, 0);
  for (int i = 0; i < n_; ++i) {
    int f = i;
    for (const auto &e : rows[i])
      f = std::min(f, e.first);
    first_[i] = f;
    start_[i + 1] = start_[i] + static_cast<std::size_t>(i - f + 1);
  }
  values_.assign(start_[n_], 0.0);
  for (int i = 0; i < n_; ++i)
    for (const auto &e : rows[i])
      values_[start_[i] + static_cast<std::size_t>(e.first - first_[i])] += e.second;

  for (int i = 0; i < n_; ++i) {
    double *li = values_.data() + start_[i];
    const int fi = first_[i];
    for (int j = fi; j < i; ++j) {
      const double *lj = values_.data() + start_[j];
      const int fj = first_[j];
      const int k0 = std::max(fi, fj);
      double s = li[j - fi];
      for (int k = k0; k < j; ++k)
        s -= li[k - fi] * lj[k - fj];
      li[j - fi] = s / lj[j - fj];
    }
    double d = li[i - fi];
    for (int k = fi; k < i; ++k)
      d -= li[k - fi] * li[k - fi];
    if (!(d > 0.0))
      throw NotPositiveDefiniteError(perm_[i]);
    li[i - fi] = std::sqrt(d);
  }
}

Eigen::VectorXd SparseCholesky::solve(const Eigen::VectorXd &b) const {
  Eigen::VectorXd y(n_);
  for (int k = 0; k < n_; ++k)
    y[k] = b[perm_[k]];
  for (int i = 0; i < n_; ++i) {
    const double *li = values_.data() + start_[i];
    double s = y[i];
    for (int k = first_[i]; k < i; ++k)
      s -= li[k - first_[i]] * y[k];
    y[i] = s / li[i - first_[i]];
  }
  for (int i = n_ - 1; i >= 0; --i) {
    const double *li = values_.data() + start_[i];
    y[i] /= li[i - first_[i]];
    const double yi = y[i];
    for (int k = first_[i]; k < i; ++k)
      y[k] -= li[k - first_[i]] * yi;
  }
  Eigen::VectorXd x(n_);
  for (int k = 0; k < n_; ++k)
    x[perm_[k]] = y[k];
  return x;
}

Eigen::VectorXd cholesky_solve(const SparseSpd &a, const Eigen::VectorXd &rhs) {
  const SparseCholesky chol(a);
  Eigen::VectorXd x = chol.solve(rhs);
  const double bnorm = rhs.norm();
  if (bnorm == 0.0)
    return x;
  const Eigen::VectorXd r = rhs - a.multiply(x);
  if (r.norm() > kDirectResidualTarget * bnorm)
    x += chol.solve(r);
  return x;
}

PcgResult pcg(const SparseSpd &a, const Eigen::VectorXd &rhs, double tol) {
  const Eigen::Index n = a.size();
  PcgResult res;
  res.x = Eigen::VectorXd::Zero(n);
  const double bnorm = rhs.norm();
  if (bnorm == 0.0)
    return res;
  const Eigen::VectorXd inv_diag = a.diagonal().cwiseInverse();
  Eigen::VectorXd r = rhs;
  Eigen::VectorXd z = inv_diag.cwiseProduct(r);
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  const long max_iter = 20 * static_cast<long>(n);
  for (long it = 1; it <= max_iter; ++it) {
    const Eigen::VectorXd ap = a.multiply(p);
    const double alpha = rz / p.dot(ap);
    res.x += alpha * p;
    r -= alpha * ap;
    res.iterations = static_cast<int>(it);
    res.relative_residual = r.norm() / bnorm;
    if (res.relative_residual <= tol) {
      // guard against drift of the recursive residual
      const double true_res = (rhs - a.multiply(res.x)).norm() / bnorm;
      if (true_res <= tol) {
        res.relative_residual = true_res;
        return res;
      }
      r = rhs - a.multiply(res.x);
    }
    z = inv_diag.cwiseProduct(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  throw ConvergenceError("pcg: no convergence after " + std::to_string(max_iter) +
                         " iterations (relative residual " +
                         std::to_string(res.relative_residual) + ")");
}

Eigen::VectorXd pcg_solve(const SparseSpd &a, const Eigen::VectorXd &rhs, double tol) {
  return pcg(a, rhs, tol).x;
}

Eigen::VectorXd spd_solve(const SparseSpd &a, const Eigen::VectorXd &rhs,
                          Eigen::Index pcg_threshold) {
  if (a.size() > pcg_threshold)
    return pcg_solve(a, rhs);
  return cholesky_solve(a, rhs);
}

GenEig max_gen_eig(const Eigen::MatrixXd &K, const Eigen::MatrixXd &M, double tol) {
  constexpr int kMaxIterations = 100000;
  const Eigen::Index n = K.rows();
  if (K.cols() != n || M.rows() != n || M.cols() != n)
    throw InputError("max_gen_eig: dimension mismatch");
  GenEig out;
  if (n == 0)
    return out;
  const Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefiniteError(-1);

  // Deterministic generic start vector: avoids accidental orthogonality to
  // the dominant eigenvector on symmetric meshes.
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i)
    x[i] = normal(rng);
  x /= std::sqrt(x.dot(M * x));

  double mu = x.dot(K * x);
  for (int it = 1; it <= kMaxIterations; ++it) {
    Eigen::VectorXd y = llt.solve(K * x);
    const double ynorm = std::sqrt(std::max(0.0, y.dot(M * y)));
    if (ynorm == 0.0) {
      // K x = 0 for an M-generic x: K vanishes.
      out.value = 0.0;
      out.vector = x;
      out.iterations = it;
      return out;
    }
    x = y / ynorm;
    const double mu_new = x.dot(K * x);
    const bool done = std::abs(mu_new - mu) < tol * std::abs(mu_new);
    mu = mu_new;
    if (done) {
      out.value = mu;
      out.vector = x;
      out.iterations = it;
      return out;
    }
  }
  throw ConvergenceError("max_gen_eig: no convergence after 1e5 iterations");
}

} // namespace hpsbl
