#pragma once

// Legendre polynomials, Gauss / Gauss-Lobatto rules and the hierarchical
// (integrated Legendre) shape set on the reference interval [-1,1].
// Everything here is templated on the scalar type and header-only.

#include <Eigen/Dense>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

namespace hpsbl {

template <typename Scalar> using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar> using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// P_n(t) together with its first two derivatives.
template <typename Scalar> struct LegendreValue {
  Scalar value;
  Scalar d1;
  Scalar d2;
};

/// Three-term recurrence, differentiated twice. Valid for any real t.
template <typename Scalar> LegendreValue<Scalar> legendre_with_derivatives(int n, Scalar t) {
  Scalar p0 = 1, p1 = t;
  Scalar d0 = 0, d1 = 1;
  Scalar s0 = 0, s1 = 0;
  if (n == 0)
    return {p0, d0, s0};
  for (int k = 2; k <= n; ++k) {
    const Scalar a = Scalar(2 * k - 1) / Scalar(k);
    const Scalar c = Scalar(k - 1) / Scalar(k);
    const Scalar p2 = a * t * p1 - c * p0;
    const Scalar d2 = a * (p1 + t * d1) - c * d0;
    const Scalar s2 = a * (Scalar(2) * d1 + t * s1) - c * s0;
    p0 = p1, p1 = p2;
    d0 = d1, d1 = d2;
    s0 = s1, s1 = s2;
  }
  return {p1, d1, s1};
}

template <typename Scalar> Scalar legendre_eval(int p, Scalar t) {
  assert(p >= 0);
  Scalar p0 = 1, p1 = t;
  if (p == 0)
    return p0;
  for (int k = 2; k <= p; ++k) {
    const Scalar p2 = (Scalar(2 * k - 1) * t * p1 - Scalar(k - 1) * p0) / Scalar(k);
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

/// Nodes and weights of a rule on [-1,1]; `order` is the exactness degree.
template <typename Scalar = double> struct QuadRule {
  VectorX<Scalar> nodes;
  VectorX<Scalar> weights;
  int order = 0;

  Eigen::Index size() const { return nodes.size(); }

  template <typename F> Scalar integrate(F &&f) const {
    Scalar sum = 0;
    for (Eigen::Index i = 0; i < nodes.size(); ++i)
      sum += weights[i] * f(nodes[i]);
    return sum;
  }

  /// The rule transported to [a,b].
  QuadRule mapped(Scalar a, Scalar b) const {
    QuadRule r;
    r.order = order;
    r.nodes = (Scalar(0.5) * (a + b)) + (Scalar(0.5) * (b - a)) * nodes.array();
    r.weights = (Scalar(0.5) * (b - a)) * weights;
    return r;
  }
};

namespace detail {
inline constexpr int kNewtonMaxIterations = 100;

template <typename Scalar> constexpr Scalar newton_tolerance() {
  return std::max(Scalar(1e-15), Scalar(4) * std::numeric_limits<Scalar>::epsilon());
}
} // namespace detail

/// n-point Gauss-Legendre rule; nodes ascending, exact to degree 2n-1.
template <typename Scalar = double> QuadRule<Scalar> gauss_rule(int n) {
  assert(n >= 1);
  QuadRule<Scalar> r;
  r.nodes.resize(n);
  r.weights.resize(n);
  r.order = 2 * n - 1;
  const Scalar pi = std::numbers::pi_v<Scalar>;
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Tricomi-type initial guess, converges to the i-th largest root.
    Scalar x = std::cos(pi * (Scalar(i) + Scalar(0.75)) / (Scalar(n) + Scalar(0.5)));
    for (int it = 0; it < detail::kNewtonMaxIterations; ++it) {
      const auto L = legendre_with_derivatives<Scalar>(n, x);
      const Scalar dx = L.value / L.d1;
      x -= dx;
      if (std::abs(dx) < detail::newton_tolerance<Scalar>())
        break;
    }
    const auto L = legendre_with_derivatives<Scalar>(n, x);
    const Scalar w = Scalar(2) / ((Scalar(1) - x * x) * L.d1 * L.d1);
    r.nodes[n - 1 - i] = x;
    r.weights[n - 1 - i] = w;
    r.nodes[i] = -x;
    r.weights[i] = w;
  }
  if (n % 2 == 1)
    r.nodes[n / 2] = 0;
  return r;
}

/// n-point Gauss-Lobatto rule including +-1; exact to degree 2n-3.
template <typename Scalar = double> QuadRule<Scalar> gauss_lobatto_rule(int n) {
  assert(n >= 2);
  const int N = n - 1; // interior nodes are the roots of P_N'
  QuadRule<Scalar> r;
  r.nodes.resize(n);
  r.weights.resize(n);
  r.order = 2 * n - 3;
  const Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar wEnd = Scalar(2) / Scalar(N * (N + 1));
  r.nodes[0] = -1;
  r.nodes[N] = 1;
  r.weights[0] = r.weights[N] = wEnd;
  for (int i = 1; i < N; ++i) {
    Scalar x = -std::cos(pi * Scalar(i) / Scalar(N));
    for (int it = 0; it < detail::kNewtonMaxIterations; ++it) {
      const auto L = legendre_with_derivatives<Scalar>(N, x);
      const Scalar dx = L.d1 / L.d2;
      x -= dx;
      if (std::abs(dx) < detail::newton_tolerance<Scalar>())
        break;
    }
    const Scalar P = legendre_eval<Scalar>(N, x);
    r.nodes[i] = x;
    r.weights[i] = wEnd / (P * P);
  }
  // enforce exact symmetry
  for (int i = 0; i < n / 2; ++i) {
    const Scalar x = Scalar(0.5) * (r.nodes[n - 1 - i] - r.nodes[i]);
    const Scalar w = Scalar(0.5) * (r.weights[n - 1 - i] + r.weights[i]);
    r.nodes[i] = -x, r.nodes[n - 1 - i] = x;
    r.weights[i] = r.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1)
    r.nodes[n / 2] = 0;
  return r;
}

/// Values and first derivatives of all p+1 shape functions at one point.
template <typename Scalar> struct ShapeValues {
  VectorX<Scalar> values;
  VectorX<Scalar> derivatives;
};

/// Hierarchical shape set of degree p on [-1,1]:
///   index 0 : (1-t)/2        (vertex at -1)
///   index 1 : (1+t)/2        (vertex at +1)
///   index k : sqrt((2k-1)/2) * int_{-1}^t P_{k-1},  k = 2..p  (vanish at +-1)
template <typename Scalar = double> class ShapeSet {
public:
  explicit ShapeSet(int degree) : degree_(degree) { assert(degree >= 1); }

  int degree() const { return degree_; }
  int size() const { return degree_ + 1; }

  ShapeValues<Scalar> eval(Scalar t) const {
    ShapeValues<Scalar> out{VectorX<Scalar>(size()), VectorX<Scalar>(size())};
    eval_into(t, out.values.data(), out.derivatives.data());
    return out;
  }

  /// Writes values / derivatives into caller-provided arrays of length size().
  void eval_into(Scalar t, Scalar *values, Scalar *derivatives) const {
    values[0] = Scalar(0.5) * (Scalar(1) - t);
    values[1] = Scalar(0.5) * (Scalar(1) + t);
    if (derivatives) {
      derivatives[0] = Scalar(-0.5);
      derivatives[1] = Scalar(0.5);
    }
    // P_{k-2}, P_{k-1}, P_k rolling window
    Scalar pkm2 = 1, pkm1 = t;
    for (int k = 2; k <= degree_; ++k) {
      const Scalar pk = (Scalar(2 * k - 1) * t * pkm1 - Scalar(k - 1) * pkm2) / Scalar(k);
      const Scalar scale = std::sqrt(Scalar(2 * k - 1) / Scalar(2));
      values[k] = scale * (pk - pkm2) / Scalar(2 * k - 1);
      if (derivatives)
        derivatives[k] = scale * pkm1;
      pkm2 = pkm1;
      pkm1 = pk;
    }
  }

  /// Rows: points, columns: shape functions.
  void tabulate(const VectorX<Scalar> &points, MatrixX<Scalar> &values,
                MatrixX<Scalar> &derivatives) const {
    const Eigen::Index n = points.size();
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> v(n, size()), d(n, size());
    for (Eigen::Index i = 0; i < n; ++i)
      eval_into(points[i], v.row(i).data(), d.row(i).data());
    values = v;
    derivatives = d;
  }

private:
  int degree_;
};

template <typename Scalar> ShapeValues<Scalar> shape_eval(const ShapeSet<Scalar> &s, Scalar t) {
  return s.eval(t);
}

/// Evaluates sum_k coeffs[k] * N_k(t) and its derivative.
template <typename Scalar>
std::pair<Scalar, Scalar> eval_expansion(const ShapeSet<Scalar> &s, const VectorX<Scalar> &coeffs,
                                         Scalar t) {
  assert(coeffs.size() == s.size());
  const auto sv = s.eval(t);
  return {sv.values.dot(coeffs), sv.derivatives.dot(coeffs)};
}

/// Degree-p interpolation at the p+1 Gauss-Lobatto nodes, expressed in the
/// hierarchical basis. Keeps the factored nodal matrix so repeated calls are
/// a single back-substitution.
template <typename Scalar = double> class LobattoInterpolator {
public:
  explicit LobattoInterpolator(int degree)
      : shapes_(degree), rule_(gauss_lobatto_rule<Scalar>(degree + 1)) {
    MatrixX<Scalar> v, d;
    shapes_.tabulate(rule_.nodes, v, d);
    lu_ = v.partialPivLu();
  }

  const ShapeSet<Scalar> &shapes() const { return shapes_; }
  const VectorX<Scalar> &nodes() const { return rule_.nodes; }

  /// Coefficients from nodal values at nodes().
  VectorX<Scalar> from_values(const VectorX<Scalar> &values) const {
    VectorX<Scalar> c = lu_.solve(values);
    // vertex coefficients are exactly the end values
    c[0] = values[0];
    c[1] = values[values.size() - 1];
    return c;
  }

  /// Applies the coefficient solve to every column (tensor-product use).
  MatrixX<Scalar> from_values(const MatrixX<Scalar> &values) const {
    MatrixX<Scalar> c = lu_.solve(values);
    c.row(0) = values.row(0);
    c.row(1) = values.row(values.rows() - 1);
    return c;
  }

  template <typename F> VectorX<Scalar> interpolate(F &&f) const {
    VectorX<Scalar> vals(rule_.nodes.size());
    for (Eigen::Index i = 0; i < vals.size(); ++i)
      vals[i] = f(rule_.nodes[i]);
    return from_values(vals);
  }

private:
  ShapeSet<Scalar> shapes_;
  QuadRule<Scalar> rule_;
  Eigen::PartialPivLU<MatrixX<Scalar>> lu_;
};

template <typename Scalar = double, typename F>
VectorX<Scalar> gl_interpolate(F &&f, int p) {
  return LobattoInterpolator<Scalar>(p).interpolate(std::forward<F>(f));
}

} // namespace hpsbl
