#include "pesin/hermite.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>

namespace pesin {

namespace {

// Monomial coefficients of the two-point Hermite basis of degree 2K+1 on [0, 1]:
// column e*(K+1)+k has k-th derivative 1 at t = e and all other data 0.
const Eigen::MatrixXd& basis(int K) {
  static const std::array<Eigen::MatrixXd, kMaxOrder + 1> cache = [] {
    std::array<Eigen::MatrixXd, kMaxOrder + 1> c;
    for (int k = 0; k <= kMaxOrder; ++k) {
      const int n = 2 * k + 2;
      Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
      for (int e = 0; e < 2; ++e)
        for (int j = 0; j <= k; ++j)
          for (int p = j; p < n; ++p) a(e * (k + 1) + j, p) = (e == 0 ? (p == j ? 1.0 : 0.0) : 1.0) * factorial(p) / factorial(p - j);
      c[k] = a.fullPivLu().inverse();
    }
    return c;
  }();
  if (K < 0 || K > kMaxOrder) throw InputError("hermite: order out of range");
  return cache[K];
}

using BasisTable = std::array<double, 2 * (kMaxOrder + 1) * (kMaxOrder + 1)>;

// out[(e*(K+1)+k)*(imax+1)+i] = i-th t-derivative of basis (e, k) at t, times h^k / h^i
void basis_derivs(int K, double t, double h, int imax, BasisTable& out) {
  const Eigen::MatrixXd& c = basis(K);
  const int n = 2 * K + 2;
  std::fill(out.begin(), out.end(), 0.0);
  std::array<double, 2 * kMaxOrder + 2> tp{};
  tp[0] = 1;
  for (int p = 1; p < n; ++p) tp[p] = tp[p - 1] * t;
  for (int q = 0; q < n; ++q) {
    const int k = q % (K + 1);
    for (int i = 0; i <= imax && i < n; ++i) {
      double s = 0;
      for (int p = i; p < n; ++p) s += c(p, q) * factorial(p) / factorial(p - i) * tp[p - i];
      out[q * (imax + 1) + i] = s * std::pow(h, k - i);
    }
  }
}

int cell_of(double x, double a, double h, int cells) {
  const int c = static_cast<int>(std::floor((x - a) / h));
  return std::clamp(c, 0, cells - 1);
}

}  // namespace

// ---------------------------------------------------------------- 1D

HorizontalGraph::HorizontalGraph(double a, double b, int cells, int K)
    : a_(a), b_(b), h_((b - a) / cells), cells_(cells), K_(K), d_((cells + 1) * (K + 1), 0.0) {
  if (!(b > a) || cells < 1) throw InputError("HorizontalGraph: bad interval");
  basis(K);
}

HorizontalGraph HorizontalGraph::sample(double a, double b, int cells, int K,
                                        const std::function<Taylor1(double)>& jet) {
  HorizontalGraph g(a, b, cells, K);
  for (int i = 0; i <= cells; ++i) {
    const Taylor1 t = jet(g.node(i));
    for (int k = 0; k <= K; ++k) g.d(i, k) = k <= t.order() ? t.deriv(k) : 0.0;
  }
  return g;
}

double HorizontalGraph::eval(double x, int k) const {
  if (x < a_ || x > b_) {
    const int e = x < a_ ? 0 : cells_;
    const double dx = x - node(e);
    double t = 0, f = 1;
    for (int j = k; j <= K_; ++j) {
      t += d(e, j) * f;
      f *= dx / (j - k + 1);
    }
    return t;
  }
  const int c = cell_of(x, a_, h_, cells_);
  const double t = (x - node(c)) / h_;
  BasisTable bd;
  basis_derivs(K_, t, h_, k, bd);
  double s = 0;
  for (int e = 0; e < 2; ++e)
    for (int j = 0; j <= K_; ++j) s += d(c + e, j) * bd[(e * (K_ + 1) + j) * (k + 1) + k];
  return s;
}

Taylor1 HorizontalGraph::series(double x, int order) const {
  Taylor1 r(order);
  for (int k = 0; k <= order; ++k) r[k] = eval(x, k) / factorial(k);
  return r;
}

double HorizontalGraph::sup_abs(int k, int per_cell) const {
  double s = 0;
  const int n = cells_ * per_cell;
  for (int i = 0; i <= n; ++i) s = std::max(s, std::abs(eval(a_ + (b_ - a_) * i / n, k)));
  return s;
}

bool HorizontalGraph::center_aligned(double tol) const {
  return std::abs(eval(0.0, 0)) <= tol && (K_ < 1 || std::abs(eval(0.0, 1)) <= tol);
}

double star_distance(const HorizontalGraph& g1, const HorizontalGraph& g2, int samples) {
  const double a = std::max(g1.a(), g2.a()), b = std::min(g1.b(), g2.b());
  double s = 0;
  for (int i = 0; i < samples; ++i) {
    const double x = a + (b - a) * (i + 0.5) / samples;
    if (x == 0.0) continue;
    s = std::max(s, std::abs(g1.eval(x) - g2.eval(x)) / std::abs(x));
  }
  return s;
}

double sup_distance(const HorizontalGraph& g1, const HorizontalGraph& g2, int samples) {
  const double a = std::max(g1.a(), g2.a()), b = std::min(g1.b(), g2.b());
  double s = 0;
  for (int i = 0; i <= samples; ++i) {
    const double x = a + (b - a) * i / samples;
    s = std::max(s, std::abs(g1.eval(x) - g2.eval(x)));
  }
  return s;
}

// ---------------------------------------------------------------- 2D

VerticalField::VerticalField(const Rect& r, int nx, int ny, int K)
    : r_(r), nx_(nx), ny_(ny), K_(K), hx_((r.x1 - r.x0) / nx), hy_((r.y1 - r.y0) / ny),
      d_((nx + 1) * (ny + 1) * (K + 1) * (K + 1), 0.0) {
  if (!(r.x1 > r.x0) || !(r.y1 > r.y0) || nx < 1 || ny < 1) throw InputError("VerticalField: bad rectangle");
  basis(K);
}

VerticalField VerticalField::sample(const Rect& r, int nx, int ny, int K,
                                    const std::function<Taylor2(const Vec2&)>& jet) {
  VerticalField f(r, nx, ny, K);
  for (int iy = 0; iy <= ny; ++iy)
    for (int ix = 0; ix <= nx; ++ix) {
      const Taylor2 t = jet(f.node(ix, iy));
      for (int i = 0; i <= K; ++i)
        for (int j = 0; j <= K; ++j) f.d(ix, iy, i, j) = i + j <= t.order() ? t.partial(i, j) : 0.0;
    }
  return f;
}

double VerticalField::eval(const Vec2& p) const { return series(p, 0).value(); }

Taylor2 VerticalField::series(const Vec2& p, int order) const {
  Taylor2 out(order);
  const Vec2 c(std::clamp(p.x(), r_.x0, r_.x1), std::clamp(p.y(), r_.y0, r_.y1));
  if (c != p) {
    // tensor Taylor extension from the nearest point of the rectangle
    const Taylor2 tc = series(c, 2 * K_);
    const double dx = p.x() - c.x(), dy = p.y() - c.y();
    for (int a = 0; a <= order; ++a)
      for (int b = 0; a + b <= order; ++b) {
        double s = 0;
        for (int i = a; i <= K_; ++i)
          for (int j = b; j <= K_; ++j) {
            if (i + j > 2 * K_) continue;
            s += tc.partial(i, j) * std::pow(dx, i - a) / factorial(i - a) * std::pow(dy, j - b) / factorial(j - b);
          }
        out.set_partial(a, b, s);
      }
    return out;
  }
  const int cx = cell_of(p.x(), r_.x0, hx_, nx_), cy = cell_of(p.y(), r_.y0, hy_, ny_);
  const double s = (p.x() - node(cx, cy).x()) / hx_, t = (p.y() - node(cx, cy).y()) / hy_;
  BasisTable bx, by;
  basis_derivs(K_, s, hx_, order, bx);
  basis_derivs(K_, t, hy_, order, by);
  const int K1 = K_ + 1, o1 = order + 1;
  for (int a = 0; a <= order; ++a)
    for (int b = 0; a + b <= order; ++b) {
      double sum = 0;
      for (int e1 = 0; e1 < 2; ++e1)
        for (int e2 = 0; e2 < 2; ++e2)
          for (int i = 0; i <= K_; ++i) {
            const double wx = bx[(e1 * K1 + i) * o1 + a];
            if (wx == 0.0) continue;
            for (int j = 0; j <= K_; ++j) sum += d(cx + e1, cy + e2, i, j) * wx * by[(e2 * K1 + j) * o1 + b];
          }
      out.set_partial(a, b, sum);
    }
  return out;
}

double VerticalField::sup_abs(int per_cell) const {
  double s = 0;
  const int n = nx_ * per_cell, m = ny_ * per_cell;
  for (int j = 0; j <= m; ++j)
    for (int i = 0; i <= n; ++i)
      s = std::max(s, std::abs(eval({r_.x0 + (r_.x1 - r_.x0) * i / n, r_.y0 + (r_.y1 - r_.y0) * j / m})));
  return s;
}

double sup_distance(const VerticalField& a, const VerticalField& b, int per_cell) {
  const Rect& r = a.rect();
  double s = 0;
  const int n = a.nx() * per_cell, m = a.ny() * per_cell;
  for (int j = 0; j <= m; ++j)
    for (int i = 0; i <= n; ++i) {
      const Vec2 p(r.x0 + (r.x1 - r.x0) * i / n, r.y0 + (r.y1 - r.y0) * j / m);
      s = std::max(s, std::abs(a.eval(p) - b.eval(p)));
    }
  return s;
}

}  // namespace pesin
