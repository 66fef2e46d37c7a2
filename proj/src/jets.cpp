#include "pesin/jets.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace pesin {

namespace {

const std::array<double, 2 * kMaxOrder + 2>& factorial_table() {
  static const auto table = [] {
    std::array<double, 2 * kMaxOrder + 2> t{};
    t[0] = 1;
    for (std::size_t k = 1; k < t.size(); ++k) t[k] = t[k - 1] * static_cast<double>(k);
    return t;
  }();
  return table;
}

void check_order(int order) {
  if (order < 0 || order > kMaxOrder) throw InputError("jet order out of range [0, 8]: " + std::to_string(order));
}

}  // namespace

double factorial(int k) { return factorial_table()[k]; }
double binomial(int n, int k) { return factorial(n) / (factorial(k) * factorial(n - k)); }

// ---------------------------------------------------------------- Taylor1

Taylor1::Taylor1(int order, double c0) : order_(order) {
  check_order(order);
  c_[0] = c0;
}

Taylor1 Taylor1::variable(int order, double x0) {
  Taylor1 t(order, x0);
  if (order >= 1) t.c_[1] = 1;
  return t;
}

Taylor1& Taylor1::operator+=(const Taylor1& o) {
  order_ = std::min(order_, o.order_);
  for (int k = 0; k <= order_; ++k) c_[k] += o.c_[k];
  return *this;
}
Taylor1& Taylor1::operator-=(const Taylor1& o) {
  order_ = std::min(order_, o.order_);
  for (int k = 0; k <= order_; ++k) c_[k] -= o.c_[k];
  return *this;
}
Taylor1& Taylor1::operator*=(double s) {
  for (int k = 0; k <= order_; ++k) c_[k] *= s;
  return *this;
}

Taylor1 operator*(const Taylor1& a, const Taylor1& b) {
  Taylor1 r(std::min(a.order_, b.order_));
  for (int k = 0; k <= r.order_; ++k) {
    double s = 0;
    for (int i = 0; i <= k; ++i) s += a.c_[i] * b.c_[k - i];
    r.c_[k] = s;
  }
  return r;
}

Taylor1 operator/(const Taylor1& a, const Taylor1& b) {
  if (b.c_[0] == 0.0) throw InputError("quotient by a jet with zero constant term");
  Taylor1 q(std::min(a.order_, b.order_));
  for (int k = 0; k <= q.order_; ++k) {
    double s = a.c_[k];
    for (int i = 0; i < k; ++i) s -= q.c_[i] * b.c_[k - i];
    q.c_[k] = s / b.c_[0];
  }
  return q;
}

Taylor1 Taylor1::compose(const Taylor1& outer, const Taylor1& inner) {
  int n = std::min(outer.order_, inner.order_);
  Taylor1 u = inner;
  u.order_ = n;
  u.c_[0] = 0;
  Taylor1 r(n, outer.c_[n]);
  for (int k = n - 1; k >= 0; --k) {
    r = r * u;
    r.c_[0] += outer.c_[k];
  }
  return r;
}

Taylor1 Taylor1::invert(const Taylor1& f, double x0) {
  if (f.order_ < 1 || f.c_[1] == 0.0) throw InputError("jet is not invertible: vanishing first derivative");
  int n = f.order_;
  // g = (t - sum_{k>=2} f_k g^k) / f_1, one order gained per pass
  Taylor1 g(n);
  Taylor1 t = Taylor1::variable(n, 0.0);
  for (int pass = 0; pass < n; ++pass) {
    Taylor1 nl(n);
    Taylor1 pw = g;
    for (int k = 2; k <= n; ++k) {
      pw = pw * g;
      nl += f.c_[k] * pw;
    }
    g = (t - nl) * (1.0 / f.c_[1]);
  }
  g.c_[0] = x0;
  return g;
}

// ---------------------------------------------------------------- Taylor2

Taylor2::Taylor2(int order, double c0) : order_(order) {
  check_order(order);
  c_[0] = c0;
}
Taylor2 Taylor2::var_x(int order, double x0) {
  Taylor2 t(order, x0);
  if (order >= 1) t.at(1, 0) = 1;
  return t;
}
Taylor2 Taylor2::var_y(int order, double y0) {
  Taylor2 t(order, y0);
  if (order >= 1) t.at(0, 1) = 1;
  return t;
}

Taylor2 Taylor2::truncated(int order) const {
  Taylor2 r = *this;
  if (order < order_) {
    for (int k = tri_size(order); k < tri_size(order_); ++k) r.c_[k] = 0;
    r.order_ = order;
  }
  return r;
}

Taylor2 Taylor2::d_dx() const {
  Taylor2 r(std::max(order_ - 1, 0));
  if (order_ == 0) return r;
  for (int d = 0; d <= order_ - 1; ++d)
    for (int j = 0; j <= d; ++j) r.at(d - j, j) = at(d - j + 1, j) * (d - j + 1);
  return r;
}
Taylor2 Taylor2::d_dy() const {
  Taylor2 r(std::max(order_ - 1, 0));
  if (order_ == 0) return r;
  for (int d = 0; d <= order_ - 1; ++d)
    for (int j = 0; j <= d; ++j) r.at(d - j, j) = at(d - j, j + 1) * (j + 1);
  return r;
}

double Taylor2::eval(double dx, double dy) const {
  double s = 0, px = 1;
  for (int i = 0; i <= order_; ++i) {
    double py = 1;
    for (int j = 0; i + j <= order_; ++j) {
      s += at(i, j) * px * py;
      py *= dy;
    }
    px *= dx;
  }
  return s;
}

Taylor2& Taylor2::operator+=(const Taylor2& o) {
  order_ = std::min(order_, o.order_);
  for (int k = 0; k < tri_size(order_); ++k) c_[k] += o.c_[k];
  for (int k = tri_size(order_); k < kCap; ++k) c_[k] = 0;
  return *this;
}
Taylor2& Taylor2::operator-=(const Taylor2& o) {
  order_ = std::min(order_, o.order_);
  for (int k = 0; k < tri_size(order_); ++k) c_[k] -= o.c_[k];
  for (int k = tri_size(order_); k < kCap; ++k) c_[k] = 0;
  return *this;
}
Taylor2& Taylor2::operator*=(double s) {
  for (int k = 0; k < tri_size(order_); ++k) c_[k] *= s;
  return *this;
}

Taylor2 operator*(const Taylor2& a, const Taylor2& b) {
  const int n = std::min(a.order_, b.order_);
  Taylor2 r(n);
  for (int d1 = 0; d1 <= n; ++d1) {
    const int base1 = d1 * (d1 + 1) / 2;
    for (int j1 = 0; j1 <= d1; ++j1) {
      const double av = a.c_[base1 + j1];
      if (av == 0.0) continue;
      for (int d2 = 0; d1 + d2 <= n; ++d2) {
        const int base2 = d2 * (d2 + 1) / 2;
        const int d = d1 + d2;
        const int base = d * (d + 1) / 2;
        for (int j2 = 0; j2 <= d2; ++j2) r.c_[base + j1 + j2] += av * b.c_[base2 + j2];
      }
    }
  }
  return r;
}

Taylor2 operator/(const Taylor2& a, const Taylor2& b) {
  if (b.c_[0] == 0.0) throw InputError("quotient by a series with zero constant term");
  const int n = std::min(a.order_, b.order_);
  Taylor2 q(n);
  const double inv = 1.0 / b.c_[0];
  for (int d = 0; d <= n; ++d) {
    for (int j = 0; j <= d; ++j) {
      const int i = d - j;
      double s = a.at(i, j);
      for (int i1 = 0; i1 <= i; ++i1)
        for (int j1 = 0; j1 <= j; ++j1) {
          if (i1 == i && j1 == j) continue;
          s -= q.at(i1, j1) * b.at(i - i1, j - j1);
        }
      q.at(i, j) = s * inv;
    }
  }
  return q;
}

Taylor2 operator/(double s, const Taylor2& b) { return Taylor2(b.order_, s) / b; }

Taylor2 Taylor2::apply(std::span<const double> derivs, const Taylor2& a) {
  const int n = a.order_;
  Taylor2 u = a;
  u.c_[0] = 0;
  Taylor2 r(n, derivs[n] / factorial(n));
  for (int k = n - 1; k >= 0; --k) {
    r = r * u;
    r.c_[0] += derivs[k] / factorial(k);
  }
  return r;
}

Taylor2 Taylor2::compose(const Taylor2& outer, const Taylor2& u, const Taylor2& v) {
  const int n = std::min({outer.order_, u.order_, v.order_});
  Taylor2 du = u.truncated(n), dv = v.truncated(n);
  du.c_[0] = 0;
  dv.c_[0] = 0;
  std::array<Taylor2, kMaxOrder + 1> vp;
  vp[0] = Taylor2(n, 1.0);
  for (int j = 1; j <= n; ++j) vp[j] = vp[j - 1] * dv;
  auto row = [&](int i) {
    Taylor2 p(n);
    for (int j = 0; i + j <= n; ++j) {
      const double c = outer.at(i, j);
      if (c != 0.0)
        for (int k = 0; k < tri_size(n); ++k) p.c_[k] += c * vp[j].c_[k];
    }
    return p;
  };
  Taylor2 r = row(n);
  for (int i = n - 1; i >= 0; --i) r = r * du + row(i);
  return r;
}

Taylor2 sin(const Taylor2& a) {
  std::array<double, kMaxOrder + 1> d{};
  const double s = std::sin(a.value()), c = std::cos(a.value());
  for (int k = 0; k <= a.order(); ++k) d[k] = (k % 4 == 0) ? s : (k % 4 == 1) ? c : (k % 4 == 2) ? -s : -c;
  return Taylor2::apply(d, a);
}
Taylor2 cos(const Taylor2& a) {
  std::array<double, kMaxOrder + 1> d{};
  const double s = std::sin(a.value()), c = std::cos(a.value());
  for (int k = 0; k <= a.order(); ++k) d[k] = (k % 4 == 0) ? c : (k % 4 == 1) ? -s : (k % 4 == 2) ? -c : s;
  return Taylor2::apply(d, a);
}
Taylor2 exp(const Taylor2& a) {
  std::array<double, kMaxOrder + 1> d{};
  d.fill(std::exp(a.value()));
  return Taylor2::apply(d, a);
}
Taylor2 log(const Taylor2& a) {
  std::array<double, kMaxOrder + 1> d{};
  const double x = a.value();
  d[0] = std::log(x);
  double p = 1.0 / x;
  for (int k = 1; k <= a.order(); ++k) {
    d[k] = ((k % 2) ? 1.0 : -1.0) * factorial(k - 1) * p;
    p /= x;
  }
  return Taylor2::apply(d, a);
}
Taylor2 sqrt(const Taylor2& a) {
  std::array<double, kMaxOrder + 1> d{};
  const double x = a.value();
  double coef = 1.0, e = 0.5;
  for (int k = 0; k <= a.order(); ++k) {
    d[k] = coef * std::pow(x, e);
    coef *= e;
    e -= 1.0;
  }
  return Taylor2::apply(d, a);
}

// ---------------------------------------------------------------- maps

Mat2 Series2Map::linear() const {
  Mat2 m;
  m << f.at(1, 0), f.at(0, 1), g.at(1, 0), g.at(0, 1);
  return m;
}

Series2Map Series2Map::identity(int order, const Vec2& base) {
  return {Taylor2::var_x(order, base.x()), Taylor2::var_y(order, base.y())};
}

Series2Map Series2Map::affine(int order, const Vec2& value, const Mat2& lin) {
  Series2Map m{Taylor2(order, value.x()), Taylor2(order, value.y())};
  if (order >= 1) {
    m.f.at(1, 0) = lin(0, 0);
    m.f.at(0, 1) = lin(0, 1);
    m.g.at(1, 0) = lin(1, 0);
    m.g.at(0, 1) = lin(1, 1);
  }
  return m;
}

Series2Map apply_affine(const Mat2& a, const Series2Map& s, const Vec2& shift) {
  Series2Map r{a(0, 0) * s.f + a(0, 1) * s.g, a(1, 0) * s.f + a(1, 1) * s.g};
  r.f += shift.x();
  r.g += shift.y();
  return r;
}

Series2Map compose(const Series2Map& outer, const Series2Map& inner) {
  return {Taylor2::compose(outer.f, inner.f, inner.g), Taylor2::compose(outer.g, inner.f, inner.g)};
}

Taylor2 linear_substitute(const Taylor2& t, const Mat2& lin) {
  Series2Map a = Series2Map::affine(t.order(), Vec2::Zero(), lin);
  return Taylor2::compose(t, a.f, a.g);
}

Series2Map linear_substitute(const Series2Map& m, const Mat2& lin) {
  Series2Map a = Series2Map::affine(m.order(), Vec2::Zero(), lin);
  return compose(m, a);
}

Series2Map invert(const Series2Map& m, const Vec2& x0) {
  const int n = m.order();
  const Mat2 a = m.linear();
  if (std::abs(a.determinant()) == 0.0) throw InputError("series map is not invertible: singular linear part");
  const Mat2 ainv = a.inverse();
  Series2Map e = Series2Map::identity(n, Vec2::Zero());
  // nonlinear remainder of m around its value
  Series2Map nl = m;
  Series2Map lin = Series2Map::affine(n, m.value(), a);
  nl.f -= lin.f;
  nl.g -= lin.g;
  Series2Map h = Series2Map::affine(n, Vec2::Zero(), Mat2::Zero());
  for (int pass = 0; pass < n; ++pass) {
    Series2Map r = compose(nl, h);
    Taylor2 bx = e.f - r.f, by = e.g - r.g;
    h.f = ainv(0, 0) * bx + ainv(0, 1) * by;
    h.g = ainv(1, 0) * bx + ainv(1, 1) * by;
  }
  h.f.at(0, 0) = x0.x();
  h.g.at(0, 0) = x0.y();
  return h;
}

// ---------------------------------------------------------------- Jet1D / Jet2D

Jet1D::Jet1D(int order_, double x0_, std::initializer_list<double> derivs) : order(order_), x0(x0_) {
  check_order(order_);
  if (static_cast<int>(derivs.size()) != order_ + 1) throw InputError("Jet1D needs order+1 derivative values");
  std::copy(derivs.begin(), derivs.end(), d.begin());
}

Jet1D Jet1D::from_series(double x0, const Taylor1& t) {
  Jet1D j;
  j.order = t.order();
  j.x0 = x0;
  for (int k = 0; k <= j.order; ++k) j.d[k] = t.deriv(k);
  return j;
}

Taylor1 Jet1D::to_series() const {
  Taylor1 t(order);
  for (int k = 0; k <= order; ++k) t[k] = d[k] / factorial(k);
  return t;
}

Jet1D Jet1D::identity(int order, double x0) { return from_series(x0, Taylor1::variable(order, x0)); }

Jet1D Jet1D::polynomial(int order, double x0, std::span<const double> coeffs) {
  Taylor1 x = Taylor1::variable(order, x0);
  Taylor1 r(order);
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) {
    r = r * x;
    r[0] += *it;
  }
  return from_series(x0, r);
}

Jet2D Jet2D::from_series(const Vec2& base, const Series2Map& s) {
  Jet2D j;
  j.order = s.order();
  j.base = base;
  for (int c = 0; c < 2; ++c)
    for (int dd = 0; dd <= j.order; ++dd)
      for (int q = 0; q <= dd; ++q) j.partial(c, dd - q, q) = s[c].partial(dd - q, q);
  return j;
}

Series2Map Jet2D::to_series() const {
  Series2Map s{Taylor2(order), Taylor2(order)};
  for (int c = 0; c < 2; ++c)
    for (int dd = 0; dd <= order; ++dd)
      for (int q = 0; q <= dd; ++q) s[c].set_partial(dd - q, q, partial(c, dd - q, q));
  return s;
}

Jet2D Jet2D::identity(int order, const Vec2& base) { return from_series(base, Series2Map::identity(order, base)); }

Jet2D Jet2D::linear(int order, const Vec2& base, const Mat2& a, const Vec2& value) {
  return from_series(base, Series2Map::affine(order, value, a));
}

namespace {
void check_base(double expected, double got) {
  if (std::abs(expected - got) > 1e-12 * std::max(1.0, std::abs(expected)))
    throw InputError("jet base point mismatch: outer base " + std::to_string(expected) + " vs inner value " +
                     std::to_string(got));
}
}  // namespace

Jet1D jet_compose_1d(const Jet1D& outer, const Jet1D& inner) {
  if (outer.order != inner.order) throw InputError("jet order mismatch");
  check_base(outer.x0, inner.d[0]);
  return Jet1D::from_series(inner.x0, Taylor1::compose(outer.to_series(), inner.to_series()));
}

Jet2D jet_compose_2d(const Jet2D& outer, const Jet2D& inner) {
  if (outer.order != inner.order) throw InputError("jet order mismatch");
  check_base(outer.base.x(), inner.partial(0, 0, 0));
  check_base(outer.base.y(), inner.partial(1, 0, 0));
  return Jet2D::from_series(inner.base, compose(outer.to_series(), inner.to_series()));
}

Jet1D jet_product(const Jet1D& a, const Jet1D& b) {
  if (a.order != b.order) throw InputError("jet order mismatch");
  return Jet1D::from_series(a.x0, a.to_series() * b.to_series());
}

Jet1D jet_quotient(const Jet1D& a, const Jet1D& b) {
  if (a.order != b.order) throw InputError("jet order mismatch");
  if (b.d[0] == 0.0) throw InputError("quotient by a jet with zero constant term");
  return Jet1D::from_series(a.x0, a.to_series() / b.to_series());
}

Jet1D jet_invert_1d(const Jet1D& f) {
  if (f.order < 1 || f.d[1] == 0.0) throw InputError("jet is not invertible: vanishing first derivative");
  return Jet1D::from_series(f.d[0], Taylor1::invert(f.to_series(), f.x0));
}

// ---------------------------------------------------------------- Faa di Bruno, skew form

std::vector<FdbTerm> skew_fdb_terms(int r1, int r2) {
  const int r = r1 + r2;
  if (r < 1 || r > kMaxOrder) throw InputError("skew_fdb_terms: order out of range");
  using Key = std::pair<std::vector<int>, std::vector<std::pair<int, int>>>;
  std::map<Key, long> groups;
  std::vector<int> block(r, 0);  // restricted growth string
  auto visit = [&](int nblocks) {
    std::vector<int> bx(nblocks, 0), by(nblocks, 0);
    for (int s = 0; s < r; ++s) (s < r1 ? bx : by)[block[s]]++;
    for (int mask = 0; mask < (1 << nblocks); ++mask) {
      // bit set: block differentiates the first inner component f^n
      bool ok = true;
      Key key;
      for (int b = 0; b < nblocks && ok; ++b) {
        if (mask >> b & 1) {
          if (by[b] > 0) ok = false;  // f^n does not depend on y
          else key.first.push_back(bx[b]);
        } else {
          key.second.emplace_back(bx[b], by[b]);
        }
      }
      if (!ok) continue;
      std::sort(key.first.begin(), key.first.end());
      std::sort(key.second.begin(), key.second.end());
      groups[key]++;
    }
  };
  // enumerate set partitions
  std::vector<int> maxv(r, 0);
  for (;;) {
    int nb = 0;
    for (int s = 0; s < r; ++s) nb = std::max(nb, block[s] + 1);
    visit(nb);
    int s = r - 1;
    while (s > 0 && block[s] == maxv[s - 1] + 1) --s;
    if (s == 0) break;
    ++block[s];
    for (int t = s; t < r; ++t) {
      if (t > s) block[t] = 0;
      maxv[t] = std::max(maxv[t - 1], block[t]);
    }
  }
  std::vector<FdbTerm> out;
  for (auto& [k, w] : groups) out.push_back({k.first, k.second, w});
  return out;
}

double skew_fdb_partial(const Jet2D& outer, const Jet2D& inner, int r1, int r2) {
  if (r1 + r2 > inner.order || r1 + r2 > outer.order) throw InputError("skew_fdb_partial: order exceeds jets");
  double total = 0;
  for (const auto& t : skew_fdb_terms(r1, r2)) {
    const int alpha = static_cast<int>(t.a.size()), beta = static_cast<int>(t.bc.size());
    double term = static_cast<double>(t.weight) * outer.partial(1, alpha, beta);
    for (int a : t.a) term *= inner.partial(0, a, 0);
    for (auto [b, c] : t.bc) term *= inner.partial(1, b, c);
    total += term;
  }
  return total;
}

// ---------------------------------------------------------------- norms

namespace {

template <class Form>
double sup_on_circle(Form&& form) {
  constexpr int kScan = 96;
  double best = -1, best_t = 0;
  for (int i = 0; i < kScan; ++i) {
    const double t = kPi * i / kScan;
    const double v = form(t);
    if (v > best) best = v, best_t = t;
  }
  // golden-section refinement of the bracketing cell
  double a = best_t - kPi / kScan, b = best_t + kPi / kScan;
  const double g = (std::sqrt(5.0) - 1) / 2;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = form(c), fd = form(d);
  for (int it = 0; it < 40; ++it) {
    if (fc > fd) {
      b = d, d = c, fd = fc, c = b - g * (b - a), fc = form(c);
    } else {
      a = c, c = d, fc = fd, d = a + g * (b - a), fd = form(d);
    }
  }
  return std::max({best, fc, fd});
}

double homogeneous_part(const Taylor2& s, int k, double cx, double cy) {
  double v = 0;
  for (int j = 0; j <= k; ++j) v += s.at(k - j, j) * std::pow(cx, k - j) * std::pow(cy, j);
  return v * factorial(k);
}

}  // namespace

double multilinear_norm(const Series2Map& s, int k) {
  if (k > s.order()) throw InputError("multilinear_norm: order exceeds jet");
  return sup_on_circle([&](double t) {
    const double c = std::cos(t), sn = std::sin(t);
    return std::hypot(homogeneous_part(s.f, k, c, sn), homogeneous_part(s.g, k, c, sn));
  });
}

double multilinear_norm(const Taylor2& s, int k) {
  if (k > s.order()) throw InputError("multilinear_norm: order exceeds jet");
  return sup_on_circle([&](double t) { return std::abs(homogeneous_part(s, k, std::cos(t), std::sin(t))); });
}

double multilinear_norm(const Taylor1& s, int k) { return std::abs(s.deriv(k)); }

std::vector<Vec2> grid_points(const Rect& rect, int nx, int ny) {
  std::vector<Vec2> pts;
  pts.reserve(static_cast<std::size_t>(nx) * ny);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      const double x = nx == 1 ? 0.5 * (rect.x0 + rect.x1) : rect.x0 + (rect.x1 - rect.x0) * i / (nx - 1);
      const double y = ny == 1 ? 0.5 * (rect.y0 + rect.y1) : rect.y0 + (rect.y1 - rect.y0) * j / (ny - 1);
      pts.emplace_back(x, y);
    }
  return pts;
}

CrNorm cr_norm_series(std::span<const Series2Map> jets, int r) {
  CrNorm n{r, 0.0};
  for (const auto& s : jets)
    for (int k = 1; k <= r; ++k) n.value = std::max(n.value, multilinear_norm(s, k));
  return n;
}

CrNorm cr_norm(const JetMap& f, std::span<const Vec2> points, int r) {
  CrNorm n{r, 0.0};
  for (const auto& p : points) {
    const Series2Map s = f.series(p, r);
    for (int k = 1; k <= r; ++k) n.value = std::max(n.value, multilinear_norm(s, k));
  }
  return n;
}

HocbReport check_composition_norm_bounds(const JetMap& f, const JetMap& g, std::span<const Vec2> grid_g, int r) {
  HocbReport rep;
  rep.r = r;
  for (const auto& p : grid_g) {
    const Series2Map sg = g.series(p, r);
    const Series2Map sf = f.series(sg.value(), r);
    const Series2Map sfg = compose(sf, sg);
    for (int k = 1; k <= r; ++k) {
      rep.norm_g = std::max(rep.norm_g, multilinear_norm(sg, k));
      rep.norm_f = std::max(rep.norm_f, multilinear_norm(sf, k));
      rep.norm_fg = std::max(rep.norm_fg, multilinear_norm(sfg, k));
    }
  }
  rep.bound = std::pow(static_cast<double>(r), r) * rep.norm_f * std::pow(rep.norm_g, r);
  rep.slack = rep.bound - rep.norm_fg;
  rep.g_at_least_one = rep.norm_g >= 1.0;
  rep.pass = rep.slack >= -1e-12 * std::max(1.0, rep.bound);
  return rep;
}

double least_squares_slope(std::span<const double> xs, std::span<const double> ys) {
  const std::size_t n = xs.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) mx += xs[i], my += ys[i];
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) sxy += (xs[i] - mx) * (ys[i] - my), sxx += (xs[i] - mx) * (xs[i] - mx);
  return sxx > 0 ? sxy / sxx : 0.0;
}

void finish_rate(RateReport& rep, double log_rate) {
  const std::size_t n = rep.measured.size();
  rep.claimed_log_rate = log_rate;
  rep.fitted_c = rep.measured.empty() ? 0 : rep.measured[0];
  rep.bound.resize(n);
  rep.min_slack = std::numeric_limits<double>::infinity();
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < n; ++i) {
    rep.bound[i] = rep.fitted_c * std::exp(log_rate * static_cast<double>(i));
    if (rep.measured[i] > 0) {
      rep.min_slack = std::min(rep.min_slack, std::log(rep.bound[i]) - std::log(rep.measured[i]));
      // asymptotic slope: second half of the horizon
      if (i >= n / 2) xs.push_back(static_cast<double>(i)), ys.push_back(std::log(rep.measured[i]));
    }
  }
  rep.fitted_log_rate = xs.size() >= 2 ? least_squares_slope(xs, ys) : -std::numeric_limits<double>::infinity();
  rep.pass = rep.fitted_log_rate <= log_rate + 1e-6;
}

RateReport composition_rate_1d(std::span<const Map1D> maps, std::span<const double> grid, int r, double mu) {
  RateReport rep;
  rep.measured.assign(maps.size(), 0.0);
  for (double x : grid) {
    Taylor1 t = Taylor1::variable(r, x);
    for (std::size_t n = 0; n < maps.size(); ++n) {
      t = maps[n](t);
      for (int k = 1; k <= r; ++k) rep.measured[n] = std::max(rep.measured[n], std::abs(t.deriv(k)));
    }
  }
  finish_rate(rep, r * std::log(mu));
  return rep;
}

RateReport composition_rate_2d(std::span<const JetMap* const> maps, std::span<const Vec2> grid, int r, double mu,
                               double lambda) {
  RateReport rep;
  rep.measured.assign(maps.size(), 0.0);
  for (const auto& p : grid) {
    Series2Map s = Series2Map::identity(r, p);
    for (std::size_t n = 0; n < maps.size(); ++n) {
      s = compose(maps[n]->series(s.value(), r), s);
      for (int k = 1; k <= r; ++k) rep.measured[n] = std::max(rep.measured[n], multilinear_norm(s.g, k));
    }
  }
  finish_rate(rep, r * std::log(mu) + std::log(lambda));
  return rep;
}

}  // namespace pesin
