#pragma once

#include "pesin/common.hpp"

#include <array>
#include <functional>
#include <span>
#include <vector>

namespace pesin {

inline constexpr int kMaxOrder = 8;

constexpr int tri_size(int order) { return (order + 1) * (order + 2) / 2; }
constexpr int tri_index(int i, int j) { return (i + j) * (i + j + 1) / 2 + j; }

double factorial(int k);
double binomial(int n, int k);

// Truncated univariate Taylor series in the increment s, coefficients are
// f^(k)(x0)/k!. Arithmetic engine behind Jet1D.
class Taylor1 {
 public:
  Taylor1() = default;
  explicit Taylor1(int order, double c0 = 0.0);
  static Taylor1 variable(int order, double x0);

  int order() const { return order_; }
  double& operator[](int k) { return c_[k]; }
  double operator[](int k) const { return c_[k]; }
  double value() const { return c_[0]; }
  double deriv(int k) const { return c_[k] * factorial(k); }

  Taylor1& operator+=(const Taylor1& o);
  Taylor1& operator-=(const Taylor1& o);
  Taylor1& operator*=(double s);
  friend Taylor1 operator+(Taylor1 a, const Taylor1& b) { return a += b; }
  friend Taylor1 operator-(Taylor1 a, const Taylor1& b) { return a -= b; }
  friend Taylor1 operator*(Taylor1 a, double s) { return a *= s; }
  friend Taylor1 operator*(double s, Taylor1 a) { return a *= s; }
  friend Taylor1 operator*(const Taylor1& a, const Taylor1& b);
  friend Taylor1 operator/(const Taylor1& a, const Taylor1& b);

  // outer(inner - inner.value()): outer is a series in its own increment
  static Taylor1 compose(const Taylor1& outer, const Taylor1& inner);
  // series g with value x0 and f(g - x0) = f.value() + t; requires f[1] != 0
  static Taylor1 invert(const Taylor1& f, double x0);

 private:
  int order_ = 0;
  std::array<double, kMaxOrder + 1> c_{};
};

// Truncated bivariate Taylor series in increments (dx, dy); coefficient (i,j)
// multiplies dx^i dy^j, i.e. it is the partial derivative divided by i! j!.
class Taylor2 {
 public:
  static constexpr int kCap = tri_size(kMaxOrder);

  Taylor2() = default;
  explicit Taylor2(int order, double c0 = 0.0);
  static Taylor2 var_x(int order, double x0);
  static Taylor2 var_y(int order, double y0);

  int order() const { return order_; }
  double& at(int i, int j) { return c_[tri_index(i, j)]; }
  double at(int i, int j) const { return c_[tri_index(i, j)]; }
  double value() const { return c_[0]; }
  double partial(int i, int j) const { return at(i, j) * factorial(i) * factorial(j); }
  void set_partial(int i, int j, double d) { at(i, j) = d / (factorial(i) * factorial(j)); }

  Taylor2 truncated(int order) const;
  Taylor2 d_dx() const;
  Taylor2 d_dy() const;
  double eval(double dx, double dy) const;

  Taylor2& operator+=(const Taylor2& o);
  Taylor2& operator-=(const Taylor2& o);
  Taylor2& operator+=(double s) { c_[0] += s; return *this; }
  Taylor2& operator-=(double s) { c_[0] -= s; return *this; }
  Taylor2& operator*=(double s);
  Taylor2 operator-() const { Taylor2 r = *this; r *= -1.0; return r; }
  friend Taylor2 operator+(Taylor2 a, const Taylor2& b) { return a += b; }
  friend Taylor2 operator-(Taylor2 a, const Taylor2& b) { return a -= b; }
  friend Taylor2 operator+(Taylor2 a, double s) { return a += s; }
  friend Taylor2 operator+(double s, Taylor2 a) { return a += s; }
  friend Taylor2 operator-(Taylor2 a, double s) { return a -= s; }
  friend Taylor2 operator-(double s, const Taylor2& a) { return (-a) += s; }
  friend Taylor2 operator*(Taylor2 a, double s) { return a *= s; }
  friend Taylor2 operator*(double s, Taylor2 a) { return a *= s; }
  friend Taylor2 operator/(Taylor2 a, double s) { return a *= (1.0 / s); }
  friend Taylor2 operator*(const Taylor2& a, const Taylor2& b);
  friend Taylor2 operator/(const Taylor2& a, const Taylor2& b);
  friend Taylor2 operator/(double s, const Taylor2& b);

  // f(a) where derivs[k] = f^(k)(a.value())
  static Taylor2 apply(std::span<const double> derivs, const Taylor2& a);
  // outer evaluated at increments (u - u0, v - v0)
  static Taylor2 compose(const Taylor2& outer, const Taylor2& u, const Taylor2& v);

 private:
  int order_ = 0;
  std::array<double, kCap> c_{};
};

Taylor2 sin(const Taylor2& a);
Taylor2 cos(const Taylor2& a);
Taylor2 exp(const Taylor2& a);
Taylor2 log(const Taylor2& a);
Taylor2 sqrt(const Taylor2& a);

// Planar map expanded at a point: two Taylor2 components in (dx, dy).
struct Series2Map {
  Taylor2 f, g;
  int order() const { return f.order(); }
  Vec2 value() const { return {f.value(), g.value()}; }
  Mat2 linear() const;
  const Taylor2& operator[](int k) const { return k == 0 ? f : g; }
  Taylor2& operator[](int k) { return k == 0 ? f : g; }
  static Series2Map identity(int order, const Vec2& base);
  static Series2Map affine(int order, const Vec2& value, const Mat2& lin);
};

// a * s + shift, componentwise on series
Series2Map apply_affine(const Mat2& a, const Series2Map& s, const Vec2& shift = Vec2::Zero());

// outer(inner), outer expanded at inner.value()
Series2Map compose(const Series2Map& outer, const Series2Map& inner);
// substitute increments d = L * d' (linear change of the source variable)
Series2Map linear_substitute(const Series2Map& m, const Mat2& lin);
Taylor2 linear_substitute(const Taylor2& t, const Mat2& lin);
// local inverse: H expanded at m.value(), with H.value() = x0 and m(H) = id
Series2Map invert(const Series2Map& m, const Vec2& x0);

// Something that can be evaluated and expanded to a given order at a point.
struct JetMap {
  virtual ~JetMap() = default;
  virtual Vec2 eval(const Vec2& p) const = 0;
  virtual Series2Map series(const Vec2& p, int order) const = 0;
};

// ---------------------------------------------------------------------------
// Public jet types: raw derivative values.

struct Jet1D {
  int order = 0;
  double x0 = 0;  // base point
  std::array<double, kMaxOrder + 1> d{};  // f^(k)(x0)

  Jet1D() = default;
  Jet1D(int order, double x0, std::initializer_list<double> derivs);
  static Jet1D from_series(double x0, const Taylor1& t);
  Taylor1 to_series() const;
  static Jet1D identity(int order, double x0);
  static Jet1D polynomial(int order, double x0, std::span<const double> coeffs);  // sum c_k x^k
};

struct Jet2D {
  int order = 0;
  Vec2 base = Vec2::Zero();
  std::array<std::array<double, Taylor2::kCap>, 2> d{};  // d[c][tri_index(i,j)] = d^{i+j}H_c/dx^i dy^j

  double partial(int c, int i, int j) const { return d[c][tri_index(i, j)]; }
  double& partial(int c, int i, int j) { return d[c][tri_index(i, j)]; }
  Vec2 value() const { return {d[0][0], d[1][0]}; }

  static Jet2D from_series(const Vec2& base, const Series2Map& s);
  Series2Map to_series() const;
  static Jet2D identity(int order, const Vec2& base);
  static Jet2D linear(int order, const Vec2& base, const Mat2& a, const Vec2& value);
};

Jet1D jet_compose_1d(const Jet1D& outer, const Jet1D& inner);
Jet2D jet_compose_2d(const Jet2D& outer, const Jet2D& inner);
Jet1D jet_product(const Jet1D& a, const Jet1D& b);
Jet1D jet_quotient(const Jet1D& a, const Jet1D& b);
Jet1D jet_invert_1d(const Jet1D& f);

// One term group of the skew Faa di Bruno sum for d^{r1}_x d^{r2}_y e_n(f^n, e^n):
// outer derivative orders (alpha, beta), inner orders (a_i), (b_j, c_j) and weight K.
struct FdbTerm {
  std::vector<int> a;
  std::vector<std::pair<int, int>> bc;
  long weight = 0;
};
// Enumerates decompositions by set partitions of the derivative slots and
// groups equal signatures; the weights K are the group sizes.
std::vector<FdbTerm> skew_fdb_terms(int r1, int r2);
// Evaluates the grouped sum for the second component of outer o inner, where
// inner = (f^n, e^n) is skew (first component independent of y) and outer is
// expanded at inner.value().
double skew_fdb_partial(const Jet2D& outer, const Jet2D& inner, int r1, int r2);

// ---------------------------------------------------------------------------
// C^r norms. ||F||_r := ||DF||_{C^{r-1}}: the largest operator norm of D^k F,
// 1 <= k <= r, over the sample points. Operator norms are the sup over unit u of
// |D^k F(u,...,u)|.

double multilinear_norm(const Series2Map& s, int k);
double multilinear_norm(const Taylor2& s, int k);
double multilinear_norm(const Taylor1& s, int k);

struct CrNorm {
  int r = 1;
  double value = 0;
};

std::vector<Vec2> grid_points(const Rect& rect, int nx, int ny);
CrNorm cr_norm(const JetMap& f, std::span<const Vec2> points, int r);
CrNorm cr_norm_series(std::span<const Series2Map> jets, int r);

struct HocbReport {
  int r = 0;
  double norm_fg = 0, norm_f = 0, norm_g = 0;
  double bound = 0, slack = 0;
  bool g_at_least_one = false;  // the inequality needs ||G||_r >= 1
  bool pass = false;
};
HocbReport check_composition_norm_bounds(const JetMap& f, const JetMap& g, std::span<const Vec2> grid_g, int r);

using Map1D = std::function<Taylor1(const Taylor1&)>;

struct RateReport {
  std::vector<double> measured;  // per n = 1..n_max
  std::vector<double> bound;     // C * rate^(n-1)
  double fitted_c = 0;
  double claimed_log_rate = 0;   // log of the per-step factor of the bound
  double fitted_log_rate = 0;    // least-squares slope of log measured
  double min_slack = 0;          // min over n of log(bound) - log(measured)
  bool pass = false;
};
// bound C rate^(n-1) with C the first measurement; pass iff the slope over the
// second half of the horizon is at most log_rate
void finish_rate(RateReport& rep, double log_rate);
// ||D f^n||_{C^{r-1}} for f^n = f_{n-1} o ... o f_0 against C mu^{r(n-1)}
RateReport composition_rate_1d(std::span<const Map1D> maps, std::span<const double> grid, int r, double mu);
// ||D e^n||_{C^{r-1}} for skew F^n = (f^n, e^n) against C mu^{r(n-1)} lambda^{n-1}
RateReport composition_rate_2d(std::span<const JetMap* const> maps, std::span<const Vec2> grid, int r, double mu,
                               double lambda);

double least_squares_slope(std::span<const double> xs, std::span<const double> ys);

}  // namespace pesin
