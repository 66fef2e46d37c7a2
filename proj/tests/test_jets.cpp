#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "pesin/jets.hpp"
#include "poly_oracle.hpp"

#include <random>

using namespace pesin;
using oracle::Poly1;
using oracle::Poly2;

namespace {

Jet1D jet_of(const Poly1& p, double x0, int order) {
  Poly1 s = oracle::shift(p, x0);
  Jet1D j;
  j.order = order;
  j.x0 = x0;
  for (int k = 0; k <= order; ++k) j.d[k] = s.coef(k) * factorial(k);
  return j;
}

Jet2D jet_of(const Poly2& f, const Poly2& g, const Vec2& b, int order) {
  Poly2 sf = oracle::shift(f, b.x(), b.y()), sg = oracle::shift(g, b.x(), b.y());
  Jet2D j;
  j.order = order;
  j.base = b;
  for (int d = 0; d <= order; ++d)
    for (int q = 0; q <= d; ++q) {
      const double w = factorial(d - q) * factorial(q);
      j.partial(0, d - q, q) = sf.coef(d - q, q) * w;
      j.partial(1, d - q, q) = sg.coef(d - q, q) * w;
    }
  return j;
}

Poly1 random_poly1(std::mt19937_64& rng, int deg) {
  std::uniform_int_distribution<int> c(-3, 3);
  Poly1 p;
  for (int k = 0; k <= deg; ++k) p.set(k, c(rng));
  return p;
}

Poly2 random_poly2(std::mt19937_64& rng, int deg) {
  std::uniform_int_distribution<int> c(-2, 2);
  Poly2 p;
  for (int d = 0; d <= deg; ++d)
    for (int q = 0; q <= d; ++q) p.set(d - q, q, c(rng));
  return p;
}

// smooth non-polynomial test map
struct Wavy final : JetMap {
  Vec2 eval(const Vec2& p) const override {
    return {std::sin(p.x()) + 0.5 * p.y() * p.y(), std::exp(0.3 * p.y()) * p.x() + p.y()};
  }
  Series2Map series(const Vec2& p, int order) const override {
    Taylor2 x = Taylor2::var_x(order, p.x()), y = Taylor2::var_y(order, p.y());
    return {sin(x) + 0.5 * y * y, exp(0.3 * y) * x + y};
  }
};

struct PolyMap final : JetMap {
  Poly2 f, g;
  Vec2 eval(const Vec2& p) const override { return {f(p.x(), p.y()), g(p.x(), p.y())}; }
  Series2Map series(const Vec2& p, int order) const override {
    Jet2D j = jet_of(f, g, p, order);
    return j.to_series();
  }
};

}  // namespace

TEST_CASE("1d composition examples") {
  // (x+1)^2 at 0
  Jet1D outer(3, 1.0, {1, 2, 2, 0});
  Jet1D inner(3, 0.0, {1, 1, 0, 0});
  Jet1D r = jet_compose_1d(outer, inner);
  CHECK(r.d[0] == 1);
  CHECK(r.d[1] == 2);
  CHECK(r.d[2] == 2);
  CHECK(r.d[3] == 0);

  Jet1D id = Jet1D::identity(3, 1.0);
  Jet1D same = jet_compose_1d(outer, id);
  for (int k = 0; k <= 3; ++k) CHECK(same.d[k] == outer.d[k]);

  CHECK_THROWS_AS(jet_compose_1d(Jet1D(2, 1.0, {1, 2, 2}), inner), InputError);
  CHECK_THROWS_AS(jet_compose_1d(Jet1D(3, 1.5, {1, 2, 2, 0}), inner), InputError);
}

TEST_CASE("1d composition matches brute-force expansion, exact") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int order = 6;
    Poly1 p = random_poly1(rng, 4), q = random_poly1(rng, 4);
    const double x0 = std::uniform_int_distribution<int>(-2, 2)(rng);
    Jet1D inner = jet_of(q, x0, order);
    Jet1D outer = jet_of(p, inner.d[0], order);
    Jet1D got = jet_compose_1d(outer, inner);
    Jet1D want = jet_of(oracle::compose(p, q), x0, order);
    for (int k = 0; k <= order; ++k) REQUIRE(got.d[k] == want.d[k]);
  }
}

TEST_CASE("product, quotient, inverse") {
  Jet1D x = Jet1D::identity(4, 0.0);
  Jet1D x2(4, 0.0, {0, 0, 2, 0, 0});
  Jet1D x3 = jet_product(x, x2);
  const double want[] = {0, 0, 0, 6, 0};
  for (int k = 0; k <= 4; ++k) CHECK(x3.d[k] == want[k]);

  Jet1D one(3, 0.0, {1, 0, 0, 0});
  Jet1D omx(3, 0.0, {1, -1, 0, 0});
  Jet1D q = jet_quotient(one, omx);
  const double geo[] = {1, 1, 2, 6};
  for (int k = 0; k <= 3; ++k) CHECK(q.d[k] == doctest::Approx(geo[k]).epsilon(1e-14));
  Jet1D back = jet_product(q, omx);
  for (int k = 0; k <= 3; ++k) CHECK(back.d[k] == doctest::Approx(one.d[k]).epsilon(1e-14));

  // inverse of 2x + x^2: composition residual is the identity jet
  Jet1D f(3, 0.0, {0, 2, 2, 0});
  Jet1D g = jet_invert_1d(f);
  Jet1D fg = jet_compose_1d(f, g);
  Jet1D id = Jet1D::identity(3, 0.0);
  for (int k = 0; k <= 3; ++k) CHECK(fg.d[k] == doctest::Approx(id.d[k]).epsilon(1e-14));
  // series check: g(t) = -1 + sqrt(1+t) = t/2 - t^2/8 + t^3/16
  CHECK(g.d[1] == doctest::Approx(0.5));
  CHECK(g.d[2] == doctest::Approx(-0.25));
  CHECK(g.d[3] == doctest::Approx(6.0 / 16));

  CHECK_THROWS_AS(jet_quotient(one, Jet1D(3, 0.0, {0, 1, 0, 0})), InputError);
  CHECK_THROWS_AS(jet_invert_1d(Jet1D(3, 0.0, {1, 0, 1, 0})), InputError);
}

TEST_CASE("2d composition matches symbolic expansion, exact to order 6") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const int order = trial < 50 ? 4 : 6;
    Poly2 f1 = random_poly2(rng, 3), f2 = random_poly2(rng, 3);
    Poly2 g1 = random_poly2(rng, 3), g2 = random_poly2(rng, 3);
    const Vec2 b(std::uniform_int_distribution<int>(-1, 1)(rng), std::uniform_int_distribution<int>(-1, 1)(rng));
    Jet2D inner = jet_of(g1, g2, b, order);
    Jet2D outer = jet_of(f1, f2, inner.value(), order);
    Jet2D got = jet_compose_2d(outer, inner);
    Jet2D want = jet_of(oracle::compose(f1, g1, g2), oracle::compose(f2, g1, g2), b, order);
    for (int c = 0; c < 2; ++c)
      for (int d = 0; d <= order; ++d)
        for (int q = 0; q <= d; ++q) REQUIRE(got.partial(c, d - q, q) == want.partial(c, d - q, q));
  }
}

TEST_CASE("2d composition trivial cases") {
  std::mt19937_64 rng(3);
  Poly2 g1 = random_poly2(rng, 3), g2 = random_poly2(rng, 3);
  Jet2D inner = jet_of(g1, g2, Vec2(0.5, -0.25), 4);
  Mat2 a;
  a << 2, 0, 0, 3;
  Jet2D outer = Jet2D::linear(4, inner.value(), a, Vec2::Zero());
  Jet2D r = jet_compose_2d(outer, inner);
  for (int d = 1; d <= 4; ++d)
    for (int q = 0; q <= d; ++q) {
      CHECK(r.partial(0, d - q, q) == doctest::Approx(2 * inner.partial(0, d - q, q)));
      CHECK(r.partial(1, d - q, q) == doctest::Approx(3 * inner.partial(1, d - q, q)));
    }
  Jet2D same = jet_compose_2d(inner, Jet2D::identity(4, inner.base));
  for (int c = 0; c < 2; ++c)
    for (int k = 0; k < tri_size(4); ++k) CHECK(same.d[c][k] == doctest::Approx(inner.d[c][k]).epsilon(1e-15));
}

TEST_CASE("skew Faa di Bruno grouped sum") {
  // d^2/dx^2 of e(f(x), e(x,y)) has five groups
  auto t = skew_fdb_terms(2, 0);
  CHECK(t.size() == 5);
  long total = 0;
  for (const auto& term : t) total += term.weight;
  CHECK(total == 6);  // 2 partitions, blocks may go either way when they carry no y

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    Poly2 f1 = random_poly2(rng, 3), f2 = random_poly2(rng, 3);
    Poly2 g1, g2 = random_poly2(rng, 3);
    for (int i = 0; i <= 3; ++i) g1.set(i, 0, std::uniform_int_distribution<int>(-2, 2)(rng));  // skew
    const Vec2 b(1, -1);
    const int order = 5;
    Jet2D inner = jet_of(g1, g2, b, order);
    Jet2D outer = jet_of(f1, f2, inner.value(), order);
    Jet2D ref = jet_of(oracle::compose(f2, g1, g2), oracle::compose(f2, g1, g2), b, order);
    for (int d = 1; d <= order; ++d)
      for (int q = 0; q <= d; ++q) REQUIRE(skew_fdb_partial(outer, inner, d - q, q) == ref.partial(1, d - q, q));
  }
}

TEST_CASE("associativity and finite differences") {
  Wavy w;
  const int order = 5;
  const Vec2 p(0.3, -0.2);
  Series2Map a = w.series(p, order);
  Series2Map b = w.series(a.value(), order);
  Series2Map c = w.series(b.value(), order);
  Series2Map left = compose(compose(c, b), a), right = compose(c, compose(b, a));
  for (int k = 0; k < tri_size(order); ++k) {
    const int d = static_cast<int>((std::sqrt(8.0 * k + 1) - 1) / 2), j = k - d * (d + 1) / 2;
    for (int comp = 0; comp < 2; ++comp) {
      const double l = left[comp].at(d - j, j), r = right[comp].at(d - j, j);
      CHECK(std::abs(l - r) <= 1e-10 * std::max(1.0, std::abs(l)));
    }
  }

  // order-k partials against central differences of order-(k-1) partials
  const double h = 1e-5;
  for (int k = 1; k <= 3; ++k) {
    Jet2D j0 = Jet2D::from_series(p, w.series(p, k));
    Jet2D jxp = Jet2D::from_series(p, w.series(p + Vec2(h, 0), k - 1));
    Jet2D jxm = Jet2D::from_series(p, w.series(p - Vec2(h, 0), k - 1));
    Jet2D jyp = Jet2D::from_series(p, w.series(p + Vec2(0, h), k - 1));
    Jet2D jym = Jet2D::from_series(p, w.series(p - Vec2(0, h), k - 1));
    for (int c = 0; c < 2; ++c)
      for (int q = 0; q <= k - 1; ++q) {
        const int i = k - 1 - q;
        const double fdx = (jxp.partial(c, i, q) - jxm.partial(c, i, q)) / (2 * h);
        const double fdy = (jyp.partial(c, i, q) - jym.partial(c, i, q)) / (2 * h);
        CHECK(std::abs(fdx - j0.partial(c, i + 1, q)) <= 1e-5 * std::max(1.0, std::abs(fdx)));
        CHECK(std::abs(fdy - j0.partial(c, i, q + 1)) <= 1e-5 * std::max(1.0, std::abs(fdy)));
      }
  }
}

TEST_CASE("2d inverse") {
  Wavy w;
  const Vec2 p(0.2, 0.1);
  Series2Map s = w.series(p, 6);
  Series2Map inv = invert(s, p);
  Series2Map id = compose(s, inv);
  CHECK(id.f.at(0, 0) == doctest::Approx(s.f.value()));
  CHECK(id.f.at(1, 0) == doctest::Approx(1.0));
  CHECK(id.g.at(0, 1) == doctest::Approx(1.0));
  for (int d = 2; d <= 6; ++d)
    for (int q = 0; q <= d; ++q) {
      CHECK(std::abs(id.f.at(d - q, q)) < 1e-12);
      CHECK(std::abs(id.g.at(d - q, q)) < 1e-12);
    }
}

TEST_CASE("multilinear norms") {
  // D^2 of (x^2, 0) is 2 on the diagonal
  Series2Map s{Taylor2(3), Taylor2(3)};
  s.f.at(2, 0) = 1;
  CHECK(multilinear_norm(s, 2) == doctest::Approx(2.0).epsilon(1e-12));
  // xy: sup of 2 cos t sin t = 1
  Series2Map m{Taylor2(3), Taylor2(3)};
  m.g.at(1, 1) = 1;
  CHECK(multilinear_norm(m, 2) == doctest::Approx(1.0).epsilon(1e-12));
  // linear: operator norm
  Mat2 a;
  a << 1, 2, 3, 4;
  CHECK(multilinear_norm(Series2Map::affine(2, Vec2::Zero(), a), 1) == doctest::Approx(op_norm(a)).epsilon(1e-12));

  // C^r norm monotone in r
  Wavy w;
  auto pts = grid_points(Rect::box(0.5), 8, 8);
  double prev = 0;
  for (int r = 1; r <= 5; ++r) {
    double v = cr_norm(w, pts, r).value;
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("composition norm bound") {
  struct Id final : JetMap {
    Vec2 eval(const Vec2& p) const override { return p; }
    Series2Map series(const Vec2& p, int order) const override { return Series2Map::identity(order, p); }
  } id;
  auto pts = grid_points(Rect::box(1), 5, 5);
  HocbReport r = check_composition_norm_bounds(id, id, pts, 3);
  CHECK(r.norm_fg == doctest::Approx(1.0));
  CHECK(r.pass);

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 100; ++trial) {
    PolyMap f, g;
    for (int d = 0; d <= 3; ++d)
      for (int q = 0; q <= d; ++q) {
        f.f.set(d - q, q, u(rng));
        f.g.set(d - q, q, u(rng));
        g.f.set(d - q, q, u(rng));
        g.g.set(d - q, q, u(rng));
      }
    g.f.set(1, 0, 1.5);  // ||G||_r >= 1
    auto grid = grid_points(Rect::box(0.5), 4, 4);
    HocbReport rep = check_composition_norm_bounds(f, g, grid, 3);
    REQUIRE(rep.g_at_least_one);
    REQUIRE(rep.pass);
    REQUIRE(rep.slack >= 0);
  }
}

TEST_CASE("composition rates") {
  const double mu = 1.5;
  std::vector<Map1D> maps(5, [&](const Taylor1& t) { return mu * t; });
  std::vector<double> grid{-1, 0, 1};
  RateReport rep = composition_rate_1d(maps, grid, 3, mu);
  CHECK(rep.measured.back() == doctest::Approx(std::pow(mu, 5)));
  CHECK(rep.min_slack >= 0);
  CHECK(rep.pass);

  struct Skew final : JetMap {
    Vec2 eval(const Vec2& p) const override {
      return {1.2 * p.x(), 0.5 * p.y() + 0.1 * p.x() * p.x() * p.y()};
    }
    Series2Map series(const Vec2& p, int order) const override {
      Taylor2 x = Taylor2::var_x(order, p.x()), y = Taylor2::var_y(order, p.y());
      return {1.2 * x, 0.5 * y + 0.1 * x * x * y};
    }
  } skew;
  std::vector<const JetMap*> seq(20, &skew);
  auto pts = grid_points(Rect::box(0.01), 5, 5);
  RateReport r2 = composition_rate_2d(seq, pts, 3, 1.2, 0.5);
  CHECK(r2.pass);
  CHECK(r2.fitted_log_rate <= 3 * std::log(1.2) + std::log(0.5));
}
