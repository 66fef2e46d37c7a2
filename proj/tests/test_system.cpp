#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "pesin/system.hpp"

#include <random>

using namespace pesin;

TEST_CASE("henon formula and inverse") {
  PlanarMap f = henon(0.0, -1.0);
  Mat2 j = f.jacobian(Vec2::Zero());
  CHECK(j(0, 0) == 0);
  CHECK(j(0, 1) == 1);
  CHECK(j(1, 0) == 1);
  CHECK(j(1, 1) == 0);
  CHECK(f.eval(Vec2::Zero()).norm() == 0);

  PlanarMap h = henon(1.4, 0.3);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-2, 2);
  double worst = 0;
  for (int k = 0; k < 1000; ++k) {
    Vec2 p(u(rng), u(rng));
    worst = std::max(worst, (h.inverse(h.eval(p)) - p).norm());
  }
  CHECK(worst < 1e-12);
  CHECK_THROWS_AS(henon(1.0, 0.0), InputError);

  // inverse series really inverts the forward series
  Vec2 p(0.3, -0.4);
  Series2Map id = compose(h.inverse_series(h.eval(p), 4), h.series(p, 4));
  CHECK(id.f.value() == doctest::Approx(p.x()));
  CHECK(id.f.at(1, 0) == doctest::Approx(1.0));
  CHECK(std::abs(id.f.at(2, 0)) < 1e-12);
  CHECK(std::abs(id.g.at(1, 1)) < 1e-12);
}

TEST_CASE("classical henon orbit stays bounded") {
  PlanarMap h = henon(1.4, 0.3);
  Vec2 p = Vec2::Zero();
  double worst = 0;
  for (int n = 0; n < 10000; ++n) {
    p = h.eval(p);
    worst = std::max(worst, p.cwiseAbs().maxCoeff());
  }
  CHECK(worst <= 1.8);
}

TEST_CASE("orbits") {
  PlanarMap id = affine_map(Mat2::Identity());
  OrbitSegment o = orbit(id, Vec2(0.2, 0.3), 5, 5);
  CHECK(o.M == 5);
  CHECK(o.N == 5);
  for (int m = -5; m <= 5; ++m) {
    CHECK(o.point(m) == Vec2(0.2, 0.3));
    CHECK(o.deriv(m) == Mat2::Identity());
  }

  Mat2 d;
  d << 2, 0, 0, 0.5;
  OrbitSegment ol = orbit(affine_map(d), Vec2(1, 1), 0, 3);
  CHECK(ol.point(3) == Vec2(8, 0.125));

  // saddle fixed point by the quadratic formula x^2 + (1+b)x - a = 0
  const double a = 1.4, b = 0.3;
  const double xs = (-(1 + b) + std::sqrt((1 + b) * (1 + b) + 4 * a)) / 2;
  PlanarMap h = henon(a, b);
  OrbitSegment oh = orbit(h, Vec2(xs, xs), 5, 5);
  for (int m = -5; m <= 5; ++m) CHECK((oh.point(m) - Vec2(xs, xs)).norm() < 1e-10);
  for (int m = -5; m < 5; ++m) CHECK((h.eval(oh.point(m)) - oh.point(m + 1)).norm() < 1e-10);

  // domain exit truncates instead of throwing
  OrbitSegment ot = orbit(affine_map(d, Vec2::Zero(), Rect::box(10)), Vec2(1, 1), 0, 10);
  CHECK(ot.truncated);
  CHECK(ot.N == 3);
  CHECK_THROWS_AS(orbit(h, Vec2(50, 0), 1, 1), InputError);
}

TEST_CASE("framed cocycle") {
  Mat2 d;
  d << 0.2, 0, 0, 0.1;
  OrbitSegment o = orbit(affine_map(d), Vec2(0.1, 0.1), 3, 3);
  Cocycle c = cocycle_in_frame(o, Direction(kPi / 2));
  for (int m = -3; m < 3; ++m) {
    CHECK((c.at(m) - d).norm() < 1e-15);
    CHECK((c.frame(m) - Mat2::Identity()).norm() < 1e-15);
  }

  Mat2 rot;
  rot << std::cos(kPi / 4), -std::sin(kPi / 4), std::sin(kPi / 4), std::cos(kPi / 4);
  OrbitSegment orr = orbit(affine_map(rot), Vec2(0.3, 0.1), 2, 6);
  Cocycle cr = cocycle_in_frame(orr, Direction(kPi / 2));
  for (int m = -2; m < 6; ++m) {
    CHECK(std::abs(cr.at(m)(0, 1)) < 1e-12);
    CHECK(std::abs(std::abs(cr.at(m).determinant()) - 1) < 1e-12);
  }

  PlanarMap h = henon(1.4, 0.3);
  OrbitSegment oh = orbit(h, Vec2(0.1, 0.1), 0, 50);
  Direction e = contracted_direction(oh, 50);
  Cocycle ch = cocycle_in_frame(oh, e);
  for (int m = 0; m < 50; ++m) {
    CHECK(std::abs(ch.at(m)(0, 1)) < 1e-9 * ch.at(m).norm());
    CHECK(ch.at(m)(0, 0) > 0);
    CHECK(ch.at(m)(1, 1) > 0);
  }

  // det of the framed product equals Jac F^n by jet composition; singular values survive the frame change
  Series2Map s = Series2Map::identity(1, oh.point(0));
  Mat2 framed = Mat2::Identity(), raw = Mat2::Identity();
  for (int n = 1; n <= 50; ++n) {
    s = compose(h.series(s.value(), 1), s);
    framed = ch.at(n - 1) * framed;
    raw = oh.deriv(n - 1) * raw;
    const double jac = std::abs(s.linear().determinant());
    CHECK(std::abs(std::abs(framed.determinant()) - jac) <= 1e-9 * jac);
    if (n <= 20) {
      Eigen::JacobiSVD<Mat2> s1(framed), s2(raw);
      for (int k = 0; k < 2; ++k)
        CHECK(std::abs(s1.singularValues()(k) - s2.singularValues()(k)) <= 1e-10 * s2.singularValues()(k));
    }
  }
}

TEST_CASE("contracted direction against SVD") {
  PlanarMap h = henon(1.4, 0.3);
  const double xs = 0.7;
  OrbitSegment o = orbit(h, Vec2(xs + 1e-3, xs), 6, 8);
  Mat2 p = Mat2::Identity();
  for (int m = 0; m < 8; ++m) p = o.deriv(m) * p;
  Eigen::JacobiSVD<Mat2> svd(p, Eigen::ComputeFullV);
  Direction want = Direction::of(svd.matrixV().col(1));
  CHECK(Direction::distance(contracted_direction(o, 8), want) < 1e-10);

  Mat2 q = Mat2::Identity();
  for (int m = -1; m >= -6; --m) q = o.deriv(m).inverse() * q;
  Eigen::JacobiSVD<Mat2> svd2(q, Eigen::ComputeFullV);
  CHECK(Direction::distance(contracted_direction(o, 6, false), Direction::of(svd2.matrixV().col(1))) < 1e-10);
}

TEST_CASE("polynomial map and conjugation") {
  PlanarMap f = polynomial_map({{1, 0, 1.25}, {3, 0, 1e-3}}, {{1, 0, 0.5}, {0, 1, 0.5}, {0, 3, 1e-3}}, Rect::box(2));
  std::vector<Vec2> pts = grid_points(Rect::box(1), 7, 7);
  CHECK(roundtrip_residual(f, pts) < 1e-12);

  Mat2 r;
  r << std::cos(0.3), -std::sin(0.3), std::sin(0.3), std::cos(0.3);
  PlanarMap h = henon(1.4, 0.3);
  PlanarMap g = conjugate(h, r);
  Vec2 p(0.2, -0.1);
  CHECK((g.eval(r * p) - r * h.eval(p)).norm() < 1e-14);
  CHECK((g.inverse(g.eval(p)) - p).norm() < 1e-12);
}
