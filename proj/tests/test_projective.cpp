#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "pesin/projective.hpp"

#include <random>

using namespace pesin;

namespace {

// angle of J(cos t, sin t), unwrapped near a reference angle
double theta(const Mat2& j, double t, double ref) {
  const Vec2 w = j * unit(t);
  double a = std::atan2(w.y(), w.x());
  while (a - ref > kPi) a -= 2 * kPi;
  while (a - ref < -kPi) a += 2 * kPi;
  return a;
}

double fd1(const Mat2& j, double t, double h) {
  const double ref = theta(j, t, 0);
  return (theta(j, t + h, ref) - theta(j, t - h, ref)) / (2 * h);
}

double fd2(const Mat2& j, double t, double h) {
  const double ref = theta(j, t, 0);
  return (theta(j, t + h, ref) - 2 * ref + theta(j, t - h, ref)) / (h * h);
}

Mat2 rotation(double a) {
  Mat2 r;
  r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return r;
}

Mat2 random_matrix(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  for (;;) {
    Mat2 m;
    m << u(rng), u(rng), u(rng), u(rng);
    if (std::abs(m.determinant()) > 0.05) return m;
  }
}

}  // namespace

TEST_CASE("first projective derivative") {
  CHECK(projective_derivative(Mat2::Identity(), Direction(0.7)) == doctest::Approx(1.0));
  Mat2 d;
  d << 2, 0, 0, 1;
  CHECK(projective_derivative(d, Direction(0)) == doctest::Approx(0.5));

  PlanarMap h = henon(1.4, 0.3);
  Jet2D j = h.jet(Vec2(0.3, 0.2), 2);
  const double fd = fd1(h.jacobian(Vec2(0.3, 0.2)), 1.0, 1e-6);
  CHECK(std::abs(projective_derivative(j, Direction(1.0)) - std::abs(fd)) <= 1e-6 * std::abs(fd));

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> ang(0, kPi);
  for (int k = 0; k < 1000; ++k) {
    Mat2 m = random_matrix(rng);
    const double t = ang(rng);
    const double want = std::abs(fd1(m, t, 1e-6));
    REQUIRE(std::abs(projective_derivative(m, Direction(t)) - want) <= 1e-6 * want);
  }
  CHECK_THROWS_AS(projective_derivative(Mat2::Zero(), Direction(0)), InputError);
}

TEST_CASE("projective derivative invariants") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ang(0, kPi);
  for (int k = 0; k < 200; ++k) {
    Mat2 a = random_matrix(rng), b = random_matrix(rng);
    Direction e(ang(rng));
    // chain rule
    const Direction ae = Direction::of(a * e.vec());
    const double lhs = projective_derivative(b * a, e);
    const double rhs = projective_derivative(b, ae) * projective_derivative(a, e);
    CHECK(std::abs(lhs - rhs) <= 1e-9 * lhs);
    // rotations on either side
    Mat2 r = rotation(ang(rng)), s = rotation(ang(rng));
    const double rot = projective_derivative(r * a * s, Direction::of(s.transpose() * e.vec()));
    CHECK(std::abs(rot - projective_derivative(a, e)) <= 1e-10 * rot);
    // inverse
    const double inv = projective_derivative(Mat2(a.inverse()), ae) * projective_derivative(a, e);
    CHECK(std::abs(inv - 1) <= 1e-9);
  }
}

TEST_CASE("second projective derivative") {
  for (double t : {0.0, 0.4, 1.3, 2.9}) {
    CHECK(std::abs(projective_second_derivative(Mat2(1.7 * rotation(0.6)), Direction(t))) < 1e-14);
  }
  Mat2 d;
  d << 2, 0, 0, 1;
  CHECK(std::abs(projective_second_derivative(d, Direction(kPi / 2))) < 1e-14);
  CHECK(std::abs(projective_second_derivative(d, Direction(kPi / 4)) - fd2(d, kPi / 4, 1e-4)) < 1e-5);

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> ang(0, kPi);
  for (int k = 0; k < 200; ++k) {
    Mat2 m = random_matrix(rng);
    const double t = ang(rng);
    const double fd = fd2(m, t, 1e-4);
    CHECK(std::abs(projective_second_derivative(m, Direction(t)) - fd) < 1e-5 * std::max(1.0, std::abs(fd)));
    // vanishes orthogonally to the direction of maximal expansion
    const SvdAngles s = svd_angles(m);
    CHECK(std::abs(projective_second_derivative(m, Direction(s.alpha + kPi / 2))) < 1e-9);
  }
}

TEST_CASE("growth variance") {
  CHECK(growth_variance(Mat2(0.8 * rotation(1.1)), 16) < 1e-12);
  Mat2 d;
  d << 2, 0, 0, 1;
  const double gv = growth_variance(d, 16);
  CHECK(gv <= 5.0);
  double dense = 0;
  for (int i = 0; i < 100000; ++i) {
    const double t = kPi * i / 100000;
    const double l = std::sqrt(4 * std::cos(t) * std::cos(t) + std::sin(t) * std::sin(t));
    dense = std::max(dense, std::abs(3 * std::cos(t) * std::sin(t) / l));
  }
  CHECK(std::abs(gv - dense) < 1e-6);

  std::mt19937_64 rng(9);
  for (int k = 0; k < 20; ++k) {
    Mat2 m = random_matrix(rng);
    double scan = 0;
    for (int i = 0; i < 100000; ++i) {
      const double t = kPi * i / 100000;
      const double h = 1e-7;
      scan = std::max(scan, std::abs(((m * unit(t + h)).norm() - (m * unit(t - h)).norm()) / (2 * h)));
    }
    CHECK(std::abs(growth_variance(m, 32) - scan) < 1e-6);
    const SvdAngles s = svd_angles(m);
    CHECK(growth_variance(m, 32) < (s.a * s.a + s.b * s.b) / s.b);
  }
  CHECK_THROWS_AS(growth_variance(d, 4), InputError);
}

TEST_CASE("eccentricity") {
  CHECK(eccentricity(affine_map(rotation(0.3)), Rect::box(1), 5, 5) == doctest::Approx(1.0));
  Mat2 d;
  d << 2, 0, 0, 0.5;
  CHECK(eccentricity(affine_map(d), Rect::box(1), 5, 5) == doctest::Approx(4.0));
  PlanarMap h = henon(1.4, 0.3);
  const double coarse = eccentricity(h, Rect::box(1), 33, 33);
  const double fine = eccentricity(h, Rect::box(1), 129, 129);
  CHECK(std::abs(coarse - fine) <= 0.02 * fine);
  CHECK_THROWS_AS(eccentricity(h, Rect::box(20), 3, 3), InputError);
}

TEST_CASE("projective classification") {
  const double rho = 0.4;
  Mat2 d;
  d << 1, 0, 0, rho;
  OrbitSegment o = orbit(affine_map(d), Vec2(0.5, 0.5), 0, 40);
  auto att = classify_projective(o, Direction(0), rho, 0.05, ProjMode::ForwardAttractor, 40);
  CHECK(att.min_L == doctest::Approx(1.0));
  CHECK(att.first_failure(1.0) == -1);
  for (int n = 0; n <= 40; ++n) CHECK(att.log_dp[n] == doctest::Approx(n * std::log(rho)));

  auto rep20 = classify_projective(o, Direction(0), rho, 0.05, ProjMode::ForwardRepeller, 20);
  auto rep40 = classify_projective(o, Direction(0), rho, 0.05, ProjMode::ForwardRepeller, 40);
  CHECK(rep40.min_L > rep20.min_L * 1e10);
  CHECK(rep40.first_failure(10.0) == 2);  // n * 1.95 * log(1/rho) > log 10 first at n = 2

  // Henon contracted direction: in the triangular frame d_P DF^n(E) = prod a_i / b_i
  // (a forward-unstable direction, so only the diagonal is trusted), then
  // bisection on L over all sandwich inequalities
  PlanarMap h = henon(1.4, 0.3);
  OrbitSegment oh = orbit(h, Vec2(0.7 + 1e-4, 0.7), 0, 60);
  Direction e = contracted_direction(oh, 60);
  const int hz = 20;
  auto c = classify_projective(oh, e, 0.3, 0.1, ProjMode::ForwardRepeller, hz);
  Cocycle fr = cocycle_in_frame(oh, e);
  std::vector<double> dp{1.0};
  for (int n = 1; n <= hz; ++n) dp.push_back(dp.back() * fr.at(n - 1)(0, 0) / fr.at(n - 1)(1, 1));
  auto holds = [&](double L) {
    for (int n = 0; n <= hz; ++n)
      if (!(std::pow(0.3, -(1 - 0.1) * n) / L <= dp[n] && dp[n] <= L * std::pow(0.3, -(1 + 0.1) * n))) return false;
    return true;
  };
  double lo = 1, hi = 1;
  while (!holds(hi)) hi *= 2;
  if (hi > 1) {
    lo = hi / 2;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (holds(mid) ? hi : lo) = mid;
    }
  }
  CHECK(std::abs(c.min_L - hi) <= 1e-10 * c.min_L);
  CHECK_THROWS_AS(classify_projective(oh, e, 0.3, 0.1, ProjMode::BackwardRepeller, 5), InputError);
}
