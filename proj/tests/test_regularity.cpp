#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "pesin/projective.hpp"
#include "pesin/regularity.hpp"

#include <random>

using namespace pesin;

namespace {

Mat2 diag(double a, double b) {
  Mat2 d;
  d << a, 0, 0, b;
  return d;
}

// Henon saddle: p_{-M} = saddle + s e_u, iterated forward
OrbitSegment henon_window(int M, int N, double s = 3e-3) {
  PlanarMap h = henon(1.4, 0.3);
  const Vec2 xs(0.7, 0.7);
  Eigen::EigenSolver<Mat2> es(h.jacobian(xs));
  int k = std::abs(es.eigenvalues()(0).real()) > 1 ? 0 : 1;
  const Vec2 eu = es.eigenvectors().col(k).real().normalized();
  return orbit_from(h, xs + s * eu, M, N);
}

// brute force for vertical fields: forward norms from the backward-stable identity
// ||P_n v|| = sigma_min(P_N) ||P_{n,N}^{-1} u_min||, backward norms and Jacobians by plain products
double brute_vertical_min_L(const OrbitSegment& o, int M, int N, double lambda, double rho, double eps) {
  Mat2 P = Mat2::Identity();
  double ldet = 0, lscale = 0;
  for (int m = 0; m < N; ++m) {
    P = o.deriv(m) * P;
    ldet += std::log(std::abs(o.deriv(m).determinant()));
    const double s = P.norm();
    P /= s;
    lscale += std::log(s);
  }
  Eigen::JacobiSVD<Mat2> svd(P, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double lsmin = ldet - std::log(svd.singularValues()(0)) - lscale;  // |det P_N| / ||P_N||
  const Vec2 umin = svd.matrixU().col(1);
  const Vec2 v0 = svd.matrixV().col(1);
  double worst = 0;
  auto defect = [&](double v, double lb, int n) {
    worst = std::max({worst, (1 + eps) * n * lb - v, v - (1 - eps) * n * lb});
  };
  double lj = 0;
  for (int n = 1; n <= N; ++n) {
    lj += std::log(std::abs(o.deriv(n - 1).determinant()));
    Mat2 Q = Mat2::Identity();  // P_{n,N}^{-1} = D_n^{-1} ... D_{N-1}^{-1}
    for (int m = n; m < N; ++m) Q = Q * o.deriv(m).inverse();
    const double lnorm = lsmin + std::log((Q * umin).norm());
    defect(lnorm, std::log(lambda), n);
    defect(2 * lnorm - lj, std::log(rho), n);
  }
  Mat2 B = Mat2::Identity();
  double lbj = 0;
  for (int n = 1; n <= M; ++n) {
    B = o.deriv(-n).inverse() * B;
    lbj -= std::log(std::abs(o.deriv(-n).determinant()));
    const double lnorm = std::log((B * v0).norm());
    defect(-lnorm, std::log(lambda), n);
    defect(lbj - 2 * lnorm, std::log(rho), n);
  }
  return std::exp(worst);
}

// cocycle with forward part diag(mu, lambda) and backward part sharing the vertical eigendirection
// but with the mu-eigendirection at angle theta from vertical
OrbitSegment skew_model(double mu, double lambda, double theta, int M, int N) {
  Mat2 P;
  P << std::sin(theta), 0, std::cos(theta), 1;
  const Mat2 back = P * diag(mu, lambda) * P.inverse();
  std::vector<Mat2> j;
  for (int m = -M; m <= N; ++m) j.push_back(m < 0 ? back : diag(mu, lambda));
  return synthetic_orbit(j, M);
}

}  // namespace

TEST_CASE("diagonal model certifies with L = 1") {
  const double lambda = 0.1, rho = 0.5, mu = lambda / rho;
  std::vector<Mat2> j(41, diag(mu, lambda));
  OrbitSegment o = synthetic_orbit(j, 20);
  RegularityParams p{lambda, rho, 0.01, 1, 20, 20, Flavor::Vertical};
  RegularityCertificate c = certify(o, Direction(kPi / 2), p);
  CHECK(c.pass);
  CHECK(c.min_L == doctest::Approx(1.0));
  for (int n = 1; n <= 20; ++n) {
    CHECK(c.ineq[0].value[n - 1] == doctest::Approx(n * std::log(lambda)));
    CHECK(c.ineq[1].value[n - 1] == doctest::Approx(n * std::log(rho)));
  }
  p.flavor = Flavor::Horizontal;
  RegularityCertificate h = certify(o, Direction(0), p);
  CHECK(h.pass);
  CHECK(h.min_L == doctest::Approx(1.0));
  for (int n = 1; n <= 20; ++n) {
    CHECK(h.ineq[0].value[n - 1] == doctest::Approx(n * std::log(lambda)));
    CHECK(h.ineq[1].value[n - 1] == doctest::Approx(n * std::log(rho)));
  }
  // the wrong direction fails, and the depth check fires
  p.flavor = Flavor::Vertical;
  CHECK_FALSE(certify(o, Direction(0), p).pass);
  p.N = 30;
  CHECK_THROWS_AS(certify(o, Direction(kPi / 2), p), InputError);
  p.N = 20;
  p.eps = 1.5;
  CHECK_THROWS_AS(certify(o, Direction(kPi / 2), p), InputError);
}

TEST_CASE("henon vertical certificate against brute force") {
  OrbitSegment o = henon_window(20, 20);
  REQUIRE(o.N == 20);
  DirectionField fv = vertical_field(o);
  CHECK(Direction::distance(fv.direction(0), contracted_direction(o, 20)) < 1e-12);
  RateFit fit = fit_rates(o, fv, 20);
  CHECK(fit.lambda < 1);
  CHECK(fit.rho < 1);
  const double eps = 0.1;
  RegularityParams p{fit.lambda, fit.rho, eps, 1, 20, 20, Flavor::Vertical};
  RegularityCertificate c = certify(o, fv, p);
  const double brute = brute_vertical_min_L(o, 20, 20, fit.lambda, fit.rho, eps);
  CHECK(std::abs(c.min_L - brute) <= 1e-10 * brute);
  MESSAGE("henon fit lambda=" << fit.lambda << " rho=" << fit.rho << " eps_fit=" << fit.eps << " min L=" << c.min_L);
  // with eps = eps_fit everything sits inside the L = 1 bands
  p.eps = fit.eps * (1 + 1e-9);
  if (p.eps < 1) CHECK(certify(o, fv, p).ineq[0].log_min_L <= 1e-9);
}

TEST_CASE("rotation covariance and monotone horizon") {
  PlanarMap h = henon(1.4, 0.3);
  const double a = 0.7;
  Mat2 R;
  R << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  PlanarMap g = conjugate(h, R);
  OrbitSegment o1 = orbit_from(h, Vec2(0.3, 0.2), 10, 10);
  OrbitSegment o2 = orbit_from(g, R * Vec2(0.3, 0.2), 10, 10);
  REQUIRE(o1.M == 10);
  REQUIRE(o2.M == 10);
  const Direction e(1.1);
  const Direction re = Direction::of(R * e.vec());
  for (Flavor fl : {Flavor::Vertical, Flavor::Horizontal}) {
    RegularityParams p{0.4, 0.3, 0.2, 3, 10, 10, fl};
    RegularityCertificate c1 = certify(o1, e, p), c2 = certify(o2, re, p);
    for (int i = 0; i < 4; ++i)
      for (std::size_t n = 0; n < c1.ineq[i].lower_margin.size(); ++n) {
        CHECK(std::abs(c1.ineq[i].lower_margin[n] - c2.ineq[i].lower_margin[n]) < 1e-10);
        CHECK(std::abs(c1.ineq[i].upper_margin[n] - c2.ineq[i].upper_margin[n]) < 1e-10);
      }
    double prev = 1;
    for (int n = 1; n <= 10; ++n) {
      RegularityParams q = p;
      q.M = q.N = n;
      const double l = certify(o1, e, q).min_L;
      CHECK(l >= prev);
      prev = l;
    }
  }
}

TEST_CASE("vertical regularity is projective regularity") {
  const double lambda = 0.3, rho = 0.5, eps = 0.1;
  std::vector<Mat2> j;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> s(-0.8, 0.8);
  for (int m = -30; m <= 30; ++m) {
    const double u = std::pow(lambda, 1 + eps * s(rng)), v = std::pow(rho, 1 + eps * s(rng));
    Mat2 a;
    a << u / v, 0.3 * s(rng), 0, u;  // upper triangular: vertical is not invariant, horizontal is
    j.push_back(a.transpose());      // lower triangular: vertical invariant
  }
  OrbitSegment o = synthetic_orbit(j, 30);
  RegularityParams p{lambda, rho, eps, 1, 30, 30, Flavor::Vertical};
  p.L = certify(o, Direction(kPi / 2), p).min_L;
  RegularityCertificate c = certify(o, Direction(kPi / 2), p);
  REQUIRE(c.pass);
  auto f = classify_projective(o, Direction(kPi / 2), rho, eps, ProjMode::ForwardRepeller, 30);
  CHECK(f.first_failure(p.L * (1 + 1e-9)) == -1);
  auto b = classify_projective(o, Direction(kPi / 2), rho, eps, ProjMode::BackwardAttractor, 30);
  CHECK(b.first_failure(p.L * (1 + 1e-9)) == -1);
}

TEST_CASE("vertical to horizontal transfer") {
  const double lambda = 0.1, rho = 0.5, eps = 0.01;
  TransferConstants k = transfer_constants(lambda, rho, eps, 1, 1, 1);
  CHECK(k.eps1 == doctest::Approx(0.036020599913).epsilon(1e-9));
  CHECK(k.eps2 == doctest::Approx(0.016020599913).epsilon(1e-9));
  CHECK(std::abs(k.eps1 - (3 + 2 * 0.30103) * 0.01) < 1e-6);

  std::vector<Mat2> j(41, diag(lambda / rho, lambda));
  OrbitSegment o = synthetic_orbit(j, 20);
  RegularityCertificate cv = certify(o, Direction(kPi / 2), {lambda, rho, eps, 1, 0, 20, Flavor::Vertical});
  TransferReport t = vertical_to_horizontal(o, cv, transport(o, Direction(0)), kPi / 4);
  CHECK(t.pass);
  CHECK(t.empirical_min_L == doctest::Approx(1.0));
  CHECK(t.empirical_min_L <= t.L_pred);
  CHECK_THROWS_AS(vertical_to_horizontal(o, cv, transport(o, Direction(kPi / 2 - 0.1)), 0.2), InputError);

  RegularityCertificate ch = certify(o, Direction(0), {lambda, rho, eps, 1, 20, 0, Flavor::Horizontal});
  TransferReport tb = horizontal_to_vertical_backward(o, ch, transport(o, Direction(kPi / 2)), kPi / 4);
  CHECK(tb.pass);
  CHECK(tb.empirical_min_L == doctest::Approx(1.0));
}

TEST_CASE("henon transfers") {
  OrbitSegment o = henon_window(30, 20);
  REQUIRE(o.N == 20);
  DirectionField fv = vertical_field(o);
  RateFit fit = fit_rates(o, fv, 20);
  const double eps = 0.05;
  std::vector<double> khat;
  for (int N : {10, 20}) {
    RegularityParams p{fit.lambda, fit.rho, eps, 1, 0, N, Flavor::Vertical};
    p.L = certify(o, fv, p).min_L;
    RegularityCertificate cv = certify(o, fv, p);
    REQUIRE(cv.pass);
    const Direction eh(fv.direction(0).t + 0.6);
    TransferReport t = vertical_to_horizontal(o, cv, transport(o, eh), 0.5);
    CHECK(t.pass);
    CHECK(t.empirical_min_L <= t.L_pred);
    khat.push_back(t.K_hat);
    MESSAGE("N=" << N << " K^=" << t.K_hat << " L1=" << t.L_pred << " empirical=" << t.empirical_min_L);
  }
  CHECK(khat[1] <= 2 * khat[0]);

  // backward window M = 30 along the horizontal field
  DirectionField fh = horizontal_field(o);
  RegularityParams pb{fit.lambda, fit.rho, eps, 1, 30, 0, Flavor::Horizontal};
  pb.L = certify(o, fh, pb).min_L;
  RegularityCertificate ch = certify(o, fh, pb);
  REQUIRE(ch.pass);
  const Direction ev(fh.direction(0).t + 0.6);
  TransferReport tb = horizontal_to_vertical_backward(o, ch, transport(o, ev), 0.5);
  CHECK(tb.pass);
  MESSAGE("backward K^=" << tb.K_hat << " L1=" << tb.L_pred << " empirical=" << tb.empirical_min_L);
}

TEST_CASE("pesin combination") {
  const double lambda = 0.1, rho = 0.5, eps = 0.01, mu = lambda / rho;
  {
    std::vector<Mat2> j(41, diag(mu, lambda));
    OrbitSegment o = synthetic_orbit(j, 20);
    DirectionField fv = transport(o, Direction(kPi / 2)), fh = transport(o, Direction(0));
    RegularityCertificate cv = certify(o, fv, {lambda, rho, eps, 1, 0, 20, Flavor::Vertical});
    RegularityCertificate ch = certify(o, fh, {lambda, rho, eps, 1, 20, 0, Flavor::Horizontal});
    CombineReport r = combine_pesin(o, cv, fv, ch, fh);
    CHECK(r.theta == doctest::Approx(kPi / 2));
    CHECK(r.calL == doctest::Approx(1.0));
    CHECK(r.in_bracket);
  }
  {
    // linear map with eigendirections at angle 0.1: exactly regular, so only K^ ~ theta^{-2} restores the lower bracket
    const double th = 0.1;
    Mat2 P;
    P << std::sin(th), 0, std::cos(th), 1;
    std::vector<Mat2> j(41, P * diag(mu, lambda) * P.inverse());
    OrbitSegment o = synthetic_orbit(j, 20);
    DirectionField fv = transport(o, Direction(kPi / 2)), fh = transport(o, Direction(kPi / 2 - th));
    RegularityCertificate cv = certify(o, fv, {lambda, rho, eps, 1, 0, 20, Flavor::Vertical});
    RegularityCertificate ch = certify(o, fh, {lambda, rho, eps, 1, 20, 0, Flavor::Horizontal});
    CombineReport r = combine_pesin(o, cv, fv, ch, fh);
    CHECK(r.calL == doctest::Approx(1.0));
    CHECK(r.K_hat == doctest::Approx(1 / (th * th)));
  }
  std::vector<double> scaled;
  for (double th : {0.4, 0.2, 0.1}) {
    OrbitSegment o = skew_model(mu, lambda, th, 30, 30);
    DirectionField fv = transport(o, Direction(kPi / 2));
    DirectionField fh = transport(o, Direction(kPi / 2 - th));
    RegularityCertificate cv = certify(o, fv, {lambda, rho, eps, 1, 0, 30, Flavor::Vertical});
    RegularityCertificate ch = certify(o, fh, {lambda, rho, eps, 1, 30, 0, Flavor::Horizontal});
    REQUIRE(cv.pass);
    REQUIRE(ch.pass);
    CombineReport r = combine_pesin(o, cv, fv, ch, fh);
    CHECK(r.theta == doctest::Approx(th));
    CHECK(r.in_bracket);
    scaled.push_back(r.calL * th * th);
    MESSAGE("theta=" << th << " calL=" << r.calL << " K^=" << r.K_hat);
  }
  const double hi = *std::max_element(scaled.begin(), scaled.end()), lo = *std::min_element(scaled.begin(), scaled.end());
  CHECK(hi <= 2 * lo);

  OrbitSegment oh = henon_window(25, 25);
  REQUIRE(oh.N == 25);
  DirectionField fv = vertical_field(oh), fh = horizontal_field(oh);
  RateFit fit = fit_rates(oh, fv, 25);
  RegularityParams pv{fit.lambda, fit.rho, 0.05, 1, 0, 25, Flavor::Vertical};
  pv.L = certify(oh, fv, pv).min_L;
  RegularityParams ph{fit.lambda, fit.rho, 0.05, 1, 25, 0, Flavor::Horizontal};
  ph.L = certify(oh, fh, ph).min_L;
  CombineReport r = combine_pesin(oh, certify(oh, fv, pv), fv, certify(oh, fh, ph), fh);
  CHECK(r.in_bracket);
  MESSAGE("henon theta=" << r.theta << " calL=" << r.calL << " bracket [" << r.lo << ", " << r.hi << "] K^=" << r.K_hat);
}

TEST_CASE("irregularity profile") {
  const double lambda = 0.3, rho = 0.5, eps = 0.05;
  std::vector<Mat2> j(61, diag(lambda / rho, lambda));
  OrbitSegment o = synthetic_orbit(j, 30);
  IrregularityProfile d = irregularity_profile(o, transport(o, Direction(kPi / 2)), {lambda, rho, eps, 1, 30, 30});
  for (double l : d.log_L) CHECK(std::abs(l) < 1e-12);
  CHECK(d.pass);

  // u_n = lambda^{1 + eps (-1)^n}, |m| <= 50
  std::vector<Mat2> ja;
  for (int m = -50; m <= 50; ++m) {
    const double u = std::pow(lambda, 1 + eps * ((m & 1) ? -1 : 1));
    ja.push_back(diag(u / rho, u));
  }
  OrbitSegment oa = synthetic_orbit(ja, 50);
  RegularityParams pa{lambda, rho, eps, 1, 50, 50};
  DirectionField fa = transport(oa, Direction(kPi / 2));
  pa.L = certify(oa, fa, pa).min_L;
  IrregularityProfile a = irregularity_profile(oa, fa, pa);
  CHECK(a.pass);
  REQUIRE(a.m.size() == 101);
  for (std::size_t i = 0; i < a.m.size(); ++i)
    CHECK(a.log_L[i] <= 2 * std::log(a.L) - 2 * eps * std::abs(a.m[i]) * std::log(lambda) + 1e-9);

  OrbitSegment oh = henon_window(20, 20);
  DirectionField fv = vertical_field(oh);
  RateFit fit = fit_rates(oh, fv, 20);
  RegularityParams ph{fit.lambda, fit.rho, 0.05, 1, 20, 20};
  ph.L = certify(oh, fv, ph).min_L;
  IrregularityProfile h = irregularity_profile(oh, fv, ph);
  CHECK(h.pass);
  CHECK(h.slope <= -2 * 0.05 * std::log(std::min(fit.lambda, fit.rho)) + 1e-9);
  MESSAGE("henon profile slope " << h.slope << " L=" << h.L);
}
