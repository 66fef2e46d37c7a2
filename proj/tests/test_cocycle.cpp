#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "pesin/cocycle.hpp"
#include "pesin/projective.hpp"

using namespace pesin;

namespace {
TriangularCocycle constant(const Mat2& a, int N, double rho, double eps, bool upper) {
  TriangularCocycle c;
  c.A.assign(N, a);
  c.upper = upper;
  c.rho = rho;
  c.eps = eps;
  c.C = uniform_bound(c.A, 1.01);
  c.L = upper ? attractor_min_L(c) : repeller_min_L(c);
  return c;
}
}  // namespace

TEST_CASE("adaptation lemma") {
  const double lambda = 0.3, eps = 0.05, delta = 0.1;
  std::vector<double> u(40, lambda);  // M = 15, N = 25
  AdaptationReport r = adaptation_scalings(u, 15, lambda, eps, delta, 1.0);
  for (int l = -15; l <= 25; ++l) CHECK(r.zeta.at(l) == doctest::Approx(std::pow(lambda, -delta * std::abs(l))));
  CHECK(r.pass);
  CHECK(r.max_ratio_residual < 1e-12);

  // alternating u_n = lambda^{1 +- eps}, direct products as oracle
  std::vector<double> alt;
  for (int l = -100; l < 100; ++l) alt.push_back(std::pow(lambda, 1 + eps * ((l & 1) ? 1 : -1)));
  AdaptationReport ra = adaptation_scalings(alt, 100, lambda, eps, delta, 1.0 / lambda);
  double prod = 1;
  for (int n = 1; n <= 100; ++n) {
    prod *= alt[100 + n - 1];
    const double z = std::pow(lambda, (1 - delta) * n) / prod;
    CHECK(z == doctest::Approx(ra.zeta.at(n)).epsilon(1e-10));
    if (n < 100) CHECK(z < std::pow(lambda, -(delta + eps) * n) / lambda);
  }
  prod = 1;
  for (int m = 1; m <= 100; ++m) {
    prod *= alt[100 - m];
    const double z = prod / std::pow(lambda, (1 + delta) * m);
    CHECK(z == doctest::Approx(ra.zeta.at(-m)).epsilon(1e-10));
    CHECK(z < std::pow(lambda, -(delta + eps) * m) / lambda);
  }
  CHECK(ra.pass);

  std::vector<double> bad(10, lambda);
  bad[5] = lambda * lambda * lambda;  // u_0 with M = 5
  try {
    adaptation_scalings(bad, 5, lambda, eps, delta, 1.0);
    FAIL("no premise error");
  } catch (const PremiseError& e) {
    CHECK(std::string(e.what()).find("n=1") != std::string::npos);
  }
}

TEST_CASE("dominated block diagonalization") {
  const double rho = 0.5, eps = 0.05;
  Mat2 d;
  d << 1, 0, 0, rho;
  DominatedReport r = dominated_block_diagonalization(constant(d, 30, rho, eps, true));
  for (int n = 0; n <= 30; ++n) CHECK(r.sigma.at(n) == doctest::Approx(std::pow(rho, -eps * n)));
  for (const auto& a : r.A_tilde) {
    CHECK(a(0, 0) == doctest::Approx(1.0));
    CHECK(a(1, 1) == doctest::Approx(std::pow(rho, 1 - eps)));
    CHECK(a(0, 1) == 0);
  }
  Mat2 u;
  u << 1, 0.3, 0, rho;
  DominatedReport ru = dominated_block_diagonalization(constant(u, 20, rho, eps, true));
  for (int n = 0; n < 20; ++n) CHECK(ru.A_tilde[n](0, 1) == doctest::Approx(0.3 / ru.sigma.at(n)));

  TriangularCocycle rc = synthetic_cocycle(3, 40, rho, eps, true);
  DominatedReport rr = dominated_block_diagonalization(rc);
  for (int n = 0; n < 40; ++n) {
    const Mat2 s0 = Eigen::Vector2d(1, rr.sigma.at(n)).asDiagonal();
    const Mat2 s1 = Eigen::Vector2d(1, rr.sigma.at(n + 1)).asDiagonal();
    CHECK((rr.A_tilde[n] * s0 - s1 * rc.A[n]).norm() < 1e-12);
  }
  CHECK(rr.min_lower_margin >= 0);
  CHECK(rr.min_upper_margin >= 0);

  TriangularCocycle weak = rc;
  weak.L = 0.5;
  CHECK_THROWS_AS(dominated_block_diagonalization(weak), PremiseError);
}

TEST_CASE("transverse repelling direction") {
  const double rho = 0.5, eps = 0.05;
  Mat2 d;
  d << 1, 0, 0, rho;
  TransverseReport r = transverse_repelling_direction(constant(d, 30, rho, eps, true));
  CHECK(Direction::distance(r.E_hat, Direction(kPi / 2)) < 1e-14);
  for (double g : r.log_growth) CHECK(std::abs(g) < 1e-12);
  CHECK(r.pass);

  Mat2 a;
  a << 1, 0.5, 0, 0.5;
  TransverseReport ra = transverse_repelling_direction(constant(a, 60, rho, eps, true));
  Eigen::EigenSolver<Mat2> es(Mat2(a.inverse()));
  int k = es.eigenvalues()(0).real() > es.eigenvalues()(1).real() ? 0 : 1;
  CHECK(es.eigenvalues()(k).real() == doctest::Approx(2.0));
  Vec2 ev = es.eigenvectors().col(k).real();
  CHECK(Direction::distance(ra.E_hat, Direction::of(ev)) < 1e-8);
  CHECK(ra.pass);

  // two horizons of the same cocycle: drift bounded by backward cone contraction
  TriangularCocycle full = synthetic_cocycle(9, 20, rho, eps, true);
  TriangularCocycle half = full;
  half.A.resize(10);
  half.L = attractor_min_L(half);
  const double drift = Direction::distance(transverse_repelling_direction(full).E_hat,
                                           transverse_repelling_direction(half).E_hat);
  const double wf = transverse_repelling_direction(full).omega;
  CHECK(drift <= std::pow(rho, (1 - eps) * 10) * full.L * wf * wf);

  // E^ is a fixed point of forward-then-backward transport
  TransverseReport rf = transverse_repelling_direction(full);
  Vec2 v = rf.E_hat.vec();
  for (int n = 0; n < 8; ++n) v = (full.A[n] * v).normalized();
  for (int n = 7; n >= 0; --n) v = (full.A[n].inverse() * v).normalized();
  CHECK(Direction::distance(Direction::of(v), rf.E_hat) < 1e-10);
}

TEST_CASE("synthetic cocycles: conjugacies, cones, sandwich") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    TriangularCocycle up = synthetic_cocycle(seed, 60, 0.5, 0.05, true);
    DominatedReport d = dominated_block_diagonalization(up);
    TransverseReport t = transverse_repelling_direction(up);
    CHECK(d.max_residual <= 1e-10);
    CHECK(t.min_cone_margin > 0);
    CHECK(t.min_lower_margin >= 0);
    CHECK(t.min_upper_margin >= 0);
    TriangularCocycle lo = synthetic_cocycle(seed + 1000, 60, 0.5, 0.05, false);
    RepellerReport rr = repeller_normalization(lo);
    CHECK(rr.max_hat_residual <= 1e-10);
    CHECK(rr.max_check_residual <= 1e-10);
    CHECK(rr.min_cone_margin > 0);
    CHECK(rr.max_tau <= rr.omega_hat);
  }
}

TEST_CASE("repeller normalization") {
  const double rho = 0.5, eps = 0.05;
  Mat2 d;
  d << 1 / rho, 0, 0, 1;
  RepellerReport r = repeller_normalization(constant(d, 30, rho, eps, false));
  for (double t : r.tau) CHECK(t == 0);
  for (const auto& a : r.A_check) CHECK(a(1, 0) == 0);

  // b/a = rho^{1+eps}: sigma^ == 1, A^ == A, and tau -> c/(a - b), the slope of the eigenvector for a
  const double aa = 1.0, bb = std::pow(rho, 1 + eps), c = 0.2;
  Mat2 l;
  l << aa, 0, c, bb;
  RepellerReport rl = repeller_normalization(constant(l, 50, rho, eps, false));
  CHECK(rl.tau.back() == doctest::Approx(c / (aa - bb)).epsilon(1e-10));
  Eigen::EigenSolver<Mat2> es(l);
  int k = std::abs(es.eigenvalues()(0).real() - aa) < 1e-12 ? 0 : 1;
  Vec2 ev = es.eigenvectors().col(k).real();
  CHECK(rl.tau.back() == doctest::Approx(ev.y() / ev.x()).epsilon(1e-10));
  for (int n = 0; n < 50; ++n) {
    Mat2 tn, tn1;
    tn << 1, 0, -rl.tau[n], 1;
    tn1 << 1, 0, -rl.tau[n + 1], 1;
    CHECK((rl.A_check[n] * tn - tn1 * rl.A_hat[n]).norm() < 1e-12);
  }
}

TEST_CASE("projective contraction bounds") {
  const double rho = 0.5, eps = 0.05;
  Mat2 d;
  d << 1 / rho, 0, 0, 1;
  TriangularCocycle c = constant(d, 40, rho, eps, false);
  ContractionReport h = projective_contraction_bounds(c, kPi / 2);
  for (int n = 0; n <= 40; ++n) CHECK(h.log_dp[n] == doctest::Approx(n * std::log(rho)));
  CHECK(h.crossover == 0);

  ContractionReport r2 = projective_contraction_bounds(c, rho * rho);
  CHECK(std::abs(r2.crossover - 2 / (1 + eps)) <= 1);
  std::vector<double> ks;
  for (double t : {rho, rho * rho, rho * rho * rho}) ks.push_back(projective_contraction_bounds(c, t).K());
  const double kmax = *std::max_element(ks.begin(), ks.end()), kmin = *std::min_element(ks.begin(), ks.end());
  CHECK(kmax <= 1.2 * kmin);
  // the literal lower bound is off by t^{-2} before the crossover
  const double l1 = projective_contraction_bounds(c, rho * rho).K_lower_literal;
  const double l2 = projective_contraction_bounds(c, rho * rho * rho).K_lower_literal;
  CHECK(l2 > 3 * l1);

  TriangularCocycle r60 = synthetic_cocycle(21, 60, rho, eps, false);
  TriangularCocycle r30 = r60;
  r30.A.resize(30);
  for (double t : {0.5, 0.1, 0.01}) {
    ContractionReport a = projective_contraction_bounds(r30, t), b = projective_contraction_bounds(r60, t);
    CHECK(std::isfinite(b.K_lower));
    CHECK(std::isfinite(b.K_upper));
    CHECK(b.K_lower <= 2 * a.K_lower);
    CHECK(b.K_upper <= 2 * a.K_upper);
  }
  CHECK_THROWS_AS(projective_contraction_bounds(c, 0.0), InputError);
}
