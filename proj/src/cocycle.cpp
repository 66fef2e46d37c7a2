#include "pesin/cocycle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace pesin {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double uniform_bound(std::span<const Mat2> a, double factor) {
  double c = 1;
  for (const auto& m : a) c = std::max({c, op_norm(m), 1.0 / min_sv(m)});
  return c * factor;
}

TriangularCocycle synthetic_cocycle(std::uint64_t seed, int N, double rho, double eps, bool upper, double corner) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ua(0.8, 1.25), us(-0.9, 0.9), uc(-corner, corner);
  TriangularCocycle c;
  c.upper = upper;
  c.rho = rho;
  c.eps = eps;
  for (int n = 0; n < N; ++n) {
    const double s = us(rng);
    double a, b;
    if (upper) {
      a = ua(rng);
      b = a * std::pow(rho, 1 + eps * s);
    } else {
      b = ua(rng);
      a = b * std::pow(rho, -(1 + eps * s));
    }
    Mat2 m;
    if (upper) m << a, uc(rng), 0, b;
    else m << a, 0, uc(rng), b;
    c.A.push_back(m);
  }
  c.C = uniform_bound(c.A, 1.01);
  c.L = upper ? attractor_min_L(c) : repeller_min_L(c);
  return c;
}

// ---------------------------------------------------------------- adaptation

AdaptationReport adaptation_scalings(std::span<const double> u, int M, double lambda, double eps, double delta,
                                     double L) {
  const int N = static_cast<int>(u.size()) - M;
  if (M < 0 || N < 0) throw InputError("adaptation: bad window");
  if (!(eps < delta && delta < 1)) throw InputError("adaptation: need eps < delta < 1");
  auto uu = [&](int l) { return u[l + M]; };
  const double ll = std::log(lambda), lL = std::log(L);
  const double tol = 1e-12;
  // premise, forward then backward
  double acc = 0;
  for (int n = 1; n <= N; ++n) {
    acc += std::log(uu(n - 1));
    const double lo = -lL + (1 + eps) * n * ll, hi = lL + (1 - eps) * n * ll;
    if (acc < lo - tol || acc > hi + tol) {
      std::ostringstream os;
      os << "adaptation premise violated at n=" << n << " (log defect " << std::max(lo - acc, acc - hi) << ")";
      throw PremiseError(os.str());
    }
  }
  acc = 0;
  for (int m = 1; m <= M; ++m) {
    acc += std::log(uu(-m));
    const double lo = -lL + (1 + eps) * m * ll, hi = lL + (1 - eps) * m * ll;
    if (acc < lo - tol || acc > hi + tol) {
      std::ostringstream os;
      os << "adaptation premise violated at n=" << -m << " (log defect " << std::max(lo - acc, acc - hi) << ")";
      throw PremiseError(os.str());
    }
  }
  AdaptationReport r;
  r.zeta.lo = -M;
  r.zeta.hi = N;
  r.zeta.log_values.assign(M + N + 1, 0.0);
  acc = 0;
  for (int n = 1; n <= N; ++n) {
    acc += std::log(uu(n - 1));
    r.zeta.log_values[n + M] = (1 - delta) * n * ll - acc;
  }
  acc = 0;
  for (int m = 1; m <= M; ++m) {
    acc += std::log(uu(-m));
    r.zeta.log_values[-m + M] = acc - (1 + delta) * m * ll;
  }
  r.min_lower_margin = r.min_upper_margin = r.min_lower_margin_strict = kInf;
  for (int l = -M; l <= N; ++l) {
    if (l < N) {
      const double pred = l >= 0 ? (1 - delta) * ll - std::log(uu(l)) : (1 + delta) * ll - std::log(uu(l));
      const double got = r.zeta.log_at(l + 1) - r.zeta.log_at(l);
      r.max_ratio_residual = std::max(r.max_ratio_residual, std::abs(std::expm1(got - pred)));
    }
    if (l == N) continue;  // the lemma states the sandwich for -M <= l < N
    const double z = r.zeta.log_at(l);
    r.min_lower_margin = std::min(r.min_lower_margin, z + lL);
    r.min_upper_margin = std::min(r.min_upper_margin, lL - (delta + eps) * std::abs(l) * ll - z);
    if (l != 0) r.min_lower_margin_strict = std::min(r.min_lower_margin_strict, z);
  }
  r.pass = r.min_lower_margin >= -1e-9 && r.min_upper_margin >= -1e-9 && r.max_ratio_residual < 1e-12;
  return r;
}

// ---------------------------------------------------------------- projective attractor

double attractor_min_L(const TriangularCocycle& c) {
  const double lr = std::log(c.rho);
  double acc = 0, worst = 0;
  for (int n = 1; n <= c.N(); ++n) {
    acc += std::log(c.b(n - 1) / c.a(n - 1));
    worst = std::max({worst, (1 + c.eps) * n * lr - acc, acc - (1 - c.eps) * n * lr});
  }
  return std::exp(worst);
}

namespace {
void require_triangular(const TriangularCocycle& c, bool upper) {
  if (c.upper != upper) throw InputError(upper ? "need an upper triangular cocycle" : "need a lower triangular cocycle");
  for (const auto& m : c.A) {
    const double off = upper ? m(1, 0) : m(0, 1);
    if (off != 0.0 || !(m(0, 0) > 0) || !(m(1, 1) > 0))
      throw InputError("cocycle is not triangular with positive diagonal");
  }
}
}  // namespace

DominatedReport dominated_block_diagonalization(const TriangularCocycle& c) {
  require_triangular(c, true);
  if (attractor_min_L(c) > c.L * (1 + 1e-12))
    throw PremiseError("projective attractor condition not certified with the given L");
  const int N = c.N();
  const double lr = std::log(c.rho), rt = std::pow(c.rho, 1 - c.eps);
  DominatedReport r;
  r.sigma.lo = 0;
  r.sigma.hi = N;
  r.sigma.log_values.assign(N + 1, 0.0);
  double acc = 0;
  for (int n = 1; n <= N; ++n) {
    acc += std::log(c.b(n - 1) / c.a(n - 1));
    r.sigma.log_values[n] = (1 - c.eps) * n * lr - acc;
  }
  r.min_lower_margin = r.min_upper_margin = kInf;
  for (int n = 0; n <= N; ++n) {
    const double s = r.sigma.log_at(n);
    r.min_lower_margin = std::min(r.min_lower_margin, s + std::log(c.L));
    r.min_upper_margin = std::min(r.min_upper_margin, std::log(c.L) - 2 * c.eps * n * lr - s);
  }
  for (int n = 0; n < N; ++n) {
    const double s0 = r.sigma.at(n), s1 = r.sigma.at(n + 1);
    const Mat2 S0 = Eigen::Vector2d(1, s0).asDiagonal(), S1 = Eigen::Vector2d(1, s1).asDiagonal();
    const Mat2 at = S1 * c.A[n] * S0.inverse();
    Mat2 shown;
    shown << c.a(n), c.c(n) / s0, 0, rt * c.a(n);
    r.A_tilde.push_back(at);
    const double scale = std::max(1.0, c.A[n].norm());
    r.max_residual = std::max({r.max_residual, (S1 * c.A[n] - at * S0).norm() / scale, (at - shown).norm() / scale});
  }
  return r;
}

TransverseReport transverse_repelling_direction(const TriangularCocycle& c) {
  const DominatedReport d = dominated_block_diagonalization(c);
  const int N = c.N();
  const double rt = std::pow(c.rho, 1 - c.eps);
  TransverseReport r;
  r.omega = c.C * c.C / (rt * (1 - rt));
  // E^_n = (A~_{N-1} ... A~_n)^{-1} E^{pi/2}, built backwards (the stable direction of the iteration)
  std::vector<Vec2> w(N + 1);
  w[N] = Vec2(0, 1);
  for (int n = N - 1; n >= 0; --n) {
    Vec2 v = d.A_tilde[n].inverse() * w[n + 1];
    if (v.y() < 0) v = -v;
    w[n] = v.normalized();
  }
  r.E_hat = Direction::of(w[0]);
  r.min_cone_margin = r.min_orbit_cone_margin = kInf;
  for (int n = 0; n < N; ++n) {
    const Mat2 inv = d.A_tilde[n].inverse();
    for (double sgn : {-1.0, 1.0}) {
      const Vec2 v = inv * Vec2(sgn * r.omega, 1.0);
      r.min_cone_margin = std::min(r.min_cone_margin, r.omega - std::abs(v.x() / v.y()));
    }
  }
  for (int n = 0; n <= N; ++n) r.min_orbit_cone_margin = std::min(r.min_orbit_cone_margin, r.omega - std::abs(w[n].x() / w[n].y()));
  // growth along E^ in original coordinates: u_n ~ S_n^{-1} w_n
  const double lr = std::log(c.rho), lL = std::log(c.L), sq = 0.5 * std::log1p(r.omega * r.omega);
  double acc = 0, accb = 0;
  r.min_lower_margin = r.min_upper_margin = r.min_literal_lower_margin = kInf;
  for (int n = 0; n < N; ++n) {
    Vec2 u(w[n].x(), w[n].y() / d.sigma.at(n));
    u.normalize();
    acc += std::log((c.A[n] * u).norm());
    accb += std::log(c.b(n));
    const double g = acc - accb;
    const int k = n + 1;
    r.log_growth.push_back(g);
    r.min_lower_margin = std::min(r.min_lower_margin, g + 2 * lL - 2 * c.eps * k * lr + sq);
    r.min_upper_margin = std::min(r.min_upper_margin, lL - 2 * c.eps * k * lr + sq - g);
    r.min_literal_lower_margin = std::min(r.min_literal_lower_margin, g + 2 * lL + 2 * c.eps * k * lr + sq);
  }
  r.pass = r.min_cone_margin > 0 && r.min_orbit_cone_margin >= 0 && r.min_lower_margin >= -1e-9 &&
           r.min_upper_margin >= -1e-9;
  return r;
}

// ---------------------------------------------------------------- projective repeller

double repeller_min_L(const TriangularCocycle& c) {
  const double lr = std::log(c.rho);
  double acc = 0, worst = 0;
  for (int n = 1; n <= c.N(); ++n) {
    acc += std::log(c.a(n - 1) / c.b(n - 1));
    worst = std::max({worst, -(1 - c.eps) * n * lr - acc, acc + (1 + c.eps) * n * lr});
  }
  return std::exp(worst);
}

RepellerReport repeller_normalization(const TriangularCocycle& c) {
  require_triangular(c, false);
  if (repeller_min_L(c) > c.L * (1 + 1e-12))
    throw PremiseError("projective repeller condition not certified with the given L");
  const int N = c.N();
  const double lr = std::log(c.rho), rh = std::pow(c.rho, 1 + c.eps);
  RepellerReport r;
  r.omega_hat = rh * c.C * c.C / (1 - rh);
  r.sigma_hat.lo = 0;
  r.sigma_hat.hi = N;
  r.sigma_hat.log_values.assign(N + 1, 0.0);
  double acc = 0;
  for (int n = 1; n <= N; ++n) {
    acc += std::log(c.b(n - 1) / c.a(n - 1));
    r.sigma_hat.log_values[n] = acc - (1 + c.eps) * n * lr;
  }
  r.min_lower_margin = r.min_upper_margin = r.min_cone_margin = kInf;
  for (int n = 0; n <= N; ++n) {
    const double s = r.sigma_hat.log_at(n);
    r.min_lower_margin = std::min(r.min_lower_margin, s + std::log(c.L));
    r.min_upper_margin = std::min(r.min_upper_margin, std::log(c.L) - 2 * c.eps * n * lr - s);
  }
  r.tau.assign(N + 1, 0.0);
  for (int n = 0; n < N; ++n) {
    const double s0 = r.sigma_hat.at(n), s1 = r.sigma_hat.at(n + 1);
    const Mat2 S0 = Eigen::Vector2d(s0, 1).asDiagonal(), S1 = Eigen::Vector2d(s1, 1).asDiagonal();
    const Mat2 ah = S1 * c.A[n] * S0.inverse();
    Mat2 shown;
    shown << c.b(n) / rh, 0, c.c(n) / s0, c.b(n);
    const double scale = std::max(1.0, c.A[n].norm());
    r.max_hat_residual = std::max({r.max_hat_residual, (S1 * c.A[n] - ah * S0).norm() / scale, (ah - shown).norm() / scale});
    r.A_hat.push_back(ah);
    for (double sgn : {-1.0, 1.0}) {
      const Vec2 v = ah * Vec2(1.0, sgn * r.omega_hat);
      r.min_cone_margin = std::min(r.min_cone_margin, r.omega_hat - std::abs(v.y() / v.x()));
    }
    // slope of A^(1, tau_n)
    r.tau[n + 1] = (ah(1, 0) + ah(1, 1) * r.tau[n]) / ah(0, 0);
  }
  for (int n = 0; n < N; ++n) {
    Mat2 t0, t1;
    t0 << 1, 0, r.tau[n], 1;  // T_n^{-1}
    t1 << 1, 0, -r.tau[n + 1], 1;
    const Mat2 ac = t1 * r.A_hat[n] * t0;
    Mat2 shown;
    shown << c.b(n) / rh, 0, 0, c.b(n);
    Mat2 tn;
    tn << 1, 0, -r.tau[n], 1;
    const double scale = std::max(1.0, c.A[n].norm());
    r.max_check_residual = std::max({r.max_check_residual, (ac * tn - t1 * r.A_hat[n]).norm() / scale, (ac - shown).norm() / scale});
    r.max_offdiag = std::max(r.max_offdiag, std::abs(ac(1, 0)) / scale);
    r.A_check.push_back(ac);
  }
  for (double t : r.tau) r.max_tau = std::max(r.max_tau, std::abs(t));
  r.pass = r.min_cone_margin > 0 && r.max_tau <= r.omega_hat && r.max_hat_residual < 1e-10 && r.max_check_residual < 1e-10;
  return r;
}

ContractionReport projective_contraction_bounds(const TriangularCocycle& c, double t) {
  if (!(t > 0 && t <= kPi / 2)) throw InputError("projective_contraction_bounds: need t in (0, pi/2]");
  require_triangular(c, false);
  const int N = c.N();
  const double lr = std::log(c.rho), rh = std::pow(c.rho, 1 + c.eps), lL = std::log(c.L);
  ContractionReport r;
  r.t = t;
  // s_n measured from the vertical in the diagonal normal form: tan s_n = tan(t) rho^-n,
  // m = largest n with s_n <= pi/4 (0 if s_0 > pi/4)
  r.crossover = 0;
  if (t < kPi / 4) r.crossover = std::min(N, static_cast<int>(std::floor(std::log(std::tan(t)) / std::log(rh))));
  Vec2 v = unit(kPi / 2 - t);
  double acc = 0;
  r.log_dp.push_back(0.0);
  double kl = 0, ku = 0, klit = 0;
  const double lt2 = 2 * std::log(t);
  for (int n = 1; n <= N; ++n) {
    const Mat2& a = c.A[n - 1];
    const Vec2 w = a * v;
    acc += std::log(a.determinant()) - 2 * std::log(w.norm());
    v = w.normalized();
    r.log_dp.push_back(acc);
    // literal: (K L t^2)^{-1} rho^{(1+3eps)n} < dp < K L t^{-2} rho^{(1-eps)n}
    // before the crossover the lower bound actually obtained is (K L)^{-1} rho^{-(1-eps)n}
    const double lit = (1 + 3 * c.eps) * n * lr - lL - lt2 - acc;
    klit = std::max(klit, lit);
    kl = std::max(kl, n <= r.crossover ? -(1 - c.eps) * n * lr - lL - acc : lit);
    ku = std::max(ku, acc + lt2 - lL - (1 - c.eps) * n * lr);
  }
  r.K_lower_literal = std::exp(klit);
  r.K_lower = std::exp(kl);
  r.K_upper = std::exp(ku);
  return r;
}

}  // namespace pesin
