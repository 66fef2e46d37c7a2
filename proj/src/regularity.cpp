#include "pesin/regularity.hpp"

#include "pesin/jets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pesin {

void validate(const RegularityParams& p) {
  auto in01 = [](double x) { return x > 0 && x < 1; };
  if (!in01(p.lambda) || !in01(p.rho) || !in01(p.eps)) throw InputError("regularity: lambda, rho, eps must lie in (0,1)");
  if (!(p.L >= 1)) throw InputError("regularity: L must be >= 1");
  if (p.M < 0 || p.N < 0) throw InputError("regularity: negative depth");
}

// ---------------------------------------------------------------- direction fields

namespace {

DirectionField make_field(int lo, int hi) {
  DirectionField f;
  f.lo = lo;
  f.hi = hi;
  f.w.assign(hi - lo + 1, Vec2::Zero());
  return f;
}

void push_forward(const OrbitSegment& o, DirectionField& f, int from, int to) {
  for (int m = from; m < to; ++m) f.w[m + 1 - f.lo] = (o.deriv(m) * f.at(m)).normalized();
}

void pull_back(const OrbitSegment& o, DirectionField& f, int from, int to) {
  for (int m = from; m > to; --m) f.w[m - 1 - f.lo] = (o.deriv(m - 1).inverse() * f.at(m)).normalized();
}

// most contracted output direction of the product steps.back() * ... * steps.front():
// power iteration on (P P^T)^{-1} = P^{-T} P^{-1}, applied factor by factor
Vec2 contracted_output(const std::vector<Mat2>& steps) {
  std::vector<Mat2> inv;
  for (const auto& s : steps) inv.push_back(s.inverse());
  Vec2 v = Vec2(0.3, 1.0).normalized(), prev = v;
  for (int it = 0; it < 200; ++it) {
    for (std::size_t k = inv.size(); k-- > 0;) v = (inv[k] * v).normalized();
    for (std::size_t k = 0; k < inv.size(); ++k) v = (inv[k].transpose() * v).normalized();
    if (v.dot(prev) < 0) v = -v;
    if ((v - prev).norm() < 1e-15) break;
    prev = v;
  }
  return v;
}

}  // namespace

DirectionField transport(const OrbitSegment& orb, const Direction& e) {
  DirectionField f = make_field(-orb.M, orb.N);
  f.w[orb.M] = e.vec();
  push_forward(orb, f, 0, orb.N);
  pull_back(orb, f, 0, -orb.M);
  return f;
}

DirectionField vertical_field(const OrbitSegment& orb) {
  DirectionField f = make_field(-orb.M, orb.N);
  if (orb.N == 0) throw InputError("vertical_field: need a forward orbit");
  std::vector<Mat2> steps;
  for (int m = 0; m < orb.N; ++m) steps.push_back(orb.deriv(m));
  f.w[orb.N + orb.M] = contracted_output(steps);
  pull_back(orb, f, orb.N, -orb.M);
  return f;
}

DirectionField horizontal_field(const OrbitSegment& orb) {
  DirectionField f = make_field(-orb.M, orb.N);
  if (orb.M == 0) throw InputError("horizontal_field: need a backward orbit");
  std::vector<Mat2> steps;
  for (int m = -1; m >= -orb.M; --m) steps.push_back(orb.deriv(m).inverse());
  f.w[0] = contracted_output(steps);
  push_forward(orb, f, -orb.M, orb.N);
  return f;
}

// ---------------------------------------------------------------- certify

namespace {

InequalityRecord band(const char* name, std::vector<double> v, double log_base, double eps, double L) {
  InequalityRecord r;
  r.name = name;
  const double lL = std::log(L);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double n = static_cast<double>(i + 1);
    const double lo = (1 + eps) * n * log_base, hi = (1 - eps) * n * log_base;
    r.lower_margin.push_back(v[i] - lo + lL);
    r.upper_margin.push_back(hi + lL - v[i]);
    r.log_min_L = std::max({r.log_min_L, lo - v[i], v[i] - hi});
    if (r.lower_margin.back() < -RegularityCertificate::kTol || r.upper_margin.back() < -RegularityCertificate::kTol)
      r.pass = false;
  }
  r.value = std::move(v);
  return r;
}

void finite_or_throw(double x, int n) {
  if (!std::isfinite(x)) {
    std::ostringstream os;
    os << "certify: overflow at n=" << n;
    throw InputError(os.str());
  }
}

}  // namespace

RegularityCertificate certify(const OrbitSegment& orb, const Direction& e, const RegularityParams& p) {
  return certify(orb, transport(orb, e), p, 0);
}

RegularityCertificate certify(const OrbitSegment& orb, const DirectionField& f, const RegularityParams& p, int base) {
  validate(p);
  if (base + p.N > orb.N || base - p.M < -orb.M) throw InputError("certify: orbit too short for the requested depths");
  if (base + p.N > f.hi || base - p.M < f.lo) throw InputError("certify: direction field too short");
  RegularityCertificate c;
  c.params = p;
  c.base = base;
  c.E = f.direction(base);
  // forward: log ||DF^n|E||, log Jac F^n
  std::vector<double> fn, fj;
  double an = 0, aj = 0;
  for (int n = 1; n <= p.N; ++n) {
    const int k = base + n - 1;
    an += std::log((orb.deriv(k) * f.at(k)).norm());
    aj += std::log(std::abs(orb.deriv(k).determinant()));
    finite_or_throw(an + aj, n);
    fn.push_back(an);
    fj.push_back(aj);
  }
  // backward: log ||DF^{-n}|E||, log Jac F^{-n}
  std::vector<double> bn, bj;
  an = aj = 0;
  for (int n = 1; n <= p.M; ++n) {
    const int k = base - n;
    an += std::log((orb.deriv(k).inverse() * f.at(k + 1)).norm());
    aj -= std::log(std::abs(orb.deriv(k).determinant()));
    finite_or_throw(an + aj, -n);
    bn.push_back(an);
    bj.push_back(aj);
  }
  const double ll = std::log(p.lambda), lr = std::log(p.rho);
  auto comb = [](const std::vector<double>& a, double ka, const std::vector<double>& b, double kb) {
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v[i] = ka * a[i] + kb * b[i];
    return v;
  };
  if (p.flavor == Flavor::Vertical) {
    c.ineq[0] = band("forward 1", fn, ll, p.eps, p.L);
    c.ineq[1] = band("forward 2", comb(fn, 2, fj, -1), lr, p.eps, p.L);
    c.ineq[2] = band("backward 1", comb(bn, -1, bj, 0), ll, p.eps, p.L);
    c.ineq[3] = band("backward 2", comb(bn, -2, bj, 1), lr, p.eps, p.L);
  } else {
    c.ineq[0] = band("forward 1", comb(fn, -1, fj, 1), ll, p.eps, p.L);
    c.ineq[1] = band("forward 2", comb(fn, -2, fj, 1), lr, p.eps, p.L);
    c.ineq[2] = band("backward 1", comb(bn, 1, bj, -1), ll, p.eps, p.L);
    c.ineq[3] = band("backward 2", comb(bn, 2, bj, -1), lr, p.eps, p.L);
  }
  double worst = 0;
  c.pass = true;
  for (const auto& r : c.ineq) {
    worst = std::max(worst, r.log_min_L);
    c.pass = c.pass && r.pass;
  }
  c.min_L = std::exp(worst);
  return c;
}

// ---------------------------------------------------------------- transfers

TransferConstants transfer_constants(double lambda, double rho, double eps, double L, double K, double theta) {
  const double lg = std::log(rho) / std::log(lambda);
  return {K * L * L * L / (theta * theta), (3 + 2 * lg) * eps, K * L * L * L, (1 + 2 * lg) * eps};
}

namespace {

TransferReport transfer(const OrbitSegment& orb, const RegularityCertificate& cert, const DirectionField& target,
                        double theta, bool forward) {
  if (!cert.pass) throw PremiseError("transfer: input certificate does not pass");
  if (!(theta > 0)) throw InputError("transfer: theta must be positive");
  const double angle = Direction::distance(cert.E, target.direction(cert.base));
  if (!(angle > theta)) throw InputError("transfer: angle between the directions is below theta");
  const RegularityParams& p = cert.params;
  const int depth = forward ? p.N : p.M;
  if (depth < 2) throw InputError("transfer: horizon too short to calibrate");
  TransferReport r;
  r.theta = theta;
  r.L = cert.min_L;
  r.constants = transfer_constants(p.lambda, p.rho, p.eps, r.L, 1.0, theta);
  r.eps_pred = r.constants.eps1;
  if (!(r.eps_pred < 1)) throw InputError("transfer: inflated exponent eps1 >= 1");
  RegularityParams q = p;
  q.flavor = p.flavor == Flavor::Vertical ? Flavor::Horizontal : Flavor::Vertical;
  q.eps = r.eps_pred;
  q.L = 1;
  (forward ? q.N : q.M) = depth;
  (forward ? q.M : q.N) = 0;
  RegularityParams cal = q;
  r.calibration_horizon = depth / 2;
  (forward ? cal.N : cal.M) = r.calibration_horizon;
  const double l_cal = certify(orb, target, cal, cert.base).min_L;
  r.K_hat = std::max(1.0, l_cal * theta * theta / (r.L * r.L * r.L));
  r.constants = transfer_constants(p.lambda, p.rho, p.eps, r.L, r.K_hat, theta);
  r.L_pred = r.constants.L1;
  q.L = r.L_pred;
  r.empirical = certify(orb, target, q, cert.base);
  r.empirical_min_L = r.empirical.min_L;
  r.pass = r.empirical.pass;
  return r;
}

}  // namespace

TransferReport vertical_to_horizontal(const OrbitSegment& orb, const RegularityCertificate& cert_v,
                                      const DirectionField& e_h, double theta) {
  if (cert_v.params.flavor != Flavor::Vertical || cert_v.params.N < 1)
    throw InputError("vertical_to_horizontal: need a forward vertical certificate");
  return transfer(orb, cert_v, e_h, theta, true);
}

TransferReport horizontal_to_vertical_backward(const OrbitSegment& orb, const RegularityCertificate& cert_h,
                                               const DirectionField& e_v, double theta) {
  if (cert_h.params.flavor != Flavor::Horizontal || cert_h.params.M < 1)
    throw InputError("horizontal_to_vertical_backward: need a backward horizontal certificate");
  return transfer(orb, cert_h, e_v, theta, false);
}

CombineReport combine_pesin(const OrbitSegment& orb, const RegularityCertificate& cert_v_fwd, const DirectionField& e_v,
                            const RegularityCertificate& cert_h_bwd, const DirectionField& e_h) {
  if (!cert_v_fwd.pass || !cert_h_bwd.pass) throw PremiseError("combine_pesin: input certificates must pass");
  CombineReport r;
  r.theta = Direction::distance(e_v.direction(0), e_h.direction(0));
  if (!(r.theta > 0)) throw InputError("combine_pesin: theta = 0");
  const RegularityParams& pv = cert_v_fwd.params;
  r.L = std::max(cert_v_fwd.min_L, cert_h_bwd.min_L);
  r.eps_bar = transfer_constants(pv.lambda, pv.rho, pv.eps, r.L, 1, r.theta).eps1;
  if (!(r.eps_bar < 1)) throw InputError("combine_pesin: inflated exponent >= 1");
  RegularityParams q = pv;
  q.eps = r.eps_bar;
  q.L = 1;
  q.N = pv.N;
  q.M = cert_h_bwd.params.M;
  q.flavor = Flavor::Vertical;
  r.joint_v = certify(orb, e_v, q);
  q.flavor = Flavor::Horizontal;
  r.joint_h = certify(orb, e_h, q);
  r.calL = std::max(r.joint_v.min_L, r.joint_h.min_L);
  const double t2 = r.theta * r.theta, L3 = r.L * r.L * r.L;
  r.K_hat = std::max({1.0, r.calL * t2 / L3, 1.0 / (r.L * r.calL * t2)});
  r.lo = 1.0 / (r.K_hat * r.L * t2);
  r.hi = r.K_hat * L3 / t2;
  r.in_bracket = r.lo <= r.calL * (1 + 1e-12) && r.calL <= r.hi * (1 + 1e-12);
  return r;
}

// ---------------------------------------------------------------- profile

IrregularityProfile irregularity_profile(const OrbitSegment& orb, const DirectionField& f, const RegularityParams& p) {
  const RegularityCertificate base = certify(orb, f, p, 0);
  if (!base.pass) throw PremiseError("irregularity_profile: base certification fails");
  IrregularityProfile r;
  r.L = base.min_L;
  const double lcheck = std::log(std::min(p.lambda, p.rho));
  r.min_margin = std::numeric_limits<double>::infinity();
  std::vector<double> xs;
  for (int m = -p.M; m <= p.N; ++m) {
    RegularityParams q = p;
    q.M = p.M + m;
    q.N = p.N - m;
    q.L = 1;
    const double lm = std::log(certify(orb, f, q, m).min_L);
    const double bound = 2 * std::log(r.L) - 2 * p.eps * std::abs(m) * lcheck;
    r.m.push_back(m);
    r.log_L.push_back(lm);
    r.log_bound.push_back(bound);
    r.min_margin = std::min(r.min_margin, bound - lm);
    xs.push_back(std::abs(m));
  }
  r.slope = xs.size() > 1 ? least_squares_slope(xs, r.log_L) : 0.0;
  r.pass = r.min_margin >= -RegularityCertificate::kTol;
  return r;
}

RateFit fit_rates(const OrbitSegment& orb, const DirectionField& f, int N) {
  if (N < 2 || N > orb.N || N > f.hi) throw InputError("fit_rates: need 2 <= N <= orbit length");
  std::vector<double> xs, a, b;
  double an = 0, aj = 0;
  for (int n = 1; n <= N; ++n) {
    an += std::log((orb.deriv(n - 1) * f.at(n - 1)).norm());
    aj += std::log(std::abs(orb.deriv(n - 1).determinant()));
    xs.push_back(n);
    a.push_back(an);
    b.push_back(2 * an - aj);
  }
  // lines through the origin: slope = sum(n v_n) / sum(n^2)
  auto slope0 = [&](const std::vector<double>& v) {
    double s = 0, q = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      s += xs[i] * v[i];
      q += xs[i] * xs[i];
    }
    return s / q;
  };
  const double sl = slope0(a), sr = slope0(b);
  RateFit r;
  r.lambda = std::exp(sl);
  r.rho = std::exp(sr);
  if (!(r.lambda < 1 && r.rho < 1)) throw InputError("fit_rates: fitted bases not in (0,1)");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    r.eps = std::max(r.eps, std::abs(a[i] - sl * xs[i]) / (xs[i] * std::abs(sl)));
    r.eps = std::max(r.eps, std::abs(b[i] - sr * xs[i]) / (xs[i] * std::abs(sr)));
  }
  return r;
}

}  // namespace pesin
