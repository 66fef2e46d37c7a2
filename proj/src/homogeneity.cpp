#include "pesin/homogeneity.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pesin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_norm(const Mat2& a) { return std::log(Eigen::JacobiSVD<Mat2>(a).singularValues()(0)); }

// Neumaier: the Henon Birkhoff sum adds 10^4 equal terms
struct Sum {
  double s = 0, c = 0;
  void add(double x) {
    const double t = s + x;
    c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
    s = t;
  }
  double value() const { return s + c; }
};

// sigma_min = |det| / sigma_max; the det is carried in logs since long products
// lose the small singular value to cancellation
HomogeneityReport from_logs(const std::vector<double>& lnorm, const std::vector<double>& ldet, double eta, double lambda) {
  if (!(lambda > 0 && lambda < 1) || !(eta > 0 && eta < 1)) throw InputError("homogeneity: eta, lambda must lie in (0,1)");
  HomogeneityReport r;
  r.eta = eta;
  r.lambda = lambda;
  r.min_margin_i = r.min_margin_ii = kInf;
  const double ll = std::log(lambda);
  for (std::size_t k = 0; k < lnorm.size(); ++k) {
    const double smax = lnorm[k], j = ldet[k], smin = j - smax;
    r.margin_i.push_back(std::min(smin - (1 + eta) * ll, -eta * ll - smax));
    r.margin_ii.push_back(std::min(j - (1 + eta) * ll, (1 - eta) * ll - j));
    r.min_margin_i = std::min(r.min_margin_i, r.margin_i.back());
    r.min_margin_ii = std::min(r.min_margin_ii, r.margin_ii.back());
  }
  r.pass = !lnorm.empty() && r.min_margin_i >= 0 && r.min_margin_ii >= 0;
  return r;
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

HomogeneityReport check_homogeneous(const std::vector<Mat2>& derivs, double eta, double lambda) {
  std::vector<double> ln, ld;
  for (const Mat2& a : derivs) {
    ln.push_back(log_norm(a));
    ld.push_back(std::log(std::abs(a.determinant())));
  }
  return from_logs(ln, ld, eta, lambda);
}

HomogeneityReport check_homogeneous(const PlanarMap& f, const std::vector<Vec2>& sample, double eta, double lambda) {
  if (sample.empty()) throw InputError("homogeneity: empty sample");
  std::vector<Mat2> d;
  d.reserve(sample.size());
  for (const Vec2& p : sample) {
    if (!f.domain().contains(p)) throw InputError("homogeneity: sample point outside the map domain");
    d.push_back(f.jacobian(p));
  }
  return check_homogeneous(d, eta, lambda);
}

AttractorSample attractor_sample(const PlanarMap& f, const Vec2& seed, int count, int transient, int extra) {
  if (count < 1 || transient < 0 || extra < 0) throw InputError("attractor sample: bad sizes");
  Vec2 p = seed;
  for (int i = 0; i < transient; ++i) {
    p = f.eval(p);
    if (!f.domain().contains(p)) throw InputError("attractor sample: orbit left the domain during the transient");
  }
  AttractorSample s;
  s.count = count;
  for (int i = 0; i < count + extra; ++i) {
    s.pts.push_back(p);
    s.jac.push_back(f.jacobian(p));
    p = f.eval(p);
    if (!f.domain().contains(p)) throw InputError("attractor sample: orbit left the domain");
  }
  for (int per = 1; per <= 64 && per < count; ++per) {
    bool ok = true;
    for (int i = 0; i + per < count && ok; ++i) ok = (s.pts[i + per] - s.pts[i]).norm() <= 1e-9;
    if (ok) {
      s.period = per;
      break;
    }
  }
  return s;
}

HomogenizingReport find_homogenizing_iterate(const AttractorSample& s, double eta, int N_cap) {
  if (N_cap < 1) throw InputError("homogenizing iterate: N_cap must be >= 1");
  if (static_cast<int>(s.jac.size()) < s.count + N_cap - 1)
    throw InputError("homogenizing iterate: sample too short for the cap (needs count + N_cap - 1 jacobians)");
  HomogenizingReport r;
  r.eta = eta;
  Sum acc;
  for (int k = 0; k < s.count; ++k) {
    acc.add(std::log(std::abs(s.jac[k].determinant())));
    r.birkhoff.push_back(acc.value() / (k + 1));
  }
  r.lambda_est = std::exp(r.birkhoff.back());
  if (!(r.lambda_est < 1)) throw PremiseError("homogenizing iterate: Birkhoff Jacobian " + num(r.lambda_est) + " >= 1");

  // products kept normalized, their scale in lscale
  std::vector<Mat2> a(s.count, Mat2::Identity());
  std::vector<double> lscale(s.count, 0.0), ln(s.count), ld(s.count, 0.0);
  for (int n = 1; n <= N_cap; ++n) {
    double sup = -kInf, inf = kInf;
    for (int i = 0; i < s.count; ++i) {
      const Mat2& j = s.jac[i + n - 1];
      a[i] = j * a[i];
      ld[i] += std::log(std::abs(j.determinant()));
      const double nn = a[i].norm();
      a[i] /= nn;
      lscale[i] += std::log(nn);
      ln[i] = lscale[i] + log_norm(a[i]);
      sup = std::max(sup, ln[i] / n);
      inf = std::min(inf, (ld[i] - ln[i]) / n);
    }
    r.sup_log_norm.push_back(sup);
    r.inf_log_conorm.push_back(inf);
    const HomogeneityReport h = from_logs(ln, ld, eta, std::pow(r.lambda_est, n));
    r.min_margin_i.push_back(h.min_margin_i);
    r.min_margin_ii.push_back(h.min_margin_ii);
    if (h.pass) {
      r.N = n;
      r.found = true;
      break;
    }
  }
  return r;
}

OrbitSegment iterate_orbit(const OrbitSegment& orb, int n) {
  if (n < 1) throw InputError("iterate_orbit: n must be >= 1");
  OrbitSegment o;
  o.M = orb.M / n;
  o.N = (orb.N + 1) / n - 1;
  if (o.N < 0) throw InputError("iterate_orbit: orbit shorter than one step of the iterate");
  o.M_requested = o.M;
  o.N_requested = o.N;
  o.p0 = orb.point(0);
  for (int k = -o.M; k <= o.N; ++k) {
    o.pts.push_back(orb.point(k * n));
    Mat2 d = Mat2::Identity();
    for (int i = 0; i < n; ++i) d = orb.deriv(k * n + i) * d;
    o.jac.push_back(d);
  }
  return o;
}

// ---------------------------------------------------------------- simplified conditions

namespace {

RegularityParams full_params(const SimplifiedParams& p, double L, double eps) {
  RegularityParams q;
  q.lambda = q.rho = p.lambda;
  q.eps = eps;
  q.L = L;
  q.M = p.sides == Sides::Forward ? 0 : p.M;
  q.N = p.sides == Sides::Backward ? 0 : p.N;
  q.flavor = p.flavor;
  return q;
}

}  // namespace

SimplifiedCertificate simplified_certify(const OrbitSegment& orb, const DirectionField& e, const SimplifiedParams& p) {
  if (!(p.eta < p.eps)) throw PremiseError("homogeneity premise missing: eta = " + num(p.eta) + " is not below eps = " + num(p.eps));
  const RegularityParams q0 = full_params(p, p.L, p.eps);
  validate(q0);
  if (q0.N > orb.N || q0.M > orb.M) throw InputError("simplified certify: orbit too short for the requested depths");
  if (q0.N > e.hi || -q0.M < e.lo) throw InputError("simplified certify: direction field too short");

  SimplifiedCertificate c;
  c.params = p;
  std::vector<Mat2> used;
  for (int k = -q0.M; k < q0.N; ++k) used.push_back(orb.deriv(k));
  c.homogeneity = check_homogeneous(used, p.eta, p.lambda);
  if (!c.homogeneity.pass)
    throw PremiseError("homogeneity premise missing: orbit points are not (eta, lambda)-homogeneous, margins " +
                       num(c.homogeneity.min_margin_i) + ", " + num(c.homogeneity.min_margin_ii));

  const double ll = std::log(p.lambda), lL = std::log(p.L);
  const bool vert = p.flavor == Flavor::Vertical;
  double worst = 0;
  // forward: vertical  ||DF^n|E|| <= L lam^{(1-eps)n}; horizontal ||DF^n|E|| >= L^{-1} lam^{eps n}
  double acc = 0;
  for (int n = 1; n <= q0.N; ++n) {
    acc += std::log((orb.deriv(n - 1) * e.at(n - 1)).norm());
    const double d = vert ? (1 - p.eps) * n * ll - acc : acc - p.eps * n * ll;
    c.forward_margin.push_back(d + lL);
    worst = std::max(worst, -d);
  }
  // backward: vertical ||DF^{-n}|E|| >= L^{-1} lam^{-(1-eps)n}; horizontal ||DF^{-n}|E|| <= L lam^{-eps n}
  acc = 0;
  for (int n = 1; n <= q0.M; ++n) {
    acc += std::log((orb.deriv(-n).inverse() * e.at(-n + 1)).norm());
    const double d = vert ? acc + (1 - p.eps) * n * ll : -p.eps * n * ll - acc;
    c.backward_margin.push_back(d + lL);
    worst = std::max(worst, -d);
  }
  c.min_L = std::exp(worst);
  c.pass = c.min_L <= p.L * (1 + RegularityCertificate::kTol);

  c.L_bar = p.L * p.L;
  c.eps_bar = std::max(2 * p.eps + p.eta, 3 * p.eta);
  if (c.eps_bar < 1) {
    c.full = certify(orb, e, full_params(p, c.L_bar, c.eps_bar), 0);
    // smallest eps at L_bar; certify is monotone in eps
    double lo = 0, hi = c.eps_bar;
    if (c.full.pass) {
      for (int it = 0; it < 50; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= 0) break;
        (certify(orb, e, full_params(p, c.L_bar, mid), 0).pass ? hi : lo) = mid;
      }
      c.measured_eps = hi;
    } else {
      c.measured_eps = kInf;
    }
  } else {
    c.full.pass = false;
    c.measured_eps = kInf;
  }
  c.implication = !c.pass || c.full.pass;
  return c;
}

}  // namespace pesin
