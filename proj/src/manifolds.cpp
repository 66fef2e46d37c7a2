#include "pesin/manifolds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pesin {

namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

Taylor1 sqrt1(const Taylor1& a) {
  if (!(a[0] > 0)) throw InputError("curve jet: vanishing speed");
  Taylor1 b(a.order());
  b[0] = std::sqrt(a[0]);
  for (int k = 1; k <= a.order(); ++k) {
    double s = a[k];
    for (int j = 1; j < k; ++j) s -= b[j] * b[k - j];
    b[k] = s / (2 * b[0]);
  }
  return b;
}

Taylor1 deriv1(const Taylor1& a) {
  Taylor1 d(std::max(a.order() - 1, 0));
  for (int k = 1; k <= a.order(); ++k) d[k - 1] = k * a[k];
  return d;
}

Taylor1 integral1(const Taylor1& a) {
  Taylor1 r(a.order() + 1);
  for (int k = 0; k <= a.order(); ++k) r[k + 1] = a[k] / (k + 1);
  return r;
}

// the dx-part of a series that only depends on its first increment
Taylor1 first_var(const Taylor2& t) {
  Taylor1 r(t.order());
  for (int k = 0; k <= t.order(); ++k) r[k] = t.at(k, 0);
  return r;
}

// t -> z + t dir as a series in dt
Series2Map line(const Vec2& z, const Vec2& dir, int order) {
  Mat2 lin;
  lin << dir.x(), 0, dir.y(), 0;
  return Series2Map::affine(order, z, lin);
}

Series2Map push_back(const PlanarMap& f, Series2Map c, int n) {
  for (int i = 0; i < n; ++i) c = compose(f.inverse_series(c.value(), c.order()), c);
  return c;
}

struct Local {
  Vec2 q, d1, d2;
};

Local local_of(const Series2Map& c) {
  return {c.value(), {c.f.at(1, 0), c.g.at(1, 0)}, {2 * c.f.at(2, 0), 2 * c.g.at(2, 0)}};
}

double curvature(const Local& l) {
  const double sp = l.d1.norm();
  return std::abs(l.d1.x() * l.d2.y() - l.d1.y() * l.d2.x()) / (sp * sp * sp);
}

// arclength jet at t = 0 of the plane curve series c(dt)
std::vector<Vec2> arclength_jet(const Series2Map& c) {
  const int order = c.order();
  const Taylor1 cx = first_var(c.f), cy = first_var(c.g);
  const Taylor1 dx = deriv1(cx), dy = deriv1(cy);
  const Taylor1 s = integral1(sqrt1(dx * dx + dy * dy));
  const Taylor1 t = Taylor1::invert(s, 0.0);
  const Taylor1 gx = Taylor1::compose(cx, t), gy = Taylor1::compose(cy, t);
  std::vector<Vec2> jet(order + 1);
  for (int k = 0; k <= order; ++k) jet[k] = {gx.deriv(k), gy.deriv(k)};
  jet[0] = c.value();
  return jet;
}

// samples of a plane curve given by series c(t) (order >= 3) on an odd grid
// t_i over [-T, T]; arclength by 3-point Gauss on each interval
using CurveFn = std::function<Series2Map(double t, int order)>;

std::vector<CurveSample> sample_curve(const CurveFn& fn, double T, int samples, int source) {
  if (samples < 3 || samples % 2 == 0) throw InputError("curve: need an odd sample count >= 3");
  std::vector<Series2Map> cs;
  std::vector<double> ts;
  cs.reserve(samples);
  for (int i = 0; i < samples; ++i) {
    const double t = T * (2.0 * i / (samples - 1) - 1);
    ts.push_back(t);
    cs.push_back(fn(t, 3));
  }
  auto speed = [&](int i, double h) {
    const Series2Map& c = cs[i];
    const Vec2 d(c.f.at(1, 0) + 2 * c.f.at(2, 0) * h + 3 * c.f.at(3, 0) * h * h,
                 c.g.at(1, 0) + 2 * c.g.at(2, 0) * h + 3 * c.g.at(3, 0) * h * h);
    return d.norm();
  };
  static const double gx[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)}, gw[3] = {5.0 / 9, 8.0 / 9, 5.0 / 9};
  std::vector<double> s(samples, 0.0);
  for (int i = 0; i + 1 < samples; ++i) {
    const double h = ts[i + 1] - ts[i];
    double acc = 0;
    for (int k = 0; k < 3; ++k) {
      const double u = 0.5 * h * (1 + gx[k]);
      acc += gw[k] * (u <= 0.5 * h ? speed(i, u) : speed(i + 1, u - h));
    }
    s[i + 1] = s[i] + 0.5 * h * acc;
  }
  const double s0 = s[samples / 2];
  std::vector<CurveSample> out(samples);
  for (int i = 0; i < samples; ++i) {
    const Local l = local_of(cs[i]);
    out[i] = {s[i] - s0, l.q, l.d1.normalized(), curvature(l), source};
  }
  return out;
}

void flip(ManifoldCurve& c) {
  for (CurveSample& x : c.samples) {
    x.s = -x.s;
    x.tangent = -x.tangent;
  }
  std::reverse(c.samples.begin(), c.samples.end());
  for (std::size_t k = 1; k < c.jet.size(); k += 2) c.jet[k] = -c.jet[k];
}

ManifoldCurve chart_curve(const ChartAtlas& atlas, int m, const std::function<Series2Map(double, int)>& z, double T,
                          int samples, int order, std::string kind) {
  auto plane = [&](double t, int o) {
    const Series2Map c = z(t, o);
    return compose(atlas.phi_inv_series(m, c.value(), o), c);
  };
  ManifoldCurve mc;
  mc.kind = std::move(kind);
  mc.samples = sample_curve(plane, T, samples, m);
  mc.jet = arclength_jet(plane(0.0, order));
  mc.base = mc.jet[0];
  return mc;
}

double point_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double L2 = d.squaredNorm();
  const double t = L2 > 0 ? std::clamp((p - a).dot(d) / L2, 0.0, 1.0) : 0.0;
  return (p - a - t * d).norm();
}

double to_polyline(const Vec2& p, const std::vector<Vec2>& b) {
  if (b.size() == 1) return (p - b[0]).norm();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < b.size(); ++i) best = std::min(best, point_segment(p, b[i], b[i + 1]));
  return best;
}

}  // namespace

Vec2 ManifoldCurve::at(double s) const {
  if (samples.empty()) throw InputError("curve: no samples");
  if (s <= samples.front().s) return samples.front().q + (s - samples.front().s) * samples.front().tangent;
  if (s >= samples.back().s) return samples.back().q + (s - samples.back().s) * samples.back().tangent;
  const auto it = std::upper_bound(samples.begin(), samples.end(), s, [](double v, const CurveSample& c) { return v < c.s; });
  const CurveSample& b = *it;
  const CurveSample& a = *(it - 1);
  const double h = b.s - a.s;
  if (h <= 0) return a.q;
  const double u = (s - a.s) / h;
  const double h00 = 2 * u * u * u - 3 * u * u + 1, h10 = u * u * u - 2 * u * u + u, h01 = -2 * u * u * u + 3 * u * u,
               h11 = u * u * u - u * u;
  return h00 * a.q + h10 * h * a.tangent + h01 * b.q + h11 * h * b.tangent;
}

std::vector<Vec2> ManifoldCurve::points() const {
  std::vector<Vec2> p;
  p.reserve(samples.size());
  for (const CurveSample& c : samples) p.push_back(c.q);
  return p;
}

ManifoldCurve local_vertical(const ChartAtlas& atlas, int m, int samples, int order) {
  const double l = atlas.radius(m) * (1 - 1e-9);
  return chart_curve(atlas, m, [](double t, int o) { return line({0, t}, {0, 1}, o); }, l, samples, order, "vertical");
}

ManifoldCurve local_horizontal(const ChartAtlas& atlas, int m, int samples, int order) {
  const double l = atlas.radius(m) * (1 - 1e-9);
  return chart_curve(atlas, m, [](double t, int o) { return line({t, 0}, {1, 0}, o); }, l, samples, order, "horizontal");
}

ManifoldCurve chart_graph_curve(const ChartAtlas& atlas, double a, int k, int samples, int order) {
  const double l = atlas.radius(0) * (1 - 1e-9);
  auto z = [a, k](double t, int o) {
    const Taylor2 x = Taylor2::var_x(o, t);
    Taylor2 p(o, 1.0);
    for (int i = 0; i < k; ++i) p = p * x;
    return Series2Map{x, a * p};
  };
  return chart_curve(atlas, 0, z, l, samples, order, "chart graph");
}

std::array<double, 2> stable_cond_values(double lambda, double rho, double eps) {
  return {std::pow(lambda, 1 - eps) / (std::pow(rho, 8 * eps) * std::pow(lambda, 4 * eps)),
          std::pow(lambda, 1 - eps) * std::pow(rho, 1 - eps) / std::pow(lambda, 1 + eps)};
}

double hausdorff(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  double h = 0;
  for (const Vec2& p : a) h = std::max(h, to_polyline(p, b));
  for (const Vec2& p : b) h = std::max(h, to_polyline(p, a));
  return h;
}

StrongStableReport strong_stable(const ChartAtlas& atlas, int n_max, int samples, int rate_n, int rate_samples) {
  const double lam = atlas.lambda(), rho = atlas.rho(), eps = atlas.eps();
  const auto sc = stable_cond_values(lam, rho, eps);
  if (sc[0] >= 1) throw PremiseError("stable cond violated: lambda^{1-eps} / (rho^{8eps} lambda^{4eps}) = " + num(sc[0]) + " >= 1");
  if (sc[1] >= 1) throw PremiseError("stable cond violated: lambda^{1-eps} rho^{1-eps} / lambda^{1+eps} = " + num(sc[1]) + " >= 1");
  if (n_max < 0 || n_max > atlas.N()) throw InputError("strong_stable: n_max outside the forward window");
  if (rate_n > atlas.N()) throw InputError("strong_stable: rate horizon exceeds the forward window");

  StrongStableReport rep;
  rep.n_max = n_max;
  const PlanarMap& f = atlas.map();
  std::vector<ManifoldCurve> pieces(n_max + 1);
  for (int n = 0; n <= n_max; ++n) {
    const double l = atlas.radius(n) * (1 - 1e-9);
    auto fn = [&](double t, int o) {
      const Series2Map z = line({0, t}, {0, 1}, o);
      return push_back(f, compose(atlas.phi_inv_series(n, z.value(), o), z), n);
    };
    pieces[n].kind = "strong stable piece";
    pieces[n].samples = sample_curve(fn, l, samples, n);
    pieces[n].base = pieces[n].samples[samples / 2].q;
  }
  // common orientation: the outermost piece's
  const Vec2 t_out = pieces[n_max].samples[samples / 2].tangent;
  for (ManifoldCurve& p : pieces)
    if (p.samples[samples / 2].tangent.dot(t_out) < 0) flip(p);
  for (const ManifoldCurve& p : pieces) rep.piece_half_length.push_back(std::min(-p.s_min(), p.s_max()));

  rep.nesting_gap = -std::numeric_limits<double>::infinity();
  for (int n = 1; n <= n_max; ++n) {
    const ManifoldCurve& in = pieces[n - 1];
    const ManifoldCurve& out = pieces[n];
    rep.nesting_gap = std::max({rep.nesting_gap, out.s_min() - in.s_min(), in.s_max() - out.s_max()});
    for (const CurveSample& c : in.samples) {
      if (c.s < out.s_min() || c.s > out.s_max()) continue;
      // normal part only: the arclength coordinates carry quadrature error
      const Vec2 d = c.q - out.at(c.s);
      const Vec2 tn = c.tangent;
      rep.stitch_mismatch = std::max(rep.stitch_mismatch, (d - d.dot(tn) * tn).norm());
    }
  }
  if (rep.stitch_mismatch > 1e-7)
    throw PremiseError("strong stable: consecutive pieces disagree by " + num(rep.stitch_mismatch) + " > 1e-7");

  ManifoldCurve& cur = rep.curve;
  cur.kind = "strong stable";
  for (const ManifoldCurve& p : pieces) cur.samples.insert(cur.samples.end(), p.samples.begin(), p.samples.end());
  std::stable_sort(cur.samples.begin(), cur.samples.end(), [](const CurveSample& a, const CurveSample& b) { return a.s < b.s; });
  ManifoldCurve w0 = local_vertical(atlas, 0, 3, 4);
  if (w0.jet[1].dot(t_out) < 0) flip(w0);
  cur.jet = w0.jet;
  cur.base = w0.base;

  // rate along samples of the outermost piece
  rep.rate_n = rate_n;
  rep.rate_margin = std::numeric_limits<double>::infinity();
  const ManifoldCurve& outer = pieces[n_max];
  const double target = (1 - eps) * std::log(lam);
  const Vec2 p0 = atlas.frames().frame(0).p;
  for (int j = 0; j < rate_samples; ++j) {
    const std::size_t i = (outer.samples.size() - 1) * j / std::max(rate_samples - 1, 1);
    Vec2 q = outer.samples[i].q;
    if ((q - p0).norm() == 0.0) continue;
    ++rep.rate_samples;
    for (int n = 1; n <= rate_n; ++n) {
      q = f.eval(q);
      const double d = (q - atlas.frames().frame(n).p).norm();
      const double v = d > 0 ? std::log(d) / n : -std::numeric_limits<double>::infinity();
      rep.rate_margin = std::min(rep.rate_margin, target - v);
    }
  }
  rep.pass = rep.nesting_gap <= 1e-12 * std::max(1.0, outer.s_max()) && rep.rate_margin > 0;
  return rep;
}

// ---------------------------------------------------------------- bounds

namespace {

void require_neutral(double lambda, double rho, const char* what) {
  if (std::abs(rho - lambda) > 1e-12 * lambda)
    throw PremiseError(std::string(what) + ": needs rho == lambda, got rho = " + num(rho) + ", lambda = " + num(lambda));
}

void finish(BoundsReport& r) {
  r.min_margin = std::numeric_limits<double>::infinity();
  for (double v : r.forward_margin) r.min_margin = std::min(r.min_margin, v);
  for (double v : r.backward_margin) r.min_margin = std::min(r.min_margin, v);
  r.pass = r.min_margin >= 0;
}

}  // namespace

BoundsReport jacobian_bounds_check(const OrbitSegment& orb, const RegularityParams& p) {
  require_neutral(p.lambda, p.rho, "jacobian bounds");
  BoundsReport r;
  const double lL = std::log(p.L), ll = std::log(p.lambda), e = p.eps;
  double lj = 0;
  for (int n = 1; n <= std::min(orb.N, p.N); ++n) {
    lj += std::log(std::abs(orb.deriv(n - 1).determinant()));
    const double lo = -3 * lL + (1 + 3 * e) * n * ll, hi = 3 * lL + (1 - 3 * e) * n * ll;
    r.forward_margin.push_back(std::min(lj - lo, hi - lj));
  }
  lj = 0;
  for (int n = 1; n <= std::min(orb.M, p.M); ++n) {
    lj -= std::log(std::abs(orb.deriv(-n).determinant()));
    const double lo = -3 * lL - (1 - 3 * e) * n * ll, hi = 3 * lL - (1 + 3 * e) * n * ll;
    r.backward_margin.push_back(std::min(lj - lo, hi - lj));
  }
  finish(r);
  return r;
}

BoundsReport derivative_bounds_check(const OrbitSegment& orb, const ChartAtlas& atlas, const Vec2& e) {
  require_neutral(atlas.lambda(), atlas.rho(), "derivative bounds");
  BoundsReport r;
  const double ll = std::log(atlas.lambda()), ep = atlas.eps();
  const double lc = std::log(atlas.C()) + 2 * std::log(1 + atlas.omega()), lL2 = 2 * std::log(atlas.L());
  Vec2 v = e.normalized();
  double acc = 0;
  for (int n = 1; n <= std::min(orb.N, atlas.N()); ++n) {
    v = orb.deriv(n - 1) * v;
    acc += std::log(v.norm());
    v.normalize();
    const double lo = (1 + 3 * ep) * n * ll - lc - lL2, hi = lc - 4 * ep * n * ll;
    r.forward_margin.push_back(std::min(acc - lo, hi - acc));
  }
  v = e.normalized();
  acc = 0;
  for (int n = 1; n <= std::min(orb.M, atlas.M()); ++n) {
    v = orb.deriv(-n).inverse() * v;
    acc += std::log(v.norm());
    v.normalize();
    const double lo = 2 * ep * n * ll - lc - lL2, hi = lc - (1 + 3 * ep) * n * ll;
    r.backward_margin.push_back(std::min(acc - lo, hi - acc));
  }
  finish(r);
  return r;
}

// ---------------------------------------------------------------- center jets

double center_rate(double eps, int r) { return 1 - eps / (1 - eps) * (7 + 11 * r + 2 * eps + 66 * r * eps); }

ManifoldCurve center_curve(const ChartAtlas& atlas, int samples, int order) {
  ManifoldCurve c = local_horizontal(atlas, 0, samples, order);
  c.kind = "center";
  return c;
}

CenterJetReport center_jet_compare(const ChartAtlas& atlas, const ManifoldCurve& gamma, int order, int n_max) {
  const int r = atlas.options().r;
  const double lam = atlas.lambda(), eps = atlas.eps();
  if (!(eps < 1.0 / (11 * r + 2))) throw PremiseError("center cond violated: eps = " + num(eps) + " >= 1/(11r+2)");
  if (n_max < 0) n_max = atlas.M();
  if (n_max < 1 || n_max > atlas.M()) throw InputError("center_jet_compare: window too short for any n >= 1 check");

  CenterJetReport rep;
  rep.frak_r = center_rate(eps, r);
  rep.n_checked = n_max;
  rep.worst_log_margin = std::numeric_limits<double>::infinity();
  const PlanarMap& f = atlas.map();

  // (a) hypothesis: log margins per n over the admissible samples
  std::vector<double> margin(n_max + 1, std::numeric_limits<double>::infinity());
  for (const CurveSample& c : gamma.samples) {
    Vec2 q = c.q, e = c.tangent;
    double acc = 0;
    for (int n = 1; n <= n_max; ++n) {
      if (!(std::abs(c.s) < std::pow(lam, 11 * eps * n))) break;
      e = f.inverse_jacobian(q) * e;
      q = f.inverse(q);
      acc += std::log(e.norm());
      e.normalize();
      if (!std::isfinite(acc)) break;
      margin[n] = std::min(margin[n], -rep.frak_r * n * std::log(lam) - acc);
    }
  }
  for (int n = 1; n <= n_max; ++n) {
    if (!std::isfinite(margin[n])) continue;
    rep.worst_log_margin = std::min(rep.worst_log_margin, margin[n]);
    if (margin[n] <= 0 && rep.first_failure_n == 0) rep.first_failure_n = n;
  }
  rep.hypothesis = rep.first_failure_n == 0;

  // (b) arclength jets against W^c
  ManifoldCurve w = center_curve(atlas, 3, order);
  std::vector<Vec2> gj = gamma.jet;
  if (gj.size() > 1 && gj[1].dot(w.jet[1]) < 0)
    for (std::size_t k = 1; k < gj.size(); k += 2) gj[k] = -gj[k];
  const int kmax = std::min({order, gamma.order(), w.order()});
  for (int k = 0; k <= kmax; ++k) {
    const double d = (gj[k] - w.jet[k]).norm();
    if (d > 1e-6) {
      rep.discrepancy_order = k;
      rep.discrepancy = d;
      break;
    }
  }

  // angle growth in the charts along the backward orbit of the far end of gamma
  const CurveSample& end = std::abs(gamma.samples.front().s) > std::abs(gamma.samples.back().s) ? gamma.samples.front()
                                                                                                   : gamma.samples.back();
  auto chart_angle = [&](int m, const Vec2& q, const Vec2& e) {
    const Vec2 d = atlas.phi_series(m, q, 1).linear() * e;
    return std::atan2(std::abs(d.y()), std::abs(d.x()));
  };
  Vec2 q = end.q, e = end.tangent;
  rep.t0 = chart_angle(0, q, e);
  if (rep.t0 > 0 && rep.t0 < 1) {
    const double rate = -(1 - eps) * std::log(lam);
    rep.n0_predicted = static_cast<int>(std::ceil((std::log(std::tan(1.0)) - std::log(std::tan(rep.t0))) / rate));
    for (int m = 1; m <= atlas.M(); ++m) {
      e = f.inverse_jacobian(q) * e;
      q = f.inverse(q);
      e.normalize();
      const double t = chart_angle(-m, q, e);
      if (std::log(std::tan(t)) < std::log(std::tan(rep.t0)) + m * rate - 1e-9) rep.growth_holds = false;
      if (t > 1) {
        rep.n0 = m;
        break;
      }
    }
  }
  return rep;
}

}  // namespace pesin
