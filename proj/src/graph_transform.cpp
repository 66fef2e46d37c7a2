#include "pesin/graph_transform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pesin {

namespace {

Taylor2 lift_x(const Taylor1& t) {
  Taylor2 r(t.order());
  for (int k = 0; k <= t.order(); ++k) r.at(k, 0) = t[k];
  return r;
}

Taylor1 along_x(const Taylor2& t) {
  Taylor1 r(t.order());
  for (int k = 0; k <= t.order(); ++k) r[k] = t.at(k, 0);
  return r;
}

// (X, Y) = F(x, g(x)) as series in dx
std::pair<Taylor1, Taylor1> image_jet(const JetMap& f, const HorizontalGraph& g, double x, int n) {
  const Taylor1 gs = g.series(x, n);
  const Series2Map inner{Taylor2::var_x(n, x), lift_x(gs)};
  const Series2Map img = compose(f.series({x, gs.value()}, n), inner);
  return {along_x(img.f), along_x(img.g)};
}

double proj_x(const JetMap& f, const HorizontalGraph& g, double x) { return f.eval({x, g.eval(x)}).x(); }

std::string where(double x) {
  std::ostringstream s;
  s << x;
  return s.str();
}

// solve X(x) = target for monotone X with orientation sgn, starting bracket [lo, hi]
double solve_monotone(const JetMap& f, const HorizontalGraph& g, double target, double lo, double hi, int sgn) {
  const double w = hi - lo, scale = g.b() - g.a();
  for (int i = 0; sgn * (proj_x(f, g, lo) - target) > 0; ++i) {
    if (i > 60) throw InputError("graph_transform: target x=" + where(target) + " outside the image");
    lo -= w * std::ldexp(1.0, i);
  }
  for (int i = 0; sgn * (proj_x(f, g, hi) - target) < 0; ++i) {
    if (i > 60) throw InputError("graph_transform: target x=" + where(target) + " outside the image");
    hi += w * std::ldexp(1.0, i);
  }
  double x = 0.5 * (lo + hi);
  const double tol = 1e-12 * std::max(scale, std::abs(target));
  for (int it = 0; it < 200; ++it) {
    const auto [X, Y] = image_jet(f, g, x, 1);
    const double r = X.value() - target;
    if (std::abs(r) <= tol) return x;
    if (sgn * r > 0) hi = x;
    else lo = x;
    double nx = x - r / X[1];
    if (!(nx > lo && nx < hi) || X[1] * sgn <= 0) nx = 0.5 * (lo + hi);
    if (hi - lo <= 4 * std::numeric_limits<double>::epsilon() * std::max(scale, std::abs(x))) return nx;
    x = nx;
  }
  return x;
}

}  // namespace

HorizontalGraph graph_transform(const JetMap& f, const HorizontalGraph& g) {
  return graph_transform(f, g, g.a(), g.b(), g.cells());
}

HorizontalGraph graph_transform(const JetMap& f, const HorizontalGraph& g, double a, double b, int cells) {
  const int K = g.K();
  // the projection must be injective on g's window
  const int S = 8 * g.cells();
  std::vector<double> xs(S + 1), X(S + 1);
  for (int i = 0; i <= S; ++i) {
    xs[i] = g.a() + (g.b() - g.a()) * i / S;
    X[i] = proj_x(f, g, xs[i]);
  }
  const int sgn = X[S] > X[0] ? 1 : -1;
  for (int i = 0; i < S; ++i)
    if (sgn * (X[i + 1] - X[i]) <= 0)
      throw PremiseError("graph_transform: graph folds near x=" + where(0.5 * (xs[i] + xs[i + 1])));

  HorizontalGraph out(a, b, cells, K);
  for (int i = 0; i <= cells; ++i) {
    const double t = out.node(i);
    // tighten the bracket from the table when the target is inside the image
    double lo = g.a(), hi = g.b();
    if (sgn * (t - X[0]) >= 0 && sgn * (X[S] - t) >= 0) {
      int k = 0;
      while (k < S - 1 && sgn * (X[k + 1] - t) < 0) ++k;
      lo = xs[k], hi = xs[k + 1];
    }
    const double x = solve_monotone(f, g, t, lo, hi, sgn);
    const auto [Xs, Ys] = image_jet(f, g, x, K);
    const Taylor1 gt = Taylor1::compose(Ys, Taylor1::invert(Xs, x));
    for (int k = 0; k <= K; ++k) out.d(i, k) = gt.deriv(k);
  }
  return out;
}

VerticalField field_transform(const JetMap& f, const VerticalField& xi) {
  const int K = xi.K(), n = 2 * K;
  if (n + 1 > kMaxOrder) throw InputError("field_transform: field order too high");
  VerticalField out(xi.rect(), xi.nx(), xi.ny(), K);
  for (int iy = 0; iy <= xi.ny(); ++iy)
    for (int ix = 0; ix <= xi.nx(); ++ix) {
      const Vec2 p = out.node(ix, iy);
      const Series2Map fs = f.series(p, n + 1);
      const Taylor2 xf = Taylor2::compose(xi.series(fs.value(), n), fs.f.truncated(n), fs.g.truncated(n));
      const Taylor2 num = xf * fs.g.d_dy() - fs.f.d_dy();
      const Taylor2 den = fs.f.d_dx() - xf * fs.g.d_dx();
      if (std::abs(den.value()) < 1e-12)
        throw PremiseError("field_transform: pulled-back direction is horizontal at (" + where(p.x()) + ", " +
                           where(p.y()) + ")");
      const Taylor2 r = num / den;
      for (int i = 0; i <= K; ++i)
        for (int j = 0; j <= K; ++j) out.d(ix, iy, i, j) = r.partial(i, j);
    }
  return out;
}

double graph_invariance_residual(const JetMap& f, const HorizontalGraph& g, const HorizontalGraph& g2, int samples) {
  double worst = 0;
  for (int i = 0; i <= samples; ++i) {
    const double x = g.a() + (g.b() - g.a()) * i / samples;
    const Vec2 q = f.eval({x, g.eval(x)});
    if (q.x() < g2.a() || q.x() > g2.b()) continue;
    worst = std::max(worst, std::abs(g2.eval(q.x()) - q.y()));
  }
  return worst;
}

double field_invariance_residual(const JetMap& f, const VerticalField& xi, const VerticalField& xi2, int per_cell) {
  const Rect& r = xi.rect();
  const int n = xi.nx() * per_cell, m = xi.ny() * per_cell;
  double worst = 0;
  for (int j = 0; j <= m; ++j)
    for (int i = 0; i <= n; ++i) {
      const Vec2 p(r.x0 + (r.x1 - r.x0) * i / n, r.y0 + (r.y1 - r.y0) * j / m);
      const Series2Map s = f.series(p, 1);
      const Vec2 w = s.linear().inverse() * Vec2(xi2.eval(s.value()), 1.0);
      worst = std::max(worst, std::abs(w.x() / w.y() - xi.eval(p)));
    }
  return worst;
}

// ---------------------------------------------------------------- invariant sequences

namespace {

void check_contraction(const std::vector<double>& dist, std::vector<double>& ratios, const char* what) {
  ratios.clear();
  for (std::size_t i = 1; i < dist.size(); ++i) ratios.push_back(dist[i - 1] > 0 ? dist[i] / dist[i - 1] : 0.0);
  if (ratios.size() >= 5 && std::none_of(ratios.begin(), ratios.end(), [](double c) { return c < 1; }))
    throw PremiseError(std::string(what) + ": no contraction in 5 sweeps");
}

}  // namespace

InvariantGraphs invariant_graphs(std::span<const JetMap* const> maps, const HorizontalGraph& zero,
                                 const InvariantOptions& opt) {
  InvariantGraphs res;
  const std::size_t N = maps.size();
  res.g.assign(N + 1, zero);
  HorizontalGraph last = zero;
  for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
    res.g[0] = last;
    for (std::size_t k = 0; k < N; ++k) res.g[k + 1] = graph_transform(*maps[k], res.g[k]);
    ++res.sweeps;
    if (!opt.periodic) {
      res.converged = true;
      break;
    }
    res.sweep_distance.push_back(star_distance(res.g[N], last));
    last = res.g[N];
    check_contraction(res.sweep_distance, res.contraction, "invariant_graphs");
    if (res.sweep_distance.back() < opt.tol) {
      res.converged = true;
      break;
    }
  }
  if (opt.periodic) res.g[0] = res.g[N];
  for (std::size_t k = 0; k < N; ++k) res.residual = std::max(res.residual, graph_invariance_residual(*maps[k], res.g[k], res.g[k + 1]));
  for (const auto& g : res.g) {
    res.max_slope = std::max(res.max_slope, g.sup_abs(1));
    for (int k = 2; k <= std::max(opt.r, 2); ++k) res.second_deriv_norm = std::max(res.second_deriv_norm, g.sup_abs(k));
  }
  res.omega_ok = res.max_slope <= opt.omega;
  return res;
}

InvariantFields invariant_fields(std::span<const JetMap* const> maps, const VerticalField& zero,
                                 const InvariantOptions& opt) {
  InvariantFields res;
  const std::size_t N = maps.size();
  res.xi.assign(N + 1, zero);
  VerticalField first = zero;
  for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
    res.xi[N] = first;
    for (std::size_t k = N; k-- > 0;) res.xi[k] = field_transform(*maps[k], res.xi[k + 1]);
    ++res.sweeps;
    if (!opt.periodic) {
      res.converged = true;
      break;
    }
    res.sweep_distance.push_back(sup_distance(res.xi[0], first));
    first = res.xi[0];
    check_contraction(res.sweep_distance, res.contraction, "invariant_fields");
    if (res.sweep_distance.back() < opt.tol) {
      res.converged = true;
      break;
    }
  }
  if (opt.periodic) res.xi[N] = res.xi[0];
  for (std::size_t k = 0; k < N; ++k)
    res.residual = std::max(res.residual, field_invariance_residual(*maps[k], res.xi[k], res.xi[k + 1]));
  for (const auto& xi : res.xi) {
    res.max_abs = std::max(res.max_abs, xi.sup_abs());
    const Rect& r = xi.rect();
    for (const Vec2& p : grid_points(r, 2 * xi.nx() + 1, 2 * xi.ny() + 1)) {
      const Taylor2 s = xi.series(p, std::max(opt.r - 1, 1));
      for (int k = 1; k <= std::max(opt.r - 1, 1); ++k) res.deriv_norm = std::max(res.deriv_norm, multilinear_norm(s, k));
    }
  }
  res.omega_ok = res.max_abs <= opt.omega;
  return res;
}

// ---------------------------------------------------------------- rectification

RectifyingChart::RectifyingChart(HorizontalGraph g, VerticalField xi, double omega)
    : g_(std::move(g)), xi_(std::move(xi)), identity_(false) {
  if (!(omega > 0 && omega < 0.5)) throw InputError("rectify: omega must lie in (0, 1/2)");
  const double slope = g_.sup_abs(1), size = xi_.sup_abs();
  if (slope >= omega) throw PremiseError("rectify: graph slope " + where(slope) + " is not below omega");
  if (size >= omega) throw PremiseError("rectify: field size " + where(size) + " is not below omega");
  const Rect& r = xi_.rect();
  const double vmax = std::max(std::abs(r.y0), std::abs(r.y1)) + g_.sup_abs(0);
  for (double u : {r.x0, 0.5 * (r.x0 + r.x1), r.x1})
    for (double v : {-vmax, vmax}) {
      double prev = foot(u, v, 2);
      int steps = 4;
      for (; steps < 4096; steps *= 2) {
        const double cur = foot(u, v, steps);
        if (std::abs(cur - prev) < 1e-12 * (r.x1 - r.x0)) break;
        prev = cur;
      }
      steps_per_unit_ = std::max(steps_per_unit_, steps / vmax);
    }
}

// X(s) with X(1) = u, dX/ds = v xi~(X, v s), integrated down to s = 0
Taylor2 RectifyingChart::foot(const Taylor2& u, const Taylor2& v, int steps) const {
  const int n = u.order();
  std::vector<double> gd(n + 2);
  auto rhs = [&](const Taylor2& X, double s) {
    const double x0 = X.value();
    for (int k = 0; k <= n + 1; ++k) gd[k] = g_.eval(x0, k);
    const Taylor2 gX = Taylor2::apply(std::span<const double>(gd.data(), n + 1), X);
    const Taylor2 gpX = Taylor2::apply(std::span<const double>(gd.data() + 1, n + 1), X);
    const Taylor2 Y = v * s + gX;
    const Taylor2 xv = Taylor2::compose(xi_.series({x0, Y.value()}, n), X, Y);
    return v * (xv / (1.0 - gpX * xv));
  };
  Taylor2 X = u;
  const double h = -1.0 / steps;
  for (int i = 0; i < steps; ++i) {
    const double s = 1.0 + i * h;
    const Taylor2 k1 = rhs(X, s);
    const Taylor2 k2 = rhs(X + k1 * (0.5 * h), s + 0.5 * h);
    const Taylor2 k3 = rhs(X + k2 * (0.5 * h), s + 0.5 * h);
    const Taylor2 k4 = rhs(X + k3 * h, s + h);
    X += (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (h / 6.0);
  }
  return X;
}

// plain-number version of the above
double RectifyingChart::foot(double u, double v, int steps) const {
  auto rhs = [&](double X, double s) {
    const double xv = xi_.eval({X, v * s + g_.eval(X)});
    return v * xv / (1.0 - g_.eval(X, 1) * xv);
  };
  double X = u;
  const double h = -1.0 / steps;
  for (int i = 0; i < steps; ++i) {
    const double s = 1.0 + i * h;
    const double k1 = rhs(X, s), k2 = rhs(X + 0.5 * h * k1, s + 0.5 * h), k3 = rhs(X + 0.5 * h * k2, s + 0.5 * h),
                 k4 = rhs(X + h * k3, s + h);
    X += (k1 + 2 * k2 + 2 * k3 + k4) * (h / 6.0);
  }
  return X;
}

int RectifyingChart::steps_for(double v) const {
  // far outside the window the field is an extrapolation anyway; cap the work
  return std::clamp(static_cast<int>(std::ceil(std::min(steps_per_unit_ * std::abs(v), 4096.0))), 2, 4096);
}

Vec2 RectifyingChart::eval(const Vec2& p) const {
  if (identity_) return p;
  const double v = p.y() - g_.eval(p.x());
  if (v == 0.0) return {p.x(), 0.0};
  return {foot(p.x(), v, steps_for(v)), v};
}

Series2Map RectifyingChart::series(const Vec2& p, int order) const {
  if (identity_) return Series2Map::identity(order, p);
  const Taylor2 u = Taylor2::var_x(order, p.x());
  std::vector<double> gd(order + 1);
  for (int k = 0; k <= order; ++k) gd[k] = g_.eval(p.x(), k);
  const Taylor2 v = Taylor2::var_y(order, p.y()) - Taylor2::apply(gd, u);
  // one doubling beyond the order-0 count covers the coefficient series
  return {foot(u, v, 2 * steps_for(v.value())), v};
}

Vec2 RectifyingChart::inverse(const Vec2& q) const {
  if (identity_) return q;
  const double v = q.y();
  const int steps = steps_for(v);
  // h(., v) is a near-identity monotone map: secant iteration
  double u0 = q.x(), r0 = foot(u0, v, steps) - q.x();
  double u1 = q.x() - r0;
  for (int it = 0; it < 40 && r0 != 0.0; ++it) {
    const double r1 = foot(u1, v, steps) - q.x();
    if (std::abs(r1) <= 1e-15 * std::max(xi_.rect().x1 - xi_.rect().x0, std::abs(q.x())) || r1 == r0) {
      u0 = u1;
      break;
    }
    const double u2 = u1 - r1 * (u1 - u0) / (r1 - r0);
    u0 = u1, r0 = r1, u1 = u2;
  }
  return {u0, v + g_.eval(u0)};
}

Series2Map RectifyingChart::inverse_series(const Vec2& q, int order) const {
  if (identity_) return Series2Map::identity(order, q);
  const Vec2 p = inverse(q);
  return invert(series(p, order), p);
}

RectifyCheck verify_rectification(const RectifyingChart& psi, const Rect& w, int n) {
  RectifyCheck c;
  for (int i = 0; i < n; ++i) {
    const double x = w.x0 + (w.x1 - w.x0) * i / (n - 1);
    const double gx = psi.identity() ? 0.0 : psi.graph().eval(x);
    c.graph_residual = std::max(c.graph_residual, (psi.eval({x, gx}) - Vec2(x, 0)).norm());
  }
  for (const Vec2& p : grid_points(w, n, n)) {
    const double xi = psi.identity() ? 0.0 : psi.field().eval(p);
    const Vec2 d = psi.series(p, 1).linear() * Vec2(xi, 1.0);
    c.direction_residual = std::max(c.direction_residual, std::atan2(std::abs(d.x()), std::abs(d.y())));
    c.roundtrip = std::max(c.roundtrip, (psi.inverse(psi.eval(p)) - p).norm());
  }
  return c;
}

SkewFormReport skew_form_check(const RectifyingChart& psi_m, const RectifyingChart& psi_m1, const JetMap& f,
                               const Rect& w, int r, int n) {
  SkewFormReport rep;
  rep.r = r;
  auto composite = [&](const Vec2& q) {
    const Series2Map inv = psi_m.inverse_series(q, r);
    const Series2Map fm = compose(f.series(inv.value(), r), inv);
    return compose(psi_m1.series(fm.value(), r), fm);
  };
  for (const Vec2& q : grid_points(w, n, n)) {
    const Series2Map G = composite(q);
    rep.y_dependence = std::max(rep.y_dependence, std::abs(G.f.partial(0, 1)));
    if (std::abs(q.y()) > 1e-6 * (w.y1 - w.y0)) rep.K = std::max(rep.K, std::abs(G.g.partial(r - 1, 0)) / std::abs(q.y()));
  }
  // |d_x^{r-1} e~(x, y)| against |y| along a few vertical lines
  std::vector<double> lx, ly;
  for (int i = 1; i <= 3; ++i) {
    const double x = w.x0 + (w.x1 - w.x0) * i / 4;
    for (int k = 0; k <= 12; ++k) {
      const double y = std::pow(10.0, -4.0 + 0.25 * k);
      if (y > w.y1) continue;
      const double d = std::abs(composite({x, y}).g.partial(r - 1, 0));
      if (d > 1e-300) lx.push_back(std::log(y)), ly.push_back(std::log(d));
    }
  }
  rep.slope = lx.size() >= 2 ? least_squares_slope(lx, ly) : 0.0;
  return rep;
}

// ---------------------------------------------------------------- decay under skew sequences

namespace {

DecayPremise fit_premise(std::span<const PlanarMap* const> maps, const Rect& w, int r, double sm, double sp,
                         double lam) {
  DecayPremise p;
  p.sigma_minus = sm, p.sigma_plus = sp, p.lambda = lam;
  for (const PlanarMap* m : maps)
    for (const Vec2& q : grid_points(w, 9, 10)) {
      if (q.y() == 0.0) continue;
      const Taylor2 e = m->series(q, r).g;
      for (int s = 0; s <= r; ++s) p.C = std::max(p.C, std::abs(s == 0 ? e.value() : e.partial(s, 0)) / std::abs(q.y()));
    }
  return p;
}

}  // namespace

DecayReport graph_decay_check(std::span<const PlanarMap* const> maps, const GraphJet& g, double a, double b, int r,
                              double sm, double sp, double lam, int samples) {
  DecayReport rep;
  const std::size_t N = maps.size();
  rep.rate.measured.assign(N, 0.0);
  for (int i = 0; i < samples; ++i) {
    const double t = a + (b - a) * i / (samples - 1);
    for (std::size_t n = 1; n <= N; ++n) {
      double x = t;
      for (std::size_t m = n; m-- > 0;) x = maps[m]->inverse({x, 0.0}).x();
      const Taylor1 gs = g(x, r);
      Series2Map s{Taylor2::var_x(r, x), lift_x(gs)};
      for (std::size_t m = 0; m < n; ++m) s = compose(maps[m]->series(s.value(), r), s);
      const Taylor1 gt = Taylor1::compose(along_x(s.g), Taylor1::invert(along_x(s.f), x));
      for (int k = 1; k <= r; ++k) rep.rate.measured[n - 1] = std::max(rep.rate.measured[n - 1], std::abs(gt.deriv(k)));
    }
  }
  finish_rate(rep.rate, (2 * r - 1) * std::log(sp / sm) + std::log(lam));
  rep.premise = fit_premise(maps, {a, b, -1, 1}, r, sm, sp, lam);
  return rep;
}

DecayReport field_decay_check(std::span<const PlanarMap* const> maps, const FieldJet& xi, const Rect& w, int r,
                              double sm, double sp, double lam, int npts) {
  DecayReport rep;
  const std::size_t N = maps.size();
  rep.rate.measured.assign(N, 0.0);
  double xi_norm = 0;
  const auto grid = grid_points(w, npts, npts);
  for (const Vec2& q : grid) {
    const Taylor2 s = xi(q, r - 1);
    xi_norm = std::max(xi_norm, std::abs(s.value()));
    for (int k = 1; k <= r - 1; ++k) xi_norm = std::max(xi_norm, multilinear_norm(s, k));
  }
  for (const Vec2& q : grid)
    for (std::size_t n = 1; n <= N; ++n) {
      Vec2 p = q;
      for (std::size_t m = n; m-- > 0;) p = maps[m]->inverse(p);
      Series2Map s = Series2Map::identity(r, p);
      for (std::size_t m = 0; m < n; ++m) s = compose(maps[m]->series(s.value(), r), s);
      const Taylor2 xf = Taylor2::compose(xi(s.value(), r), s.f, s.g);
      const Taylor2 t = (xf * s.g.d_dy() - s.f.d_dy()) / (s.f.d_dx() - xf * s.g.d_dx());
      double v = std::abs(t.value());
      for (int k = 1; k <= r - 1; ++k) v = std::max(v, multilinear_norm(t, k));
      rep.rate.measured[n - 1] = std::max(rep.rate.measured[n - 1], v);
    }
  finish_rate(rep.rate, (r - 1) * std::log(sp * sp * sp / sm) + std::log(lam));
  rep.premise = fit_premise(maps, w, r, sm, sp, lam);
  for (std::size_t n = 1; n <= N; ++n) {
    const double lhs = std::log(rep.premise.C) + n * (r * std::log(sp) + std::log(lam)) + std::log1p(xi_norm);
    rep.premise.worst = std::max(rep.premise.worst, std::exp(lhs - n * std::log(sm)));
  }
  rep.premise.holds = rep.premise.worst < 1;
  return rep;
}

}  // namespace pesin
