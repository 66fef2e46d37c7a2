#include "pesin/system.hpp"

#include <cmath>

namespace pesin {

PlanarMap::PlanarMap(SeriesFn forward, SeriesFn inverse, Rect domain, int smoothness)
    : forward_(std::move(forward)), inverse_(std::move(inverse)), domain_(domain), smoothness_(smoothness) {}

Vec2 PlanarMap::eval(const Vec2& p) const { return forward_(Series2Map::identity(0, p)).value(); }

Series2Map PlanarMap::series(const Vec2& p, int order) const { return forward_(Series2Map::identity(order, p)); }

Vec2 PlanarMap::inverse(const Vec2& p) const {
  if (inverse_) return inverse_(Series2Map::identity(0, p)).value();
  // Newton from the inverse of the linear part at the origin
  const Series2Map s0 = series(Vec2::Zero(), 1);
  Vec2 q = s0.linear().inverse() * (p - s0.value());
  for (int it = 0; it < 60; ++it) {
    const Series2Map s = series(q, 1);
    const Vec2 step = s.linear().inverse() * (p - s.value());
    q += step;
    if (step.norm() <= 1e-16 * (1.0 + q.norm())) return q;
  }
  const Vec2 res = eval(q) - p;
  if (res.norm() > 1e-12 * (1.0 + p.norm())) throw InputError("inverse: Newton did not converge");
  return q;
}

Series2Map PlanarMap::inverse_series(const Vec2& p, int order) const {
  if (inverse_) return inverse_(Series2Map::identity(order, p));
  const Vec2 q = inverse(p);
  return invert(series(q, order), q);
}

PlanarMap henon(double a, double b, Rect domain) {
  if (b == 0.0) throw InputError("henon: b == 0 gives a non-invertible map");
  SeriesFn fwd = [a, b](const Series2Map& s) { return Series2Map{a - s.f * s.f - b * s.g, s.f}; };
  SeriesFn inv = [a, b](const Series2Map& s) { return Series2Map{s.g, (a - s.g * s.g - s.f) * (1.0 / b)}; };
  return PlanarMap(fwd, inv, domain);
}

PlanarMap affine_map(const Mat2& a, const Vec2& shift, Rect domain) {
  if (a.determinant() == 0.0) throw InputError("affine map with singular matrix");
  const Mat2 ai = a.inverse();
  SeriesFn fwd = [a, shift](const Series2Map& s) { return apply_affine(a, s, shift); };
  SeriesFn inv = [ai, shift](const Series2Map& s) { return apply_affine(ai, s, -ai * shift); };
  return PlanarMap(fwd, inv, domain);
}

namespace {
Taylor2 eval_poly(const std::vector<Monomial>& p, const Series2Map& s) {
  Taylor2 r(s.order());
  for (const auto& m : p) {
    Taylor2 t(s.order(), m.c);
    for (int k = 0; k < m.i; ++k) t = t * s.f;
    for (int k = 0; k < m.j; ++k) t = t * s.g;
    r += t;
  }
  return r;
}
}  // namespace

Series2Map eval_polynomial(const std::vector<Monomial>& f, const std::vector<Monomial>& g, const Series2Map& s) {
  return {eval_poly(f, s), eval_poly(g, s)};
}

PlanarMap polynomial_map(std::vector<Monomial> f, std::vector<Monomial> g, Rect domain) {
  for (const auto& m : f)
    if (m.i < 0 || m.j < 0) throw InputError("polynomial map: negative exponent");
  for (const auto& m : g)
    if (m.i < 0 || m.j < 0) throw InputError("polynomial map: negative exponent");
  SeriesFn fwd = [f = std::move(f), g = std::move(g)](const Series2Map& s) { return eval_polynomial(f, g, s); };
  return PlanarMap(fwd, nullptr, domain);
}

PlanarMap conjugate(const PlanarMap& f, const Mat2& r) {
  const Mat2 ri = r.inverse();
  SeriesFn fwd = [f, r, ri](const Series2Map& s) { return apply_affine(r, f.apply(apply_affine(ri, s))); };
  SeriesFn inv;
  if (f.has_exact_inverse())
    inv = [f, r, ri](const Series2Map& s) {
      // inverse on the conjugated side through the original inverse series
      const Series2Map t = apply_affine(ri, s);
      Series2Map u = compose(f.inverse_series(t.value(), t.order()), t);
      return apply_affine(r, u);
    };
  Rect d = f.domain();
  return PlanarMap(fwd, inv, d, f.smoothness());
}

OrbitSegment orbit(const PlanarMap& f, const Vec2& p0, int M, int N) {
  if (M < 0 || N < 0) throw InputError("orbit: negative depth");
  if (!f.domain().contains(p0)) throw InputError("orbit: base point outside the map domain");
  auto bad = [](const Vec2& p) { return !std::isfinite(p.x()) || !std::isfinite(p.y()) || p.cwiseAbs().maxCoeff() > 1e100; };
  std::vector<Vec2> fwd{p0}, bwd;
  for (int n = 1; n <= N; ++n) {
    const Vec2 q = f.eval(fwd.back());
    if (bad(q)) throw InputError("orbit: overflow at forward step " + std::to_string(n));
    if (!f.domain().contains(q)) break;
    fwd.push_back(q);
  }
  for (int n = 1; n <= M; ++n) {
    const Vec2 q = f.inverse(bwd.empty() ? p0 : bwd.back());
    if (bad(q)) throw InputError("orbit: overflow at backward step " + std::to_string(n));
    if (!f.domain().contains(q)) break;
    bwd.push_back(q);
  }
  OrbitSegment o;
  o.p0 = p0;
  o.M_requested = M;
  o.N_requested = N;
  o.M = static_cast<int>(bwd.size());
  o.N = static_cast<int>(fwd.size()) - 1;
  o.truncated = o.M < M || o.N < N;
  o.pts.assign(bwd.rbegin(), bwd.rend());
  o.pts.insert(o.pts.end(), fwd.begin(), fwd.end());
  o.jac.reserve(o.pts.size());
  for (const auto& p : o.pts) o.jac.push_back(f.jacobian(p));
  return o;
}

OrbitSegment orbit_from(const PlanarMap& f, const Vec2& start, int M, int N) {
  if (M < 0 || N < 0) throw InputError("orbit: negative depth");
  if (!f.domain().contains(start)) throw InputError("orbit: start point outside the map domain");
  OrbitSegment o;
  o.pts.push_back(start);
  for (int n = 1; n <= M + N; ++n) {
    const Vec2 q = f.eval(o.pts.back());
    if (!std::isfinite(q.x()) || !std::isfinite(q.y()) || !f.domain().contains(q)) break;
    o.pts.push_back(q);
  }
  const int got = static_cast<int>(o.pts.size()) - 1;
  if (got < M) throw InputError("orbit_from: left the domain before reaching p_0");
  o.M = o.M_requested = M;
  o.N = got - M;
  o.N_requested = N;
  o.truncated = o.N < N;
  o.p0 = o.pts[M];
  for (const auto& p : o.pts) o.jac.push_back(f.jacobian(p));
  return o;
}

OrbitSegment synthetic_orbit(std::vector<Mat2> jac, int M) {
  const int n = static_cast<int>(jac.size());
  if (M < 0 || M >= n) throw InputError("synthetic_orbit: bad depth");
  OrbitSegment o;
  o.M = o.M_requested = M;
  o.N = o.N_requested = n - 1 - M;
  o.pts.assign(n, Vec2::Zero());
  o.jac = std::move(jac);
  return o;
}

Direction::Direction(double angle) {
  t = std::fmod(angle, kPi);
  if (t < 0) t += kPi;
  if (t >= kPi) t -= kPi;
}

double Direction::distance(const Direction& a, const Direction& b) {
  const double d = std::abs(a.t - b.t);
  return std::min(d, kPi - d);
}

Cocycle raw_cocycle(const OrbitSegment& orb) {
  Cocycle c;
  c.M = orb.M;
  c.N = orb.N;
  for (int m = -orb.M; m < orb.N; ++m) c.A.push_back(orb.deriv(m));
  return c;
}

Cocycle cocycle_in_frame(const OrbitSegment& orb, const Direction& e) {
  const int M = orb.M, N = orb.N;
  std::vector<Vec2> v(M + N + 1), w(M + N + 1);  // second / first frame columns
  auto at = [M](std::vector<Vec2>& x, int m) -> Vec2& { return x[m + M]; };
  at(v, 0) = e.vec();
  at(w, 0) = Vec2(at(v, 0).y(), -at(v, 0).x());
  for (int m = 0; m < N; ++m) {
    const Vec2 img = orb.deriv(m) * at(v, m);
    if (!(img.norm() > 0) || !std::isfinite(img.norm())) throw InputError("cocycle_in_frame: direction degenerates");
    at(v, m + 1) = img.normalized();
    Vec2 w1(at(v, m + 1).y(), -at(v, m + 1).x());
    if (w1.dot(orb.deriv(m) * at(w, m)) < 0) w1 = -w1;
    at(w, m + 1) = w1;
  }
  for (int m = -1; m >= -M; --m) {
    const Vec2 pre = orb.deriv(m).inverse() * at(v, m + 1);
    if (!(pre.norm() > 0) || !std::isfinite(pre.norm())) throw InputError("cocycle_in_frame: direction degenerates");
    at(v, m) = pre.normalized();
    Vec2 w0(at(v, m).y(), -at(v, m).x());
    if (at(w, m + 1).dot(orb.deriv(m) * w0) < 0) w0 = -w0;
    at(w, m) = w0;
  }
  Cocycle c;
  c.M = M;
  c.N = N;
  c.lower_triangular = true;
  for (int m = -M; m <= N; ++m) {
    Mat2 r;
    r.col(0) = at(w, m);
    r.col(1) = at(v, m);
    c.frames.push_back(r);
  }
  for (int m = -M; m < N; ++m) c.A.push_back(c.frame(m + 1).transpose() * orb.deriv(m) * c.frame(m));
  return c;
}

Direction contracted_direction(const OrbitSegment& orb, int n, bool forward) {
  if (n < 1) throw InputError("contracted_direction: need n >= 1");
  if ((forward && n > orb.N) || (!forward && n > orb.M)) throw InputError("contracted_direction: n exceeds orbit");
  // G = P^T P with P = DF^n (forward) or DF^{-n}; iterate v <- normalize(G^{-1} v)
  std::vector<Mat2> steps;  // P = steps.back() * ... * steps.front()
  if (forward)
    for (int m = 0; m < n; ++m) steps.push_back(orb.deriv(m));
  else
    for (int m = -1; m >= -n; --m) steps.push_back(orb.deriv(m).inverse());
  std::vector<Mat2> inv(steps.size());
  for (std::size_t k = 0; k < steps.size(); ++k) inv[k] = steps[k].inverse();
  Vec2 v(1.0, 0.3);
  v.normalize();
  Vec2 prev = v;
  for (int it = 0; it < 200; ++it) {
    // P^{-T} v: apply inv[k]^T front to back
    for (std::size_t k = 0; k < inv.size(); ++k) v = (inv[k].transpose() * v).normalized();
    // P^{-1} v: back to front
    for (std::size_t k = inv.size(); k-- > 0;) v = (inv[k] * v).normalized();
    if (v.dot(prev) < 0) v = -v;
    if ((v - prev).norm() < 1e-15) break;
    prev = v;
  }
  return Direction::of(v);
}

double roundtrip_residual(const PlanarMap& f, std::span<const Vec2> pts) {
  double r = 0;
  for (const auto& p : pts) r = std::max(r, (f.inverse(f.eval(p)) - p).norm());
  return r;
}

}  // namespace pesin
