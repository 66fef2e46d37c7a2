#pragma once

#include "pesin/jets.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace pesin {

// A map written once over Series2Map arithmetic; plain evaluation is the
// order-0 case.
using SeriesFn = std::function<Series2Map(const Series2Map&)>;

class PlanarMap final : public JetMap {
 public:
  PlanarMap(SeriesFn forward, SeriesFn inverse, Rect domain, int smoothness = kMaxOrder);

  Vec2 eval(const Vec2& p) const override;
  Series2Map series(const Vec2& p, int order) const override;
  Vec2 inverse(const Vec2& p) const;
  Series2Map inverse_series(const Vec2& p, int order) const;
  Mat2 jacobian(const Vec2& p) const { return series(p, 1).linear(); }
  Mat2 inverse_jacobian(const Vec2& p) const { return inverse_series(p, 1).linear(); }
  Jet2D jet(const Vec2& p, int order) const { return Jet2D::from_series(p, series(p, order)); }

  // F applied to a series (used for conjugations and compositions)
  Series2Map apply(const Series2Map& s) const { return forward_(s); }
  const SeriesFn& forward_fn() const { return forward_; }

  const Rect& domain() const { return domain_; }
  int smoothness() const { return smoothness_; }
  bool has_exact_inverse() const { return static_cast<bool>(inverse_); }

 private:
  SeriesFn forward_, inverse_;  // inverse may be empty: Newton is used then
  Rect domain_;
  int smoothness_;
};

PlanarMap henon(double a, double b, Rect domain = Rect::box(10));
PlanarMap affine_map(const Mat2& a, const Vec2& shift = Vec2::Zero(), Rect domain = Rect::box(1e6));

// component polynomials: list of (i, j, coefficient) for x^i y^j
struct Monomial {
  int i = 0, j = 0;
  double c = 0;
};
PlanarMap polynomial_map(std::vector<Monomial> f, std::vector<Monomial> g, Rect domain);
// R o F o R^{-1} for a linear change of coordinates R
PlanarMap conjugate(const PlanarMap& f, const Mat2& r);

Series2Map eval_polynomial(const std::vector<Monomial>& f, const std::vector<Monomial>& g, const Series2Map& s);

struct OrbitSegment {
  Vec2 p0 = Vec2::Zero();
  int M = 0, N = 0;  // attained depths
  int M_requested = 0, N_requested = 0;
  bool truncated = false;
  std::vector<Vec2> pts;   // m = -M..N
  std::vector<Mat2> jac;   // D_{p_m}F, m = -M..N

  const Vec2& point(int m) const { return pts[m + M]; }
  const Mat2& deriv(int m) const { return jac[m + M]; }
};

OrbitSegment orbit(const PlanarMap& f, const Vec2& p0, int M, int N);
// p_{-M} = start, all points by forward iteration (stable along unstable manifolds)
OrbitSegment orbit_from(const PlanarMap& f, const Vec2& start, int M, int N);
// bare cocycle along a fictitious orbit (points at the origin), jac[m + M] = A_m, m = -M..N
OrbitSegment synthetic_orbit(std::vector<Mat2> jac, int M);

// Direction: a line through the origin, angle mod pi.
struct Direction {
  double t = 0;
  Direction() = default;
  explicit Direction(double angle);
  static Direction of(const Vec2& v) { return Direction(std::atan2(v.y(), v.x())); }
  Vec2 vec() const { return unit(t); }
  static double distance(const Direction& a, const Direction& b);
};

struct Cocycle {
  int M = 0, N = 0;
  std::vector<Mat2> A;       // m = -M..N-1
  std::vector<Mat2> frames;  // R_m, m = -M..N; empty when standard basis
  bool lower_triangular = false;
  const Mat2& at(int m) const { return A[m + M]; }
  Mat2& at(int m) { return A[m + M]; }
  const Mat2& frame(int m) const { return frames[m + M]; }
};

// A_m in orthonormal frames whose second column spans DF^m(E); a_m, b_m > 0.
Cocycle cocycle_in_frame(const OrbitSegment& orb, const Direction& e);
Cocycle raw_cocycle(const OrbitSegment& orb);

// Most contracted direction of DF^n at p_0 (n > 0, forward) or of DF^{-n}
// (backward). Inverse power iteration on the Gram matrix, applied step by step.
Direction contracted_direction(const OrbitSegment& orb, int n, bool forward = true);

// Forward-then-inverse residual on a grid; used by tests and config validation.
double roundtrip_residual(const PlanarMap& f, std::span<const Vec2> pts);

}  // namespace pesin
