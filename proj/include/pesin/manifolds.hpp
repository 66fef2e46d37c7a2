#pragma once

#include "pesin/qlinearize.hpp"

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace pesin {

struct CurveSample {
  double s = 0;  // signed arclength from the base point
  Vec2 q = Vec2::Zero();
  Vec2 tangent = Vec2::Zero();  // unit, oriented with increasing s
  double curvature = 0;
  int source = 0;  // chart index, or the iterate n of a strong stable piece
};

// A curve through `base`, parameterized by arclength: samples sorted by s and
// the arclength jet gamma^(k)(0), k = 0..order.
struct ManifoldCurve {
  std::string kind;
  Vec2 base = Vec2::Zero();
  std::vector<CurveSample> samples;
  std::vector<Vec2> jet;

  int order() const { return static_cast<int>(jet.size()) - 1; }
  double s_min() const { return samples.front().s; }
  double s_max() const { return samples.back().s; }
  Vec2 tangent() const { return jet.at(1); }
  // cubic Hermite through the neighbouring samples
  Vec2 at(double s) const;
  std::vector<Vec2> points() const;
};

// Phi_m^{-1} of a chart-coordinate curve c(t) = z + t dir, or of its graph
// version (t, a t^k); `samples` odd so that t = 0 is a sample.
ManifoldCurve local_vertical(const ChartAtlas& atlas, int m, int samples = 201, int order = 4);
ManifoldCurve local_horizontal(const ChartAtlas& atlas, int m, int samples = 201, int order = 4);
// {(x, a x^k) : |x| < l_0} pulled back through Phi_0
ManifoldCurve chart_graph_curve(const ChartAtlas& atlas, double a, int k, int samples = 201, int order = 4);

// left sides of the two strict stable-manifold inequalities
std::array<double, 2> stable_cond_values(double lambda, double rho, double eps);

struct StrongStableReport {
  ManifoldCurve curve;
  int n_max = 0;
  std::vector<double> piece_half_length;  // arclength reach of each piece on both sides
  double stitch_mismatch = 0;    // max distance of piece n-1 samples to piece n
  double nesting_gap = 0;        // how far piece n-1 sticks out of piece n (arclength), <= 0 when nested
  // rate: (1/n) log|q_n - p_n| < (1 - eps) log lambda for n = 1..rate_n
  int rate_n = 0;
  long rate_samples = 0;
  double rate_margin = 0;        // min over samples and n of (1 - eps) log lambda - (1/n) log|q_n - p_n|
  bool pass = false;
};
// union over n <= n_max of F^{-n}(W^v_loc(p_n)), stitched on the shared
// arclength coordinate from p_0. Throws PremiseError on a stable cond
// violation or a stitching mismatch above 1e-7.
StrongStableReport strong_stable(const ChartAtlas& atlas, int n_max, int samples = 2001, int rate_n = 20,
                                 int rate_samples = 201);

// max over either polyline of the distance to the other one
double hausdorff(const std::vector<Vec2>& a, const std::vector<Vec2>& b);

struct BoundsReport {
  std::vector<double> forward_margin, backward_margin;  // log-space, min of both sides, n = 1..
  double min_margin = 0;
  bool pass = false;
};
// L^{-3} lam^{(1+3eps)n} <= Jac F^n <= L^3 lam^{(1-3eps)n}, and the backward band; needs rho == lambda
BoundsReport jacobian_bounds_check(const OrbitSegment& orb, const RegularityParams& p);
// the four bounds on ||DF^{+-n}|_E|| with C, omega from the atlas
BoundsReport derivative_bounds_check(const OrbitSegment& orb, const ChartAtlas& atlas, const Vec2& e);

// frak r = 1 - eps (1 - eps)^{-1} (7 + 11 r + 2 eps + 66 r eps)
double center_rate(double eps, int r);

ManifoldCurve center_curve(const ChartAtlas& atlas, int samples = 201, int order = 4);

struct CenterJetReport {
  double frak_r = 0;
  int n_checked = 0;
  bool hypothesis = true;     // ||DF^{-n}|_{Gamma'(t)}|| < lam^{-frak r n} for |t| < lam^{11 eps n}, n <= n_checked
  int first_failure_n = 0;    // 0 when it holds
  double worst_log_margin = 0;
  int discrepancy_order = -1;  // first k <= order with |Gamma^(k)(0) - W^(k)(0)| > 1e-6, -1 for none
  double discrepancy = 0;
  // angle growth along the backward chart orbit of Gamma's end point:
  // tan t_{-m} >= lam^{-(1-eps)m} tan t_0 until the angle passes 1
  bool growth_holds = true;
  int n0 = 0, n0_predicted = 0;  // first m with t_{-m} > 1; its value if the lower bound were sharp
  double t0 = 0;
};
// pre: eps < 1 / (11 r + 2). n_max <= M, defaults to M.
CenterJetReport center_jet_compare(const ChartAtlas& atlas, const ManifoldCurve& gamma, int order, int n_max = -1);

}  // namespace pesin
