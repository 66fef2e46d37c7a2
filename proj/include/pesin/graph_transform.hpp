#pragma once

#include "pesin/hermite.hpp"
#include "pesin/system.hpp"

#include <span>
#include <vector>

namespace pesin {

// F_*(g): the graph whose image is F(graph g), on g's grid (or the given one).
// Node values by safeguarded Newton on x -> F(x, g(x)).x, derivatives by jet
// transport. Throws PremiseError when that projection folds on g's window.
HorizontalGraph graph_transform(const JetMap& f, const HorizontalGraph& g);
HorizontalGraph graph_transform(const JetMap& f, const HorizontalGraph& g, double a, double b, int cells);

// F^*(xi): direction (xi~, 1) at p is DF_p^{-1}(xi(F p), 1), on xi's grid.
// Throws PremiseError if the pulled-back direction turns horizontal.
VerticalField field_transform(const JetMap& f, const VerticalField& xi);

// sup over samples x of g of |g2(X) - Y| with (X, Y) = F(x, g(x)), X inside g2's window
double graph_invariance_residual(const JetMap& f, const HorizontalGraph& g, const HorizontalGraph& g2, int samples = 801);
// sup over samples p of xi of |xi(p) - (F^* xi2)(p)|, pullback by the plain Jacobian
double field_invariance_residual(const JetMap& f, const VerticalField& xi, const VerticalField& xi2, int per_cell = 3);

struct InvariantOptions {
  double tol = 1e-12;
  int max_sweeps = 60;
  bool periodic = false;  // the window repeats: feed the last object back to the first
  int r = 2;
  double omega = 0.1;
};

struct InvariantGraphs {
  std::vector<HorizontalGraph> g;   // g[k] lives at index lo + k, k = 0..maps.size()
  int sweeps = 0;
  std::vector<double> sweep_distance;  // ||.||_* between the last graphs of successive sweeps
  std::vector<double> contraction;     // ratios of successive sweep distances
  double residual = 0;                 // worst graph_invariance_residual along the window
  double second_deriv_norm = 0;        // max_k ||g_k''||_{C^{r-2}}
  double max_slope = 0;                // max_k sup |g_k'|
  bool omega_ok = true;
  bool converged = false;
};
// Forward sweeps from g == 0. Non-periodic windows take one sweep: outside the
// window the sequence is frozen linear, so g == 0 is already invariant there.
InvariantGraphs invariant_graphs(std::span<const JetMap* const> maps, const HorizontalGraph& zero,
                                 const InvariantOptions& opt = {});

struct InvariantFields {
  std::vector<VerticalField> xi;  // xi[k] at index lo + k, k = 0..maps.size()
  int sweeps = 0;
  std::vector<double> sweep_distance;  // C^0 distance of the first fields of successive sweeps
  std::vector<double> contraction;
  double residual = 0;
  double deriv_norm = 0;  // max_k ||D xi_k||_{C^{r-2}} on the grid
  double max_abs = 0;
  bool omega_ok = true;
  bool converged = false;
};
// Backward sweeps from xi == 0 at the end of the window.
InvariantFields invariant_fields(std::span<const JetMap* const> maps, const VerticalField& zero,
                                 const InvariantOptions& opt = {});

// Psi = H o V with V(x, y) = (x, y - g(x)) and H(u, v) = (h(u, v), v), h the
// foot point on {v = 0} of the integral curve of the straightened field. DPsi
// sends the direction (xi, 1) to (0, 1) and Psi(x, g(x)) = (x, 0).
class RectifyingChart final : public JetMap {
 public:
  RectifyingChart() = default;  // identity
  RectifyingChart(HorizontalGraph g, VerticalField xi, double omega = 0.1);

  Vec2 eval(const Vec2& p) const override;
  Series2Map series(const Vec2& p, int order) const override;
  Vec2 inverse(const Vec2& q) const;
  Series2Map inverse_series(const Vec2& q, int order) const;

  bool identity() const { return identity_; }
  const HorizontalGraph& graph() const { return g_; }
  const VerticalField& field() const { return xi_; }

 private:
  Taylor2 foot(const Taylor2& u, const Taylor2& v, int steps) const;
  double foot(double u, double v, int steps) const;
  int steps_for(double v) const;

  HorizontalGraph g_;
  VerticalField xi_;
  bool identity_ = true;
  double steps_per_unit_ = 0;  // RK4 steps per unit of |v|, calibrated on the window corners
};

struct RectifyCheck {
  double graph_residual = 0;      // max |Psi(x, g(x)) - (x, 0)|
  double direction_residual = 0;  // max angle between DPsi (xi, 1) and (0, 1)
  double roundtrip = 0;           // max |Psi^{-1}(Psi(p)) - p|
};
RectifyCheck verify_rectification(const RectifyingChart& psi, const Rect& window, int n = 21);

struct SkewFormReport {
  double y_dependence = 0;  // max |d/dy of the first component| of Psi_{m+1} F Psi_m^{-1}
  double K = 0;             // max |d_x^{r-1} e~(x, y)| / |y|
  double slope = 0;         // log-log slope of |d_x^{r-1} e~| against |y| on [1e-4, 1e-1]
  int r = 2;
};
SkewFormReport skew_form_check(const RectifyingChart& psi_m, const RectifyingChart& psi_m1, const JetMap& f,
                               const Rect& window, int r, int n = 11);

// Decay of transformed objects under a sequence of skew maps (f_m(x), e_m(x, y)).
struct DecayPremise {
  double C = 0;          // fitted: max_s |d_x^s e_m(x, y)| / |y|, s <= r
  double sigma_minus = 0, sigma_plus = 0, lambda = 0;
  bool holds = true;     // fields: C s+^{rn} lam^n (1 + ||xi||) < s-^n for all n checked
  double worst = 0;      // largest value of the left side over the right side
};
struct DecayReport {
  RateReport rate;
  DecayPremise premise;
};
using GraphJet = std::function<Taylor1(double x, int order)>;
using FieldJet = std::function<Taylor2(const Vec2& p, int order)>;
// ||(F^n_* g)'||_{C^{r-1}} over the window [a, b] (image side) against
// (s+/s-)^{2r-1} lam per step.
DecayReport graph_decay_check(std::span<const PlanarMap* const> maps, const GraphJet& g, double a, double b, int r,
                              double sigma_minus, double sigma_plus, double lambda, int samples = 41);
// ||(F^n)^* xi||_{C^{r-1}} over F^{-n}(window), the part of the plane where the
// pulled-back field is determined by xi on the window, against (s+^3/s-)^{r-1} lam.
DecayReport field_decay_check(std::span<const PlanarMap* const> maps, const FieldJet& xi, const Rect& window, int r,
                              double sigma_minus, double sigma_plus, double lambda, int n = 9);

}  // namespace pesin
