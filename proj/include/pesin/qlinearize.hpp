#pragma once

#include "pesin/graph_transform.hpp"
#include "pesin/regularity.hpp"

#include <array>
#include <memory>
#include <string>
#include <vector>

namespace pesin {

struct ChartOptions {
  int r = 2;
  int cells = 6;            // Hermite grid per axis on the chart box
  int K = 3;                // Hermite order
  double blend = 0.5;       // relative width of the annulus where Z F Z^{-1} is blended into A_check
  double rect_omega = 0.25; // slope / field bound handed to the rectifier
  int norm_grid = 5;        // grid per axis for the chart-norm fit
  bool require_certificate = true;
  bool require_reg_cond = true;  // off: the values are still recorded in the frames
};

// Z_m(q) = lin * (q - p): the affine frame kappa T_m Sbar_m S^_m S_m C_m.
struct AffineFrame {
  int m = 0;
  Vec2 p = Vec2::Zero();
  Mat2 R = Mat2::Identity();  // columns: E^h-side unit vector, E^v unit vector
  double log_sigma = 0, log_sigma_hat = 0, log_rho_bar = 0;
  double tau = 0;
  Mat2 lin = Mat2::Identity();
  Mat2 lin_inv = Mat2::Identity();

  Vec2 apply(const Vec2& q) const { return lin * (q - p); }
  Vec2 unapply(const Vec2& z) const { return p + lin_inv * z; }
};

struct FrameSequence {
  RegularityParams params;
  int r = 2;
  int M = 0, N = 0;
  std::vector<AffineFrame> frames;  // m = -M..N
  std::vector<Mat2> A;              // A_m in the frames C, m = -M..N-1
  std::vector<Mat2> A_bar, A_check; // m = -M..N-1
  double norm_dF = 0, norm_dF_inv = 0;  // sup along the orbit
  double omega = 0, kappa = 0, lambda_check = 0;
  double max_frame_residual = 0;   // |A_m(0,1)| / ||A_m||: how far E^v is from invariant
  double max_check_residual = 0;   // entrywise distance of A_check to the displayed diagonal
  double max_tau = 0;
  double reg_cond[2] = {0, 0};  // the two left sides; both must be < 1
  RegularityCertificate certificate;

  const AffineFrame& frame(int m) const { return frames[m + M]; }
  const Mat2& check(int m) const { return A_check[m + M]; }
};

// Displayed diagonal of A_check_m: forward formulas for m >= 0, backward ones below.
Vec2 check_diagonal(double lambda, double rho, double eps, int m);
// left sides of the two strict inequalities of the regularity condition for r
std::array<double, 2> reg_cond_values(double lambda, double rho, double eps, int r);
// throws PremiseError naming "reg cond" when one of them is >= 1
void require_reg_cond(double lambda, double rho, double eps, int r);

FrameSequence build_affine_frames(const OrbitSegment& orb, const DirectionField& ev, const RegularityParams& p,
                                  const ChartOptions& opt = {});

// F_check_m = Z_{m+1} F Z_m^{-1} near 0 through the order-8 Taylor model of F at
// p_m, blended into A_check_m over an annulus, linear beyond.
class ChartStep final : public JetMap {
 public:
  ChartStep(const PlanarMap& f, const AffineFrame& from, const AffineFrame& to, const Mat2& a_check, double radius,
            double blend);
  Vec2 eval(const Vec2& z) const override;
  Series2Map series(const Vec2& z, int order) const override;
  Vec2 inverse(const Vec2& z) const;
  const Mat2& linear() const { return a_; }
  double radius() const { return r0_; }

 private:
  Series2Map local(const Vec2& z, int order) const;
  Series2Map taylor_;  // F(p_m + w) - p_{m+1} in increments w
  Mat2 zi_, z1_, a_;
  double r0_, r1_;
};

class ChartAtlas {
 public:
  ChartAtlas(const PlanarMap& f, FrameSequence frames, const ChartOptions& opt = {});

  const FrameSequence& frames() const { return fs_; }
  const ChartOptions& options() const { return opt_; }
  const PlanarMap& map() const { return f_; }
  int M() const { return fs_.M; }
  int N() const { return fs_.N; }
  double lambda() const { return fs_.params.lambda; }
  double rho() const { return fs_.params.rho; }
  double eps() const { return fs_.params.eps; }
  double L() const { return fs_.params.L; }
  double omega() const { return fs_.omega; }
  double lambda_check() const { return fs_.lambda_check; }
  double C() const { return C_; }
  double norm_F_C2() const { return norm_c2_; }    // ||F||_{C^2} = max ||D^k F||, k = 1, 2
  double norm_DF_Cr() const { return norm_cr_; }   // ||DF||_{C^r} = max ||D^k F||, k = 1..r+1
  double box_check() const { return box_check_; }  // half-side of U_check = B(lambda_check / ||F||_{C^2})

  double log_calK(int m) const;       // log of the chart constant K_m
  double radius(int m) const;          // l_m = lambda_check / (C K_m)
  Rect box(int m) const { return Rect::box(radius(m)); }

  const RectifyingChart& psi(int m) const { return psi_[m + fs_.M]; }
  const ChartStep& step(int m) const { return *steps_[m + fs_.M]; }
  const InvariantGraphs& graphs() const { return graphs_; }
  const InvariantFields& fields() const { return fields_; }

  Vec2 phi(int m, const Vec2& q) const;
  Vec2 phi_inv(int m, const Vec2& z) const;
  Series2Map phi_series(int m, const Vec2& q, int order) const;
  Series2Map phi_inv_series(int m, const Vec2& z, int order) const;

  // F_m = Psi_{m+1} F_check_m Psi_m^{-1}, m = -M..N-1
  Vec2 chart_map(int m, const Vec2& z) const;
  Vec2 chart_map_inv(int m, const Vec2& z) const;
  Series2Map chart_map_series(int m, const Vec2& z, int order) const;

  // chart-norm fit: the largest of ||DPhi^{-1}||_{C^{r-1}} / (1 + omega) and
  // ||DPhi_m||_{C^s} / K_m^{s+1}, over the boxes of C = 1
  double chart_norm_ratio() const { return norm_ratio_; }

 private:
  PlanarMap f_;
  FrameSequence fs_;
  ChartOptions opt_;
  std::vector<std::unique_ptr<ChartStep>> steps_;
  InvariantGraphs graphs_;
  InvariantFields fields_;
  std::vector<RectifyingChart> psi_;
  double norm_c2_ = 0, norm_cr_ = 0, box_check_ = 0, C_ = 1, norm_ratio_ = 0;
  double log_calK0_ = 0;
};

// frames + atlas in one go
ChartAtlas build_atlas(const PlanarMap& f, const OrbitSegment& orb, const DirectionField& ev, const RegularityParams& p,
                       const ChartOptions& opt = {});

// ---- Theorem margins
struct TheoremRow {
  int m = 0;
  double norm_DFm = 0;            // ||DF_m||_{C^{r-1}} on U_m
  Vec2 diag = Vec2::Zero();       // D_0 F_m diagonal
  Vec2 diag_expected = Vec2::Zero();
  double offdiag = 0;
  double deriv_distance = 0;      // sup ||D_z F_m - D_0 F_m||
  double y_dependence = 0;        // sup |d_y f_m|
  double axis_residual = 0;       // sup |e_m(x, 0)|
  double skew_K = 0;              // sup_s |d_x^s e_m(x, y)| / |y|, s = 0..r
  double conjugacy = 0;           // sup |Phi_{m+1} F Phi_m^{-1} - F_m|
  double vertical_invariance = 0; // angle between DF(E^v_q) and E^v_{F q}
};

struct TheoremReport {
  std::vector<TheoremRow> rows;
  double C = 1;
  double norm_DF_Cr = 0;
  double margin_i = 0;    // min ||DF||_{C^r} - ||DF_m||_{C^{r-1}}
  double margin_ii = 0;   // -max(offdiag, entry error)
  double margin_iii = 0;  // min lambda_check - deriv_distance
  double margin_iv = 0;   // min ||DF||_{C^r} - skew_K, minus the y-dependence
  double max_residual = 0;  // offdiag, entry errors, y_dependence, axis, conjugacy, vertical invariance
  double chart_norm_ratio = 0;  // <= C
  bool pass() const { return margin_i >= 0 && margin_ii >= -1e-8 && margin_iii >= 0 && margin_iv >= -1e-8; }
};
TheoremReport verify_theorem(const ChartAtlas& atlas, int grid = 7);

// ---- Lemma: derivative bands on the chart boxes
struct BandReport {
  double alpha_minus = 0, alpha_plus = 0, beta_minus = 0, beta_plus = 0;
  double min_margin = 0;  // smallest log-distance of |f'_m|, |d_y e_m| to a band end
  int worst_m = 0;
  Vec2 worst_z = Vec2::Zero();
  long points = 0;
  bool pass = false;
};
BandReport derivative_bands(const ChartAtlas& atlas, int grid = 32);

// ---- distortion of compositions
struct DistortionReport {
  int m = 0, n = 0;
  double kappa_h = 1, kappa_v = 1;
  double l_h = 0, l_v = 0;
  double max_log_alpha = 0, max_log_beta = 0;  // sup |log ratio|
  double gamma = 0, gamma_bound = 0;
  double margin_h = 0, margin_v = 0;  // 1 - max_log / log kappa
  long points = 0, exited = 0;
  bool pass(double margin = 0.1) const {
    return exited == 0 && margin_h >= margin && margin_v >= margin && gamma < gamma_bound;
  }
};
double distortion_l_h(const ChartAtlas& atlas);
DistortionReport composed_distortion(const ChartAtlas& atlas, int m, int n, int grid = 9);

// ---- chart consistency
struct ConsistencyReport {
  double min_ratio_v = 1, max_ratio_v = 1, min_ratio_h = 1, max_ratio_h = 1;
  // Cor: ratios along sub-orbits against [1/(2 kappa), 2 kappa]
  double max_log_h = 0, max_log_v = 0;
  double kappa_h = 1, kappa_v = 1;
  long points = 0;
  bool pass = false;
};
ConsistencyReport chart_consistency(const ChartAtlas& atlas, int m, int grid = 32, int n = 10);

// ---- alignment of directions
enum class AlignMode { Vertical, Horizontal };
struct AlignmentReport {
  AlignMode mode = AlignMode::Vertical;
  int n = 0;
  double nu = 0;           // ||DF^{+-n}|_E||
  double premise_bound = 0;
  bool premise = false;
  double angle = 0, bound = 0;
  bool pass = false;       // premise && angle <= bound; skipped when the premise fails
  std::string note;
};
AlignmentReport alignment_check(const ChartAtlas& atlas, const Vec2& q0, const Vec2& direction, int n, AlignMode mode);

// ---- special neighborhoods
enum class Neighborhood { Full, TruncatedForward, TruncatedBackward, Pinched };
struct NeighborhoodSpec {
  Neighborhood kind = Neighborhood::Full;
  int m = 0;
  int n = 0;
  double omega = 1.5;  // pinching exponent
  double a = 1;        // dilation
};
struct Region {
  Rect box;             // chart coordinates
  double omega = 0, a = 0;  // pinching, a = 0 when absent
  bool contains(const Vec2& z) const;
};
Region neighborhood(const ChartAtlas& atlas, const NeighborhoodSpec& s);
double e_plus(const ChartAtlas& atlas);
double e_minus(const ChartAtlas& atlas);
double pinch_threshold(double lambda, double rho, double eps);

struct ContainmentReport {
  Region region;
  int samples = 0;
  double worst = 0;       // max over samples and steps of |z_i|_inf / l_{m +- i}
  Vec2 witness = Vec2::Zero();
  int witness_step = 0;
  bool premise = true;
  bool pass = false;
};
// forward images for truncated (+), backward images for pinched
ContainmentReport containment(const ChartAtlas& atlas, const NeighborhoodSpec& s, int samples = 400);

// pinching: points of U_0 with q_{-n} in U_{-n} lie in T^{omega,n}(C)
// (omega, C) come from the branch matching e_-: (x-width l_n) when e_- == 1,
// (x-width e_-^{-n} l_n) otherwise. The max over both branches is kept for
// reference; a larger omega thins T^omega(C), so it can miss points.
struct PinchClassReport {
  double omega = 0, log_C = 0;
  double omega_max = 0, log_C_max = 0;
  long tested = 0, inside = 0;
  long inside_max = 0;  // same count with (omega_max, C_max)
  bool pass = false;
};
PinchClassReport pinching_classification(const ChartAtlas& atlas, int grid = 41);

// ---- radii law and ball containment
struct RadiiReport {
  double max_law_error = 0;  // |log(l_m / l_0) - |m| log(rho^{4 eps} lambda^{2 eps})|
  double ball_worst = 0;     // max |Phi_m(q)|_inf / l_m over the sampled sphere
  bool pass = false;
};
RadiiReport radii_check(const ChartAtlas& atlas, int samples = 64);

}  // namespace pesin
