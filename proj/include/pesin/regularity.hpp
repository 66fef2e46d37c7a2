#pragma once

#include "pesin/system.hpp"

#include <array>
#include <string>
#include <vector>

namespace pesin {

enum class Flavor { Vertical, Horizontal };

struct RegularityParams {
  double lambda = 0.5, rho = 0.5, eps = 0.1, L = 1;
  int M = 0, N = 0;
  Flavor flavor = Flavor::Vertical;
};
void validate(const RegularityParams& p);

// Unit vectors w_m spanning DF^m(E) at p_m, m = lo..hi.
struct DirectionField {
  int lo = 0, hi = 0;
  std::vector<Vec2> w;
  const Vec2& at(int m) const { return w[m - lo]; }
  Direction direction(int m) const { return Direction::of(at(m)); }
};
// E pushed forward and pulled back from p_0 as given
DirectionField transport(const OrbitSegment& orb, const Direction& e);
// E^v: forward half pulled back from the most contracted output direction at p_N,
// backward half pushed back from p_0. Both steps move towards the attracting side.
DirectionField vertical_field(const OrbitSegment& orb);
// E^h: backward half pushed forward from p_{-M}, forward half pushed forward from p_0.
DirectionField horizontal_field(const OrbitSegment& orb);

struct InequalityRecord {
  std::string name;
  std::vector<double> value;         // the logged quantity, n = 1..count
  std::vector<double> lower_margin;  // log margins at params.L
  std::vector<double> upper_margin;
  double log_min_L = 0;              // largest one-sided defect, clamped at 0
  bool pass = true;
};

struct RegularityCertificate {
  RegularityParams params;
  Direction E;
  int base = 0;
  std::array<InequalityRecord, 4> ineq;  // forward 1, forward 2, backward 1, backward 2
  double min_L = 1;
  bool pass = false;
  static constexpr double kTol = 1e-9;
};

RegularityCertificate certify(const OrbitSegment& orb, const Direction& e, const RegularityParams& p);
// certification at p_base with depths (p.M, p.N) along the field
RegularityCertificate certify(const OrbitSegment& orb, const DirectionField& f, const RegularityParams& p, int base = 0);

struct TransferConstants {
  double L1, eps1, L2, eps2;
};
TransferConstants transfer_constants(double lambda, double rho, double eps, double L, double K, double theta);

struct TransferReport {
  double theta = 0, L = 1, K_hat = 1, L_pred = 1, eps_pred = 0;
  int calibration_horizon = 0;
  TransferConstants constants{};
  RegularityCertificate empirical;  // at (L_pred, eps_pred) over the full horizon
  double empirical_min_L = 1;
  bool pass = false;
};
// K^ is fitted on the first half of the horizon; the prediction is then tested on the whole of it.
TransferReport vertical_to_horizontal(const OrbitSegment& orb, const RegularityCertificate& cert_v,
                                      const DirectionField& e_h, double theta);
TransferReport horizontal_to_vertical_backward(const OrbitSegment& orb, const RegularityCertificate& cert_h,
                                               const DirectionField& e_v, double theta);

struct CombineReport {
  double theta = 0, L = 1, eps_bar = 0;
  double calL = 1;            // empirical joint irregularity at eps_bar
  double K_hat = 1;           // smallest K >= 1 with the bracket containing calL
  double lo = 0, hi = 0;      // bracket at K_hat
  RegularityCertificate joint_v, joint_h;
  bool in_bracket = false;
};
CombineReport combine_pesin(const OrbitSegment& orb, const RegularityCertificate& cert_v_fwd, const DirectionField& e_v,
                            const RegularityCertificate& cert_h_bwd, const DirectionField& e_h);

struct IrregularityProfile {
  std::vector<int> m;
  std::vector<double> log_L;      // log calL_{p_m}
  std::vector<double> log_bound;  // log(L^2 lambda_check^{-2 eps |m|})
  double L = 1;                   // base irregularity
  double min_margin = 0;
  double slope = 0;               // least-squares slope of log calL vs |m|
  bool pass = false;
};
IrregularityProfile irregularity_profile(const OrbitSegment& orb, const DirectionField& f, const RegularityParams& p);

struct RateFit {
  double lambda = 0, rho = 0, eps = 0;
};
// slopes of log||DF^n|_E|| and log(||DF^n|_E||^2 / Jac) over n = 1..N (vertical),
// eps = largest deviation from the fitted line in units of n |log base|, n >= 1
RateFit fit_rates(const OrbitSegment& orb, const DirectionField& f, int N);

}  // namespace pesin
