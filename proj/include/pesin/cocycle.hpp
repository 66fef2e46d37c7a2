#pragma once

#include "pesin/system.hpp"

#include <cstdint>
#include <vector>

namespace pesin {

// Values indexed by l in [lo, hi], stored in log space.
struct ScalingSequence {
  int lo = 0, hi = 0;
  std::vector<double> log_values;
  double log_at(int l) const { return log_values[l - lo]; }
  double at(int l) const { return std::exp(log_at(l)); }
};

// Upper (a, c; 0, b) or lower (a, 0; c, b) triangular cocycle A_0..A_{N-1}.
struct TriangularCocycle {
  std::vector<Mat2> A;
  bool upper = true;
  double C = 1;  // uniform bound on ||A_n^{+-1}||
  double rho = 0.5, eps = 0.1, L = 1;
  int N() const { return static_cast<int>(A.size()); }
  double a(int n) const { return A[n](0, 0); }
  double b(int n) const { return A[n](1, 1); }
  double c(int n) const { return upper ? A[n](0, 1) : A[n](1, 0); }
};

// smallest C >= 1 with ||A_n^{+-1}|| < C (times a safety factor)
double uniform_bound(std::span<const Mat2> a, double factor = 1.0 + 1e-9);

// Random admissible cocycle: b_n/a_n = rho^{1 + eps * s_n} with |s_n| <= 0.9
// (upper, attracting horizontal) or a_n/b_n = rho^{-(1 + eps s_n)} (lower).
TriangularCocycle synthetic_cocycle(std::uint64_t seed, int N, double rho, double eps, bool upper, double corner = 0.5);

// ---- Adaptation lemma
struct AdaptationReport {
  ScalingSequence zeta;            // l = -M..N
  double max_ratio_residual = 0;   // |zeta_{l+1}/zeta_l - predicted| / predicted
  double min_lower_margin = 0;     // log zeta_l - log(1/L)
  double min_upper_margin = 0;     // log(L lambda^{-(delta+eps)|l|}) - log zeta_l
  double min_lower_margin_strict = 0;  // log zeta_l (the literal "1 <" bound), l != 0
  bool pass = false;
};
// u holds u_{-M}, ..., u_{N-1}. Throws PremiseError naming the first violating index.
AdaptationReport adaptation_scalings(std::span<const double> u, int M, double lambda, double eps, double delta,
                                     double L);

// ---- projective attractor E^0 for an upper triangular cocycle
double attractor_min_L(const TriangularCocycle& c);  // minimal L in the attracting sandwich
struct DominatedReport {
  ScalingSequence sigma;  // n = 0..N
  std::vector<Mat2> A_tilde;
  double max_residual = 0;         // ||S_{n+1} A_n - A~_n S_n|| and entrywise match with the display
  double min_lower_margin = 0;     // log sigma_n + log L
  double min_upper_margin = 0;     // log(L rho^{-2 eps n}) - log sigma_n
};
DominatedReport dominated_block_diagonalization(const TriangularCocycle& c);

struct TransverseReport {
  Direction E_hat;                 // at n = 0, original coordinates
  double omega = 0;                // C^2 / (rho~ (1 - rho~))
  double min_cone_margin = 0;      // omega - |x'/y'| on the boundary rays, min over n
  double min_orbit_cone_margin = 0;  // omega - |x_n / y_n| along E^_n
  std::vector<double> log_growth;  // log ||A_0^n|_E^|| - log b_0...b_{n-1}, n = 1..N
  double min_lower_margin = 0;     // against (L^2 rho^{-2 eps n} sqrt(1+omega^2))^{-1}
  double min_upper_margin = 0;     // against L rho^{-2 eps n} sqrt(1+omega^2)
  double min_literal_lower_margin = 0;  // against (L^2 rho^{2 eps n} sqrt(1+omega^2))^{-1}, diagnostic
  bool pass = false;
};
TransverseReport transverse_repelling_direction(const TriangularCocycle& c);

// ---- projective repeller E^{pi/2} for a lower triangular cocycle
double repeller_min_L(const TriangularCocycle& c);
struct RepellerReport {
  ScalingSequence sigma_hat;  // n = 0..N
  std::vector<Mat2> A_hat, A_check;
  std::vector<double> tau;    // n = 0..N
  double omega_hat = 0;       // rho^ C^2 / (1 - rho^)
  double min_cone_margin = 0;
  double max_tau = 0;
  double max_hat_residual = 0, max_check_residual = 0, max_offdiag = 0;
  double min_lower_margin = 0, min_upper_margin = 0;  // sigma^ in [1/L, L rho^{-2 eps n}]
  bool pass = false;
};
RepellerReport repeller_normalization(const TriangularCocycle& c);

struct ContractionReport {
  double t = 0;
  int crossover = 0;               // largest n with s_n <= pi/4 (angle from vertical)
  std::vector<double> log_dp;      // log d_P A_0^n(E^{pi/2 - t}), n = 0..N
  double K_lower = 1, K_upper = 1; // fitted constants
  double K_lower_literal = 1;      // lower bound with t^{-2} also before the crossover; grows like t^{-2}
  double K() const { return std::max(K_lower, K_upper); }
};
ContractionReport projective_contraction_bounds(const TriangularCocycle& c, double t);

}  // namespace pesin
