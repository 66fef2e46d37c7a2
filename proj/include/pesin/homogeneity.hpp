#pragma once

#include "pesin/regularity.hpp"

#include <vector>

namespace pesin {

struct HomogeneityReport {
  double eta = 0, lambda = 0;
  // log margins per sample point, min of both sides; >= 0 when the point is fine
  //  i)  lam^{1+eta} < sigma_min <= sigma_max < lam^{-eta}
  //  ii) lam^{1+eta} < |det| < lam^{1-eta}
  std::vector<double> margin_i, margin_ii;
  double min_margin_i = 0, min_margin_ii = 0;
  bool pass = false;
};
HomogeneityReport check_homogeneous(const std::vector<Mat2>& derivs, double eta, double lambda);
HomogeneityReport check_homogeneous(const PlanarMap& f, const std::vector<Vec2>& sample, double eta, double lambda);

// orbit segment after a transient; jac[i] = D F at pts[i]. `extra` points past
// `count` are kept so that F^n can be formed at every sample point for n <= extra + 1.
struct AttractorSample {
  std::vector<Vec2> pts;
  std::vector<Mat2> jac;
  int count = 0;
  int period = 0;  // smallest p <= 64 with pts[i + p] == pts[i] to 1e-9 on the sample, 0 if none
};
AttractorSample attractor_sample(const PlanarMap& f, const Vec2& seed, int count, int transient = 1000, int extra = 64);

struct HomogenizingReport {
  int N = 0;  // smallest passing n, 0 if none up to the cap
  double lambda_est = 0;
  double eta = 0;
  std::vector<double> birkhoff;      // running mean of log Jac over the sample orbit, k = 1..count
  std::vector<double> sup_log_norm;  // n = 1..: sup_p (1/n) log ||D_p F^n||
  std::vector<double> inf_log_conorm;  // inf_p (1/n) log of the smallest singular value
  std::vector<double> min_margin_i, min_margin_ii;  // of check_homogeneous(F^n, lambda_est^n)
  bool found = false;
};
HomogenizingReport find_homogenizing_iterate(const AttractorSample& s, double eta, int N_cap = 64);

// F^n along a trajectory: points every n steps, jacobians the n-step products
OrbitSegment iterate_orbit(const OrbitSegment& orb, int n);

enum class Sides { Forward, Backward, Both };

struct SimplifiedParams {
  double lambda = 0.5, eps = 0.1, eta = 0.05, L = 1;
  int M = 0, N = 0;
  Flavor flavor = Flavor::Vertical;
  Sides sides = Sides::Both;
};

struct SimplifiedCertificate {
  SimplifiedParams params;
  HomogeneityReport homogeneity;            // on the orbit points the inequalities use
  std::vector<double> forward_margin, backward_margin;  // log margins of the single inequalities at L
  double min_L = 1;                          // smallest L passing the single inequalities
  bool pass = false;
  // cross-check with the full conditions at rho = lambda
  double L_bar = 1, eps_bar = 0;             // inflation from homogeneity: L^2, max(2 eps + eta, 3 eta)
  RegularityCertificate full;                // certify at (L_bar, eps_bar)
  double measured_eps = 0;                   // smallest eps passing certify at L_bar (bisection)
  bool implication = false;                  // !pass || full.pass
};
// Throws PremiseError("homogeneity premise missing ...") unless eta < eps and the
// orbit points used are (eta, lambda)-homogeneous.
SimplifiedCertificate simplified_certify(const OrbitSegment& orb, const DirectionField& e, const SimplifiedParams& p);

}  // namespace pesin
