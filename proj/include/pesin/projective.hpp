#pragma once

#include "pesin/system.hpp"

#include <vector>

namespace pesin {

// theta'(t) for the induced map on directions: |Jac| / |J e|^2
double projective_derivative(const Mat2& j, const Direction& e);
double projective_derivative(const Jet2D& j, const Direction& e);

// theta''(t), closed form through the singular value decomposition
// J = R_beta diag(a, b) R_alpha^{-1}; zero at t = alpha +- pi/2.
double projective_second_derivative(const Mat2& j, const Direction& e);
double projective_second_derivative(const Jet2D& j, const Direction& e);

// angle of the direction of maximal expansion, and the singular values
struct SvdAngles {
  double a = 0, b = 0;  // a >= b > 0
  double alpha = 0, beta = 0;
  double sign = 1;      // sign of det
};
SvdAngles svd_angles(const Mat2& j);

// max_t |d/dt |J(cos t, sin t)||
double growth_variance(const Mat2& j, int samples);
double growth_variance(const Jet2D& j, int samples);

double eccentricity(const PlanarMap& f, const Rect& region, int nx, int ny);

enum class ProjMode { ForwardAttractor, ForwardRepeller, BackwardAttractor, BackwardRepeller };

struct ProjectiveCertificate {
  ProjMode mode = ProjMode::ForwardAttractor;
  double rho = 0, eps = 0;
  int horizon = 0;
  std::vector<double> log_dp;     // log d_P DF^{+-n}(E), n = 0..horizon
  std::vector<double> log_defect;  // log L needed at n
  double min_L = 1;
  // first n at which the sandwich fails with the given L, or -1
  int first_failure(double L) const;
};

// log d_P DF^n (forward) or DF^{-n} (backward) along the direction orbit, n = 0..horizon
std::vector<double> log_projective_products(const OrbitSegment& orb, const Direction& e, int horizon, bool forward);

ProjectiveCertificate classify_projective(const OrbitSegment& orb, const Direction& e, double rho, double eps,
                                          ProjMode mode, int horizon);

}  // namespace pesin
