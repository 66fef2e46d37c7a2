#include "pesin/projective.hpp"

#include <algorithm>
#include <cmath>

namespace pesin {

double projective_derivative(const Mat2& j, const Direction& e) {
  const double det = j.determinant();
  if (det == 0.0) throw InputError("projective derivative: singular linear part");
  return std::abs(det) / (j * e.vec()).squaredNorm();
}

double projective_derivative(const Jet2D& j, const Direction& e) {
  if (j.order < 1) throw InputError("projective derivative needs a jet of order >= 1");
  return projective_derivative(j.to_series().linear(), e);
}

SvdAngles svd_angles(const Mat2& j) {
  Eigen::JacobiSVD<Mat2> svd(j, Eigen::ComputeFullU | Eigen::ComputeFullV);
  SvdAngles s;
  s.a = svd.singularValues()(0);
  s.b = svd.singularValues()(1);
  s.alpha = std::atan2(svd.matrixV()(1, 0), svd.matrixV()(0, 0));
  s.beta = std::atan2(svd.matrixU()(1, 0), svd.matrixU()(0, 0));
  s.sign = j.determinant() < 0 ? -1.0 : 1.0;
  return s;
}

double projective_second_derivative(const Mat2& j, const Direction& e) {
  if (j.determinant() == 0.0) throw InputError("projective derivative: singular linear part");
  const SvdAngles s = svd_angles(j);
  const double u = e.t - s.alpha;
  const double c = std::cos(u), sn = std::sin(u);
  const double l2 = s.a * s.a * c * c + s.b * s.b * sn * sn;
  // derivative of ab/l^2 in t; orientation reversal flips theta
  return s.sign * 2 * s.a * s.b * (s.a * s.a - s.b * s.b) * sn * c / (l2 * l2);
}

double projective_second_derivative(const Jet2D& j, const Direction& e) {
  if (j.order < 1) throw InputError("projective derivative needs a jet of order >= 1");
  return projective_second_derivative(j.to_series().linear(), e);
}

namespace {
double length_rate(const Mat2& j, double t) {
  const Vec2 w = j * unit(t);
  const Vec2 dw = j * Vec2(-std::sin(t), std::cos(t));
  return std::abs(w.dot(dw)) / w.norm();
}
}  // namespace

double growth_variance(const Mat2& j, int samples) {
  if (samples < 8) throw InputError("growth_variance: need at least 8 samples");
  double best = -1, bt = 0;
  for (int i = 0; i < samples; ++i) {
    const double t = kPi * i / samples;
    const double v = length_rate(j, t);
    if (v > best) best = v, bt = t;
  }
  double lo = bt - kPi / samples, hi = bt + kPi / samples;
  const double g = (std::sqrt(5.0) - 1) / 2;
  for (int it = 0; it < 60; ++it) {
    const double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
    if (length_rate(j, c) > length_rate(j, d)) hi = d;
    else lo = c;
  }
  return std::max(best, length_rate(j, 0.5 * (lo + hi)));
}

double growth_variance(const Jet2D& j, int samples) { return growth_variance(j.to_series().linear(), samples); }

double eccentricity(const PlanarMap& f, const Rect& region, int nx, int ny) {
  const Rect& d = f.domain();
  if (region.x0 < d.x0 || region.x1 > d.x1 || region.y0 < d.y0 || region.y1 > d.y1)
    throw InputError("eccentricity: region outside the map domain");
  double e = 1;
  for (const auto& p : grid_points(region, nx, ny)) {
    const Mat2 j = f.jacobian(p);
    e = std::max(e, op_norm(j) / min_sv(j));
  }
  return e;
}

std::vector<double> log_projective_products(const OrbitSegment& orb, const Direction& e, int horizon, bool forward) {
  if (horizon > (forward ? orb.N : orb.M)) throw InputError("projective certificate: horizon exceeds orbit");
  std::vector<double> out{0.0};
  Vec2 v = e.vec();
  double acc = 0;
  for (int n = 1; n <= horizon; ++n) {
    const Mat2 a = forward ? orb.deriv(n - 1) : Mat2(orb.deriv(-n).inverse());
    const Vec2 w = a * v;
    const double nw = w.norm();
    if (!(nw > 0) || !std::isfinite(nw)) throw InputError("projective certificate: direction orbit degenerates");
    acc += std::log(std::abs(a.determinant())) - 2 * std::log(nw);
    out.push_back(acc);
    v = w / nw;
  }
  return out;
}

ProjectiveCertificate classify_projective(const OrbitSegment& orb, const Direction& e, double rho, double eps,
                                          ProjMode mode, int horizon) {
  if (!(rho > 0 && rho < 1 && eps > 0 && eps < 1)) throw InputError("classify_projective: need 0 < rho, eps < 1");
  const bool forward = mode == ProjMode::ForwardAttractor || mode == ProjMode::ForwardRepeller;
  const bool attractor = mode == ProjMode::ForwardAttractor || mode == ProjMode::BackwardAttractor;
  ProjectiveCertificate c;
  c.mode = mode;
  c.rho = rho;
  c.eps = eps;
  c.horizon = horizon;
  c.log_dp = log_projective_products(orb, e, horizon, forward);
  const double lr = std::log(rho);
  double worst = 0;
  for (int n = 0; n <= horizon; ++n) {
    const double p = c.log_dp[n];
    double lo, hi;  // log of the envelope without L
    if (attractor) lo = (1 + eps) * n * lr, hi = (1 - eps) * n * lr;
    else lo = -(1 - eps) * n * lr, hi = -(1 + eps) * n * lr;
    const double d = std::max(lo - p, p - hi);
    c.log_defect.push_back(d);
    worst = std::max(worst, d);
  }
  c.min_L = std::exp(worst);
  return c;
}

int ProjectiveCertificate::first_failure(double L) const {
  const double ll = std::log(L);
  for (std::size_t n = 0; n < log_defect.size(); ++n)
    if (log_defect[n] > ll + 1e-9) return static_cast<int>(n);
  return -1;
}

}  // namespace pesin
