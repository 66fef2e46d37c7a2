#pragma once

#include "pesin/jets.hpp"

#include <functional>
#include <vector>

namespace pesin {

// Piecewise Hermite interpolation on a uniform grid: node i carries the
// derivatives 0..K, each cell is the degree 2K+1 polynomial matching both ends.
// Outside [a, b] the function is extended by the order-K Taylor polynomial of
// the nearest endpoint.
class HorizontalGraph {
 public:
  HorizontalGraph() = default;
  HorizontalGraph(double a, double b, int cells, int K);  // g == 0
  static HorizontalGraph sample(double a, double b, int cells, int K, const std::function<Taylor1(double)>& jet);

  double a() const { return a_; }
  double b() const { return b_; }
  int cells() const { return cells_; }
  int K() const { return K_; }
  double h() const { return h_; }
  double node(int i) const { return a_ + i * h_; }
  double& d(int i, int k) { return d_[i * (K_ + 1) + k]; }
  double d(int i, int k) const { return d_[i * (K_ + 1) + k]; }

  double eval(double x, int k = 0) const;
  // f^(k)(x)/k! for k <= order
  Taylor1 series(double x, int order) const;
  double sup_abs(int k, int per_cell = 4) const;
  bool center_aligned(double tol = 1e-12) const;

 private:
  double a_ = -1, b_ = 1, h_ = 2;
  int cells_ = 1, K_ = 1;
  std::vector<double> d_;
};

// sup_{x != 0} |g1(x) - g2(x)| / |x| over samples of the common interval
double star_distance(const HorizontalGraph& g1, const HorizontalGraph& g2, int samples = 2001);
double sup_distance(const HorizontalGraph& g1, const HorizontalGraph& g2, int samples = 2001);

// Tensor-product Hermite interpolation on a rectangle: node data are the
// partials d^{i+j}/dx^i dy^j for i, j <= K.
class VerticalField {
 public:
  VerticalField() = default;
  VerticalField(const Rect& r, int nx, int ny, int K);  // xi == 0
  // jet(p) must have order >= 2K
  static VerticalField sample(const Rect& r, int nx, int ny, int K, const std::function<Taylor2(const Vec2&)>& jet);

  const Rect& rect() const { return r_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int K() const { return K_; }
  Vec2 node(int ix, int iy) const { return {r_.x0 + ix * hx_, r_.y0 + iy * hy_}; }
  double& d(int ix, int iy, int i, int j) { return d_[index(ix, iy) + i * (K_ + 1) + j]; }
  double d(int ix, int iy, int i, int j) const { return d_[index(ix, iy) + i * (K_ + 1) + j]; }

  double eval(const Vec2& p) const;
  Taylor2 series(const Vec2& p, int order) const;
  double sup_abs(int per_cell = 3) const;

 private:
  int index(int ix, int iy) const { return (iy * (nx_ + 1) + ix) * (K_ + 1) * (K_ + 1); }
  Rect r_{-1, 1, -1, 1};
  int nx_ = 1, ny_ = 1, K_ = 1;
  double hx_ = 2, hy_ = 2;
  std::vector<double> d_;
};

double sup_distance(const VerticalField& a, const VerticalField& b, int per_cell = 3);

}  // namespace pesin
