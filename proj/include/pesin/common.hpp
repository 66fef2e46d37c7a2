#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace pesin {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

// Bad input (shape, range, mismatch). Maps to exit code 1 in the CLI.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A mathematical premise of a construction does not hold (regularity,
// cone invariance, reg cond, ...). Maps to exit code 2.
struct PremiseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Rect {
  double x0 = -1, x1 = 1, y0 = -1, y1 = 1;
  bool contains(const Vec2& p) const { return p.x() >= x0 && p.x() <= x1 && p.y() >= y0 && p.y() <= y1; }
  static Rect box(double l) { return {-l, l, -l, l}; }
};

inline constexpr double kPi = 3.14159265358979323846;

// operator norm and smallest singular value of a 2x2 matrix
inline double op_norm(const Mat2& a) {
  Eigen::JacobiSVD<Mat2> svd(a);
  return svd.singularValues()(0);
}
inline double min_sv(const Mat2& a) {
  Eigen::JacobiSVD<Mat2> svd(a);
  return svd.singularValues()(1);
}

inline Vec2 unit(double t) { return {std::cos(t), std::sin(t)}; }

// Running mean that is exact when all samples are equal.
struct RunningMean {
  double mean = 0;
  long count = 0;
  void add(double v) {
    ++count;
    mean += (v - mean) / static_cast<double>(count);
  }
};

}  // namespace pesin
