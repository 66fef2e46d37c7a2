#pragma once
// Dense polynomial arithmetic used as an independent oracle for the jet engine.
// Everything here is naive expansion; no Taylor machinery.

#include <map>
#include <utility>
#include <vector>

namespace oracle {

struct Poly1 {
  std::vector<double> c;
  double coef(int k) const { return k < static_cast<int>(c.size()) ? c[k] : 0.0; }
  void set(int k, double v) {
    if (k >= static_cast<int>(c.size())) c.resize(k + 1, 0.0);
    c[k] = v;
  }
  double operator()(double x) const {
    double s = 0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) s = s * x + *it;
    return s;
  }
};

inline Poly1 mul(const Poly1& a, const Poly1& b) {
  Poly1 r;
  for (std::size_t i = 0; i < a.c.size(); ++i)
    for (std::size_t j = 0; j < b.c.size(); ++j) r.set(i + j, r.coef(i + j) + a.c[i] * b.c[j]);
  return r;
}

inline Poly1 add(const Poly1& a, const Poly1& b) {
  Poly1 r = a;
  for (std::size_t j = 0; j < b.c.size(); ++j) r.set(j, r.coef(j) + b.c[j]);
  return r;
}

inline Poly1 compose(const Poly1& p, const Poly1& q) {
  Poly1 r, pw;
  pw.set(0, 1);
  for (std::size_t k = 0; k < p.c.size(); ++k) {
    Poly1 term = pw;
    for (auto& v : term.c) v *= p.c[k];
    r = add(r, term);
    pw = mul(pw, q);
  }
  return r;
}

// p(x0 + s) as a polynomial in s
inline Poly1 shift(const Poly1& p, double x0) {
  Poly1 lin;
  lin.set(0, x0);
  lin.set(1, 1);
  return compose(p, lin);
}

struct Poly2 {
  std::map<std::pair<int, int>, double> c;
  double coef(int i, int j) const {
    auto it = c.find({i, j});
    return it == c.end() ? 0.0 : it->second;
  }
  void set(int i, int j, double v) { c[{i, j}] = v; }
  double operator()(double x, double y) const {
    double s = 0;
    for (auto& [k, v] : c) {
      double t = v;
      for (int a = 0; a < k.first; ++a) t *= x;
      for (int b = 0; b < k.second; ++b) t *= y;
      s += t;
    }
    return s;
  }
};

inline Poly2 mul(const Poly2& a, const Poly2& b) {
  Poly2 r;
  for (auto& [ka, va] : a.c)
    for (auto& [kb, vb] : b.c) {
      const int i = ka.first + kb.first, j = ka.second + kb.second;
      r.set(i, j, r.coef(i, j) + va * vb);
    }
  return r;
}

inline Poly2 add(const Poly2& a, const Poly2& b) {
  Poly2 r = a;
  for (auto& [k, v] : b.c) r.set(k.first, k.second, r.coef(k.first, k.second) + v);
  return r;
}

inline Poly2 scale(Poly2 a, double s) {
  for (auto& [k, v] : a.c) v *= s;
  return a;
}

// p(u(x,y), v(x,y))
inline Poly2 compose(const Poly2& p, const Poly2& u, const Poly2& v) {
  int maxi = 0, maxj = 0;
  for (auto& [k, val] : p.c) maxi = std::max(maxi, k.first), maxj = std::max(maxj, k.second);
  std::vector<Poly2> up(maxi + 1), vp(maxj + 1);
  up[0].set(0, 0, 1);
  vp[0].set(0, 0, 1);
  for (int i = 1; i <= maxi; ++i) up[i] = mul(up[i - 1], u);
  for (int j = 1; j <= maxj; ++j) vp[j] = mul(vp[j - 1], v);
  Poly2 r;
  for (auto& [k, val] : p.c) r = add(r, scale(mul(up[k.first], vp[k.second]), val));
  return r;
}

inline Poly2 shift(const Poly2& p, double x0, double y0) {
  Poly2 u, v;
  u.set(0, 0, x0);
  u.set(1, 0, 1);
  v.set(0, 0, y0);
  v.set(0, 1, 1);
  return compose(p, u, v);
}

}  // namespace oracle
