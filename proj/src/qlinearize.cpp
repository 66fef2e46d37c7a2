#include "pesin/qlinearize.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pesin {

namespace {

std::string num(double x) {
  std::ostringstream s;
  s << x;
  return s.str();
}

double angle_between(const Vec2& a, const Vec2& b) {
  const double c = std::abs(a.dot(b)) / (a.norm() * b.norm());
  const double s = std::abs(a.x() * b.y() - a.y() * b.x()) / (a.norm() * b.norm());
  return std::atan2(s, c);
}

// 1 on [0, t0], 0 beyond t1, degree-9 smoothstep in between (C^4 at both ends)
Taylor1 profile(const Taylor1& t, double t0, double t1) {
  const int n = t.order();
  if (t.value() <= t0) return Taylor1(n, 1.0);
  if (t.value() >= t1) return Taylor1(n, 0.0);
  const Taylor1 s = (t - Taylor1(n, t0)) * (1.0 / (t1 - t0));
  // 126 s^5 - 420 s^6 + 540 s^7 - 315 s^8 + 70 s^9
  static constexpr double c[] = {126, -420, 540, -315, 70};
  Taylor1 acc(n, c[4]);
  for (int k = 3; k >= 0; --k) acc = acc * s + Taylor1(n, c[k]);
  Taylor1 s5 = s * s;
  s5 = s5 * s5 * s;
  return Taylor1(n, 1.0) - s5 * acc;
}

}  // namespace

Vec2 check_diagonal(double lambda, double rho, double eps, int m) {
  const double e = m >= 0 ? eps : -eps;
  return {std::pow(lambda, 1 - e) / std::pow(rho, 1 + 3 * e), std::pow(lambda, 1 - e) / std::pow(rho, 2 * e)};
}

std::array<double, 2> reg_cond_values(double lambda, double rho, double eps, int r) {
  const double c1 = ((r + 1) - eps * (r + 3)) * std::log(rho) - (1 + eps) * r * std::log(lambda);
  const double c2 = (1 - eps) * (r + 1) * std::log(lambda) - (r + eps * (2 - r)) * std::log(rho);
  return {std::exp(c1), std::exp(c2)};
}

void require_reg_cond(double lambda, double rho, double eps, int r) {
  const auto c = reg_cond_values(lambda, rho, eps, r);
  if (c[0] >= 1) throw PremiseError("reg cond violated: rho^{(r+1)-eps(r+3)} / lambda^{(1+eps)r} = " + num(c[0]) + " >= 1");
  if (c[1] >= 1) throw PremiseError("reg cond violated: lambda^{(1-eps)(r+1)} / rho^{r+eps(2-r)} = " + num(c[1]) + " >= 1");
}

FrameSequence build_affine_frames(const OrbitSegment& orb, const DirectionField& ev, const RegularityParams& p,
                                  const ChartOptions& opt) {
  const int r = opt.r;
  const bool require_certificate = opt.require_certificate;
  validate(p);
  if (r < 1 || r > 5) throw InputError("atlas: r must lie in 1..5");
  if (p.M > orb.M || p.N > orb.N || -p.M < ev.lo || p.N > ev.hi) throw InputError("atlas: orbit shorter than the window");
  if (p.N < 1) throw InputError("atlas: need N >= 1");
  if (opt.require_reg_cond) require_reg_cond(p.lambda, p.rho, p.eps, r);

  FrameSequence fs;
  const auto rc = reg_cond_values(p.lambda, p.rho, p.eps, r);
  fs.reg_cond[0] = rc[0];
  fs.reg_cond[1] = rc[1];
  fs.params = p;
  fs.r = r;
  fs.M = p.M;
  fs.N = p.N;
  fs.certificate = certify(orb, ev, p, 0);
  if (require_certificate && !fs.certificate.pass)
    throw PremiseError("regularity certificate fails: minimal L " + num(fs.certificate.min_L) + " exceeds L " + num(p.L));

  const int M = p.M, N = p.N;
  const double lam = p.lambda, rho = p.rho, eps = p.eps;
  for (int m = -M; m < N; ++m) {
    fs.norm_dF = std::max(fs.norm_dF, op_norm(orb.deriv(m)));
    fs.norm_dF_inv = std::max(fs.norm_dF_inv, op_norm(orb.deriv(m).inverse()));
  }
  const double rr = std::pow(rho, 1 - eps);
  fs.omega = rr / (1 - rr) * fs.norm_dF_inv * fs.norm_dF;
  fs.kappa = p.L * std::pow(rho, -2 * eps) * std::pow(lam, 1 - eps) * fs.norm_dF_inv * std::pow(1 + fs.omega, 4);
  fs.lambda_check = std::pow(lam, 1 + eps) * (1 - std::pow(lam, eps));

  // frames with E^v as second column, signs making a_m, b_m > 0
  std::vector<Vec2> v(M + N + 1), w(M + N + 1);
  v[0] = ev.at(-M).normalized();
  w[0] = Vec2(v[0].y(), -v[0].x());
  for (int m = -M; m < N; ++m) {
    const int k = m + M;
    Vec2 vn = ev.at(m + 1).normalized();
    if (vn.dot(orb.deriv(m) * v[k]) < 0) vn = -vn;
    Vec2 wn(vn.y(), -vn.x());
    if (wn.dot(orb.deriv(m) * w[k]) < 0) wn = -wn;
    v[k + 1] = vn;
    w[k + 1] = wn;
  }
  fs.frames.resize(M + N + 1);
  for (int m = -M; m <= N; ++m) {
    AffineFrame& a = fs.frames[m + M];
    a.m = m;
    a.p = orb.point(m);
    a.R.col(0) = w[m + M];
    a.R.col(1) = v[m + M];
  }
  for (int m = -M; m < N; ++m) {
    const Mat2 A = fs.frame(m + 1).R.transpose() * orb.deriv(m) * fs.frame(m).R;
    fs.max_frame_residual = std::max(fs.max_frame_residual, std::abs(A(0, 1)) / op_norm(A));
    fs.A.push_back(A);
  }
  auto a_of = [&](int m) { return fs.A[m + M](0, 0); };
  auto b_of = [&](int m) { return fs.A[m + M](1, 1); };

  // scalings in log space, anchored at m = 0
  AffineFrame* fr = fs.frames.data() + M;
  for (int n = 1; n <= N; ++n) {
    fr[n].log_sigma = fr[n - 1].log_sigma + (1 - eps) * std::log(lam) - std::log(b_of(n - 1));
    fr[n].log_sigma_hat = fr[n - 1].log_sigma_hat + std::log(b_of(n - 1)) - std::log(a_of(n - 1)) - (1 + eps) * std::log(rho);
    fr[n].log_rho_bar = -2 * eps * n * std::log(rho);
  }
  for (int n = 1; n <= M; ++n) {
    fr[-n].log_sigma = fr[-n + 1].log_sigma + std::log(b_of(-n)) - (1 + eps) * std::log(lam);
    fr[-n].log_sigma_hat = fr[-n + 1].log_sigma_hat + (1 - eps) * std::log(rho) + std::log(a_of(-n)) - std::log(b_of(-n));
    fr[-n].log_rho_bar = -2 * eps * n * std::log(rho);
  }
  auto scale = [&](int m) {
    const AffineFrame& a = fs.frame(m);
    const double s = std::exp(a.log_sigma + a.log_rho_bar);
    return Mat2{{s * std::exp(a.log_sigma_hat), 0}, {0, s}};
  };
  // A_bar, then the tilt of E^ = A_bar...A_bar(E^0) from m = -M
  for (int m = -M; m < N; ++m) fs.A_bar.push_back(scale(m + 1) * fs.A[m + M] * scale(m).inverse());
  fs.frames[0].tau = 0;
  for (int m = -M; m < N; ++m) {
    const Mat2& B = fs.A_bar[m + M];
    const Vec2 img = B * Vec2(1.0, fs.frame(m).tau);
    fs.frames[m + 1 + M].tau = img.y() / img.x();
  }
  for (const AffineFrame& a : fs.frames) fs.max_tau = std::max(fs.max_tau, std::abs(a.tau));
  if (!(fs.max_tau < fs.omega))
    throw PremiseError("cone invariance fails: |tau| = " + num(fs.max_tau) + " is not below omega = " + num(fs.omega));

  auto tilt = [&](int m) { return Mat2{{1, 0}, {-fs.frame(m).tau, 1}}; };
  for (int m = -M; m < N; ++m) {
    const Mat2 Ac = tilt(m + 1) * fs.A_bar[m + M] * tilt(m).inverse();
    fs.A_check.push_back(Ac);
    const Vec2 d = check_diagonal(lam, rho, eps, m);
    const double res = std::max({std::abs(Ac(0, 0) - d.x()) / d.x(), std::abs(Ac(1, 1) - d.y()) / d.y(),
                                 std::abs(Ac(0, 1)), std::abs(Ac(1, 0))});
    fs.max_check_residual = std::max(fs.max_check_residual, res);
  }
  for (int m = -M; m <= N; ++m) {
    AffineFrame& a = fs.frames[m + M];
    a.lin = fs.kappa * tilt(m) * scale(m) * a.R.transpose();
    a.lin_inv = a.lin.inverse();
  }
  return fs;
}

// ---------------------------------------------------------------- chart steps

ChartStep::ChartStep(const PlanarMap& f, const AffineFrame& from, const AffineFrame& to, const Mat2& a_check,
                     double radius, double blend)
    : zi_(from.lin_inv), z1_(to.lin), a_(a_check), r0_(std::sqrt(2.0) * radius), r1_(std::sqrt(2.0) * radius * (1 + blend)) {
  taylor_ = f.series(from.p, kMaxOrder);
  taylor_.f.at(0, 0) -= to.p.x();
  taylor_.g.at(0, 0) -= to.p.y();
}

Series2Map ChartStep::local(const Vec2& z, int order) const {
  // the Taylor model at p_m, re-expanded at w0 = Z_m^{-1} z - p_m
  const Series2Map w = Series2Map::affine(order, zi_ * z, zi_);
  const Taylor2 &X = w.f, &Y = w.g;
  std::array<Taylor2, kMaxOrder + 1> xp, yp;
  xp[0] = Taylor2(order, 1.0);
  yp[0] = Taylor2(order, 1.0);
  for (int k = 1; k <= kMaxOrder; ++k) {
    xp[k] = xp[k - 1] * X;
    yp[k] = yp[k - 1] * Y;
  }
  Series2Map out{Taylor2(order), Taylor2(order)};
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i <= kMaxOrder; ++i)
      for (int j = 0; i + j <= kMaxOrder; ++j) {
        const double a = taylor_[c].at(i, j);
        if (a != 0.0) out[c] += a * (xp[i] * yp[j]);
      }
  return apply_affine(z1_, out);
}

Vec2 ChartStep::eval(const Vec2& z) const {
  const double t = z.squaredNorm();
  const Vec2 lin = a_ * z;
  if (t >= r1_ * r1_) return lin;
  const Vec2 w = zi_ * z;
  const Vec2 g = z1_ * Vec2(taylor_.f.eval(w.x(), w.y()), taylor_.g.eval(w.x(), w.y()));
  if (t <= r0_ * r0_) return g;
  const double b = profile(Taylor1(0, t), r0_ * r0_, r1_ * r1_).value();
  return lin + b * (g - lin);
}

Series2Map ChartStep::series(const Vec2& z, int order) const {
  const double t = z.squaredNorm();
  const Series2Map lin = Series2Map::affine(order, a_ * z, a_);
  if (t >= r1_ * r1_) return lin;
  Series2Map g = local(z, order);
  if (t <= r0_ * r0_) return g;
  const Taylor2 T = Taylor2::var_x(order, z.x()) * Taylor2::var_x(order, z.x()) +
                    Taylor2::var_y(order, z.y()) * Taylor2::var_y(order, z.y());
  const Taylor1 pr = profile(Taylor1::variable(order, t), r0_ * r0_, r1_ * r1_);
  std::array<double, kMaxOrder + 1> d{};
  for (int k = 0; k <= order; ++k) d[k] = pr.deriv(k);
  const Taylor2 b = Taylor2::apply(std::span<const double>(d.data(), order + 1), T);
  return {lin.f + b * (g.f - lin.f), lin.g + b * (g.g - lin.g)};
}

Vec2 ChartStep::inverse(const Vec2& z) const {
  Vec2 x = a_.inverse() * z;
  for (int it = 0; it < 50; ++it) {
    const Series2Map s = series(x, 1);
    const Vec2 dx = s.linear().inverse() * (z - s.value());
    x += dx;
    if (dx.norm() <= 1e-16 * std::max(r0_, x.norm())) break;
  }
  return x;
}

// ---------------------------------------------------------------- atlas

ChartAtlas::ChartAtlas(const PlanarMap& f, FrameSequence frames, const ChartOptions& opt)
    : f_(f), fs_(std::move(frames)), opt_(opt) {
  const int M = fs_.M, N = fs_.N, r = fs_.r;
  if (2 * opt_.K + 1 > kMaxOrder) throw InputError("atlas: Hermite order too high");
  // ||F||_{C^2} and ||DF||_{C^r}, from the jets along the orbit
  for (int m = -M; m < N; ++m) {
    const Series2Map s = f_.series(fs_.frame(m).p, r + 1);
    for (int k = 1; k <= r + 1; ++k) {
      const double v = multilinear_norm(s, k);
      if (k <= 2) norm_c2_ = std::max(norm_c2_, v);
      norm_cr_ = std::max(norm_cr_, v);
    }
  }
  box_check_ = fs_.lambda_check / norm_c2_;
  for (int m = -M; m < N; ++m)
    steps_.push_back(std::make_unique<ChartStep>(f_, fs_.frame(m), fs_.frame(m + 1), fs_.check(m), box_check_, opt_.blend));

  std::vector<const JetMap*> maps;
  for (const auto& s : steps_) maps.push_back(s.get());
  InvariantOptions io;
  io.periodic = false;
  io.r = r;
  io.omega = opt_.rect_omega;
  const double w = box_check_;
  graphs_ = invariant_graphs(maps, HorizontalGraph(-w, w, opt_.cells, opt_.K), io);
  fields_ = invariant_fields(maps, VerticalField(Rect::box(w), opt_.cells, opt_.cells, opt_.K), io);
  for (int m = -M; m <= N; ++m) {
    try {
      psi_.emplace_back(graphs_.g[m + M], fields_.xi[m + M], opt_.rect_omega);
    } catch (const PremiseError& e) {
      throw PremiseError(std::string(e.what()) + " at m = " + std::to_string(m));
    }
  }

  log_calK0_ = 3 * std::log(L()) - 2 * eps() * std::log(rho()) + (1 - eps()) * std::log(lambda()) +
               std::log(fs_.norm_dF_inv) + 5 * std::log(1 + omega());

  // fit C over the C = 1 boxes, which contain the final ones
  for (int m = -M; m <= N; ++m) {
    const double l1 = lambda_check() * std::exp(-log_calK(m));
    const double lK = log_calK(m);
    for (const Vec2& z : grid_points(Rect::box(l1), opt_.norm_grid, opt_.norm_grid)) {
      const Series2Map si = phi_inv_series(m, z, r);
      double ni = 0;
      for (int k = 1; k <= r; ++k) ni = std::max(ni, multilinear_norm(si, k));
      norm_ratio_ = std::max(norm_ratio_, ni / (1 + omega()));
      const Series2Map sp = phi_series(m, si.value(), r);
      double ns = 0;
      for (int s = 0; s < r; ++s) {
        ns = std::max(ns, multilinear_norm(sp, s + 1));
        norm_ratio_ = std::max(norm_ratio_, std::exp(std::log(ns) - (s + 1) * lK));
      }
    }
  }
  while (C_ <= norm_ratio_) C_ *= 2;
}

double ChartAtlas::log_calK(int m) const {
  return log_calK0_ - std::abs(m) * (4 * eps() * std::log(rho()) + 2 * eps() * std::log(lambda()));
}

double ChartAtlas::radius(int m) const { return lambda_check() / C_ * std::exp(-log_calK(m)); }

Vec2 ChartAtlas::phi(int m, const Vec2& q) const { return psi(m).eval(fs_.frame(m).apply(q)); }

Vec2 ChartAtlas::phi_inv(int m, const Vec2& z) const { return fs_.frame(m).unapply(psi(m).inverse(z)); }

Series2Map ChartAtlas::phi_series(int m, const Vec2& q, int order) const {
  const AffineFrame& a = fs_.frame(m);
  const Vec2 z = a.apply(q);
  return compose(psi(m).series(z, order), Series2Map::affine(order, z, a.lin));
}

Series2Map ChartAtlas::phi_inv_series(int m, const Vec2& z, int order) const {
  const AffineFrame& a = fs_.frame(m);
  return apply_affine(a.lin_inv, psi(m).inverse_series(z, order), a.p);
}

Vec2 ChartAtlas::chart_map(int m, const Vec2& z) const { return psi(m + 1).eval(step(m).eval(psi(m).inverse(z))); }

Vec2 ChartAtlas::chart_map_inv(int m, const Vec2& z) const {
  return psi(m).eval(step(m).inverse(psi(m + 1).inverse(z)));
}

Series2Map ChartAtlas::chart_map_series(int m, const Vec2& z, int order) const {
  const Series2Map s0 = psi(m).inverse_series(z, order);
  const Series2Map s1 = compose(step(m).series(s0.value(), order), s0);
  return compose(psi(m + 1).series(s1.value(), order), s1);
}

ChartAtlas build_atlas(const PlanarMap& f, const OrbitSegment& orb, const DirectionField& ev, const RegularityParams& p,
                       const ChartOptions& opt) {
  return ChartAtlas(f, build_affine_frames(orb, ev, p, opt), opt);
}

// ---------------------------------------------------------------- theorem

TheoremReport verify_theorem(const ChartAtlas& atlas, int grid) {
  TheoremReport rep;
  rep.C = atlas.C();
  rep.norm_DF_Cr = atlas.norm_DF_Cr();
  rep.chart_norm_ratio = atlas.chart_norm_ratio();
  const int r = atlas.frames().r;
  rep.margin_i = rep.margin_iii = rep.margin_iv = 1e300;
  rep.margin_ii = 0;
  for (int m = -atlas.M(); m < atlas.N(); ++m) {
    TheoremRow row;
    row.m = m;
    const Rect box = atlas.box(m);
    const double l = atlas.radius(m);
    const Mat2 D0 = atlas.chart_map_series(m, Vec2::Zero(), 1).linear();
    row.diag = {D0(0, 0), D0(1, 1)};
    row.diag_expected = check_diagonal(atlas.lambda(), atlas.rho(), atlas.eps(), m);
    row.offdiag = std::max(std::abs(D0(0, 1)), std::abs(D0(1, 0)));
    for (const Vec2& z : grid_points(box, grid, grid)) {
      const Series2Map S = atlas.chart_map_series(m, z, r);
      for (int k = 1; k <= r; ++k) row.norm_DFm = std::max(row.norm_DFm, multilinear_norm(S, k));
      row.deriv_distance = std::max(row.deriv_distance, op_norm(S.linear() - D0));
      row.y_dependence = std::max(row.y_dependence, std::abs(S.f.at(0, 1)));
      if (std::abs(z.y()) > 1e-9 * l)
        for (int s = 0; s <= r; ++s)
          row.skew_K = std::max(row.skew_K, std::abs(s == 0 ? S.g.value() : S.g.partial(s, 0)) / std::abs(z.y()));
      // conjugacy and invariance of the vertical direction
      const Vec2 q = atlas.phi_inv(m, z);
      const Vec2 fq = atlas.map().eval(q);
      row.conjugacy = std::max(row.conjugacy, (atlas.phi(m + 1, fq) - S.value()).norm());
      const Vec2 ev = atlas.phi_inv_series(m, z, 1).linear() * Vec2(0, 1);
      const Vec2 ev1 = atlas.phi_inv_series(m + 1, atlas.phi(m + 1, fq), 1).linear() * Vec2(0, 1);
      row.vertical_invariance = std::max(row.vertical_invariance, angle_between(atlas.map().jacobian(q) * ev, ev1));
    }
    for (int i = 0; i <= 2 * grid; ++i) {
      const double x = -l + 2 * l * i / (2 * grid);
      row.axis_residual = std::max(row.axis_residual, std::abs(atlas.chart_map(m, {x, 0.0}).y()));
    }
    const double entry = std::max(std::abs(row.diag.x() - row.diag_expected.x()), std::abs(row.diag.y() - row.diag_expected.y()));
    rep.margin_i = std::min(rep.margin_i, rep.norm_DF_Cr - row.norm_DFm);
    rep.margin_ii = std::min(rep.margin_ii, -std::max(row.offdiag, entry));
    rep.margin_iii = std::min(rep.margin_iii, atlas.lambda_check() - row.deriv_distance);
    rep.margin_iv = std::min(rep.margin_iv, rep.norm_DF_Cr - row.skew_K - row.y_dependence);
    rep.max_residual = std::max({rep.max_residual, row.offdiag, entry, row.y_dependence, row.axis_residual, row.conjugacy,
                                 row.vertical_invariance});
    rep.rows.push_back(row);
  }
  return rep;
}

BandReport derivative_bands(const ChartAtlas& atlas, int grid) {
  BandReport rep;
  const double lam = atlas.lambda(), rho = atlas.rho(), eps = atlas.eps();
  rep.alpha_minus = std::pow(lam, 1 + 2 * eps) / std::pow(rho, 1 - 3 * eps);
  rep.alpha_plus = std::pow(lam, 1 - 2 * eps) / std::pow(rho, 1 + 3 * eps);
  rep.beta_minus = std::pow(lam, 1 + 2 * eps) / std::pow(rho, -2 * eps);
  rep.beta_plus = std::pow(lam, 1 - 2 * eps) / std::pow(rho, 2 * eps);
  rep.min_margin = 1e300;
  for (int m = -atlas.M(); m < atlas.N(); ++m)
    for (const Vec2& z : grid_points(atlas.box(m), grid, grid)) {
      const Series2Map S = atlas.chart_map_series(m, z, 1);
      const double fx = std::abs(S.f.at(1, 0)), ey = std::abs(S.g.at(0, 1));
      const double mg = std::min({std::log(fx / rep.alpha_minus), std::log(rep.alpha_plus / fx), std::log(ey / rep.beta_minus),
                                  std::log(rep.beta_plus / ey)});
      ++rep.points;
      if (mg < rep.min_margin) {
        rep.min_margin = mg;
        rep.worst_m = m;
        rep.worst_z = z;
      }
    }
  rep.pass = rep.min_margin > 0;
  return rep;
}

// ---------------------------------------------------------------- distortion

namespace {

double kappa_h_of(const ChartAtlas& a, double l_h) {
  const double lam = a.lambda(), rho = a.rho(), eps = a.eps();
  return std::exp(l_h * a.norm_F_C2() / (std::pow(lam, 1 + 2 * eps) / std::pow(rho, 1 - 3 * eps)));
}

double l_v_of(const ChartAtlas& a) {
  const double lam = a.lambda(), rho = a.rho(), eps = a.eps();
  return a.lambda_check() / (a.C() * std::exp(a.log_calK(0)) * (1 - std::pow(rho, -2 * eps) * std::pow(lam, 1 - 2 * eps)));
}

double kappa_v_of(const ChartAtlas& a, double l_h) {
  const double lam = a.lambda(), rho = a.rho(), eps = a.eps();
  const double e = l_h / (std::pow(lam, 1 + 2 * eps) / std::pow(rho, 1 - 3 * eps)) +
                   l_v_of(a) / (std::pow(lam, 1 + 2 * eps) * std::pow(rho, 2 * eps));
  return std::exp(e * a.norm_F_C2());
}

double inf_norm(const Vec2& z) { return std::max(std::abs(z.x()), std::abs(z.y())); }

// D F^n_m at z by chaining the chart maps; false if the orbit leaves the boxes
bool composed_derivative(const ChartAtlas& a, int m, int n, const Vec2& z, Mat2& out) {
  Series2Map s = Series2Map::identity(1, z);
  for (int i = 0; i < n; ++i) {
    if (inf_norm(s.value()) > a.radius(m + i) * (1 + 1e-12)) return false;
    s = compose(a.chart_map_series(m + i, s.value(), 1), s);
  }
  out = s.linear();
  return inf_norm(s.value()) <= a.radius(m + n) * (1 + 1e-12);
}

}  // namespace

double distortion_l_h(const ChartAtlas& atlas) {
  double best = 0;
  for (int n = 1; n < 100000; ++n) {
    const double v = 2 * n * atlas.lambda_check() / (atlas.C() * std::exp(atlas.log_calK(n)));
    best = std::max(best, v);
    if (v < 0.5 * best) break;
  }
  return best;
}

DistortionReport composed_distortion(const ChartAtlas& atlas, int m, int n, int grid) {
  if (n < 1 || m < -atlas.M() || m + n > atlas.N()) throw InputError("composed_distortion: window too short");
  DistortionReport rep;
  rep.m = m;
  rep.n = n;
  rep.l_h = distortion_l_h(atlas);
  rep.l_v = l_v_of(atlas);
  rep.kappa_h = kappa_h_of(atlas, rep.l_h);
  rep.kappa_v = kappa_v_of(atlas, rep.l_h);
  const double lam = atlas.lambda(), rho = atlas.rho(), eps = atlas.eps();
  const double ap = std::pow(lam, 1 - 2 * eps) / std::pow(rho, 1 + 3 * eps);
  const double bp = std::pow(lam, 1 - 2 * eps) / std::pow(rho, 2 * eps);
  double ln = 0;
  for (int i = 0; i < n; ++i) ln += std::pow(ap, i);
  rep.gamma_bound = ln * std::pow(bp, n - 1) * std::exp(-atlas.log_calK(m));

  Mat2 D0;
  if (!composed_derivative(atlas, m, n, Vec2::Zero(), D0)) throw InputError("composed_distortion: the center leaves the boxes");
  const Region reg = neighborhood(atlas, {Neighborhood::TruncatedForward, m, n});
  for (const Vec2& z : grid_points(reg.box, grid, grid)) {
    Mat2 D;
    ++rep.points;
    if (!composed_derivative(atlas, m, n, z, D)) {
      ++rep.exited;
      continue;
    }
    rep.max_log_alpha = std::max(rep.max_log_alpha, std::abs(std::log(D(0, 0) / D0(0, 0))));
    rep.max_log_beta = std::max(rep.max_log_beta, std::abs(std::log(D(1, 1) / D0(1, 1))));
    rep.gamma = std::max(rep.gamma, std::abs(D(1, 0)));
  }
  rep.margin_h = 1 - rep.max_log_alpha / std::log(rep.kappa_h);
  rep.margin_v = 1 - rep.max_log_beta / std::log(rep.kappa_v);
  return rep;
}

// ---------------------------------------------------------------- chart consistency

ConsistencyReport chart_consistency(const ChartAtlas& atlas, int m, int grid, int n) {
  ConsistencyReport rep;
  const double l_h = distortion_l_h(atlas);
  rep.kappa_h = kappa_h_of(atlas, l_h);
  rep.kappa_v = kappa_v_of(atlas, l_h);
  const Mat2 J0 = atlas.phi_inv_series(m, Vec2::Zero(), 1).linear();
  const double v0 = (J0 * Vec2(0, 1)).norm(), h0 = (J0 * Vec2(1, 0)).norm();
  for (const Vec2& z : grid_points(atlas.box(m), grid, grid)) {
    const Mat2 J = atlas.phi_inv_series(m, z, 1).linear();
    const double rv = v0 / (J * Vec2(0, 1)).norm(), rh = h0 / (J * Vec2(1, 0)).norm();
    rep.min_ratio_v = std::min(rep.min_ratio_v, rv);
    rep.max_ratio_v = std::max(rep.max_ratio_v, rv);
    rep.min_ratio_h = std::min(rep.min_ratio_h, rh);
    rep.max_ratio_h = std::max(rep.max_ratio_h, rh);
    ++rep.points;
  }
  // sub-orbits from the forward truncated box
  const int steps = std::min(n, atlas.N() - m);
  if (steps >= 1) {
    const Region reg = neighborhood(atlas, {Neighborhood::TruncatedForward, m, steps});
    const int g = std::max(3, grid / 4);
    Vec2 eh0 = J0 * Vec2(1, 0), ev0 = J0 * Vec2(0, 1);
    std::vector<Vec2> ph(steps + 1), pv(steps + 1);
    {
      Vec2 p = atlas.frames().frame(m).p;
      for (int i = 0; i <= steps; ++i) {
        ph[i] = eh0;
        pv[i] = ev0;
        const Mat2 D = atlas.map().jacobian(p);
        eh0 = D * eh0;
        ev0 = D * ev0;
        p = atlas.map().eval(p);
      }
    }
    for (const Vec2& z : grid_points(reg.box, g, g)) {
      Vec2 q = atlas.phi_inv(m, z);
      const Mat2 J = atlas.phi_inv_series(m, z, 1).linear();
      Vec2 eh = J * Vec2(1, 0), ev = J * Vec2(0, 1);
      const double nh = eh.norm(), nv = ev.norm();
      for (int i = 1; i <= steps; ++i) {
        const Mat2 D = atlas.map().jacobian(q);
        eh = D * eh;
        ev = D * ev;
        q = atlas.map().eval(q);
        rep.max_log_h = std::max(rep.max_log_h, std::abs(std::log((eh.norm() / nh) / (ph[i].norm() / ph[0].norm()))));
        rep.max_log_v = std::max(rep.max_log_v, std::abs(std::log((ev.norm() / nv) / (pv[i].norm() / pv[0].norm()))));
      }
    }
  }
  const double s2 = std::sqrt(2.0);
  rep.pass = rep.min_ratio_v >= 1 / s2 && rep.max_ratio_v <= s2 && rep.min_ratio_h >= 1 / s2 && rep.max_ratio_h <= s2 &&
             rep.max_log_h <= std::log(2 * rep.kappa_h) && rep.max_log_v <= std::log(2 * rep.kappa_v);
  return rep;
}

// ---------------------------------------------------------------- alignment

AlignmentReport alignment_check(const ChartAtlas& atlas, const Vec2& q0, const Vec2& direction, int n, AlignMode mode) {
  AlignmentReport rep;
  rep.mode = mode;
  rep.n = n;
  const double lam = atlas.lambda(), rho = atlas.rho(), eps = atlas.eps(), w = atlas.omega();
  const double C2L2 = atlas.C() * atlas.C() * atlas.L() * atlas.L();
  const double l_h = distortion_l_h(atlas);
  const Vec2 u = direction.normalized();
  const Vec2 z0 = atlas.phi(0, q0);
  const Mat2 DPhi0 = atlas.phi_series(0, q0, 1).linear();
  if (inf_norm(z0) > atlas.radius(0)) {
    rep.note = "q0 outside U_0";
    return rep;
  }
  if (mode == AlignMode::Vertical) {
    if (n > atlas.N()) throw InputError("alignment: n exceeds the forward window");
    const double kh = kappa_h_of(atlas, l_h);
    Vec2 q = q0, e = u;
    for (int i = 0; i < n; ++i) {
      e = atlas.map().jacobian(q) * e;
      q = atlas.map().eval(q);
      if (inf_norm(atlas.phi(i + 1, q)) > atlas.radius(i + 1)) {
        rep.note = "orbit leaves the regular neighborhoods at i = " + std::to_string(i + 1);
        return rep;
      }
    }
    rep.nu = e.norm();
    const double grow = (1 - 7 * eps) * n * std::log(rho) - (1 + 4 * eps) * n * std::log(lam);
    rep.premise_bound = std::exp(-grow) / (kh * std::pow(2 + w, 3) * C2L2);
    rep.premise = rep.nu < rep.premise_bound;
    rep.bound = kh * (1 + w) * C2L2 * std::exp(grow) * rep.nu;
    rep.angle = angle_between(DPhi0 * u, Vec2(0, 1));
  } else {
    if (n > atlas.M()) throw InputError("alignment: n exceeds the backward window");
    const double kv = kappa_v_of(atlas, l_h);
    Vec2 q = q0, e = u;
    for (int i = 0; i < n; ++i) {
      q = atlas.map().inverse(q);
      e = atlas.map().jacobian(q).inverse() * e;
      if (inf_norm(atlas.phi(-i - 1, q)) > atlas.radius(-i - 1)) {
        rep.note = "orbit leaves the regular neighborhoods at i = -" + std::to_string(i + 1);
        return rep;
      }
    }
    rep.nu = e.norm();
    // E^h at q_{-n} pushed forward to q_0
    Vec2 h = atlas.phi_inv_series(-n, atlas.phi(-n, q), 1).linear() * Vec2(1, 0);
    for (int i = 0; i < n; ++i) {
      h = atlas.map().jacobian(q) * h;
      q = atlas.map().eval(q);
    }
    const double grow = (1 - 4 * eps) * n * std::log(lam) - 6 * eps * n * std::log(rho);
    rep.premise_bound = std::exp(-grow) / (kv * std::pow(2 + w, 3) * C2L2);
    rep.premise = rep.nu < rep.premise_bound;
    rep.bound = kv * (1 + w) * C2L2 * std::exp(grow) * rep.nu;
    rep.angle = angle_between(DPhi0 * u, DPhi0 * h);
    rep.note = "horizontal bound taken symmetric to the vertical one";
  }
  if (!rep.premise) rep.note = "premise fails: skipped";
  rep.pass = rep.premise && rep.angle <= rep.bound;
  return rep;
}

// ---------------------------------------------------------------- neighborhoods

bool Region::contains(const Vec2& z) const {
  if (!(std::abs(z.x()) < box.x1 && std::abs(z.y()) < box.y1)) return false;
  return a == 0 || std::abs(z.y()) < a * std::pow(std::abs(z.x()), omega);
}

double e_plus(const ChartAtlas& a) {
  return std::max(1.0, std::pow(a.lambda(), 1 - 2 * a.eps()) / std::pow(a.rho(), 1 + 3 * a.eps()));
}

double e_minus(const ChartAtlas& a) {
  return std::max(1.0, std::pow(a.rho(), 1 - 3 * a.eps()) / std::pow(a.lambda(), 1 + 2 * a.eps()));
}

double pinch_threshold(double lambda, double rho, double eps) {
  return std::log(std::pow(lambda, 1 + 4 * eps) * std::pow(rho, 6 * eps)) /
         std::log(std::pow(lambda, 1 + 4 * eps) / std::pow(rho, 1 - 7 * eps));
}

Region neighborhood(const ChartAtlas& atlas, const NeighborhoodSpec& s) {
  Region r;
  const double lm = atlas.radius(s.m);
  switch (s.kind) {
    case Neighborhood::Full:
      r.box = Rect::box(lm);
      break;
    case Neighborhood::TruncatedForward: {
      const int k = std::max(std::abs(s.m), std::abs(s.m + s.n));
      const double w = std::pow(e_plus(atlas), -s.n) * atlas.radius(k);
      r.box = {-w, w, -lm, lm};
      break;
    }
    case Neighborhood::TruncatedBackward:
    case Neighborhood::Pinched: {
      const int k = std::max(std::abs(s.m), std::abs(s.m - s.n));
      const double w = std::pow(e_minus(atlas), -s.n) * atlas.radius(k);
      r.box = {-w, w, -lm, lm};
      if (s.kind == Neighborhood::Pinched) {
        if (!(s.omega > 1) || !(s.a > 0)) throw InputError("pinched neighborhood: need omega > 1 and a > 0");
        r.omega = s.omega;
        r.a = s.a;
      }
      break;
    }
  }
  return r;
}

namespace {

// points on the boundary of the region, roughly uniform in arclength
std::vector<Vec2> boundary(const Region& reg, int samples) {
  std::vector<Vec2> pts;
  const double w = reg.box.x1, h = reg.box.y1;
  if (reg.a == 0) {
    const double per = 4 * (w + h);
    for (int i = 0; i < samples; ++i) {
      double t = per * i / samples;
      if (t < 2 * w) pts.emplace_back(-w + t, -h);
      else if ((t -= 2 * w) < 2 * h) pts.emplace_back(w, -h + t);
      else if ((t -= 2 * h) < 2 * w) pts.emplace_back(w - t, h);
      else pts.emplace_back(-w, h - (t - 2 * w));
    }
    return pts;
  }
  // pinched: the four arcs |y| = min(a |x|^omega, h) and the two sides
  const double ys = std::min(h, reg.a * std::pow(w, reg.omega));
  const int side = std::max(2, samples / 10), arc = std::max(2, (samples - 2 * side) / 4);
  for (int i = 0; i < arc; ++i) {
    const double x = w * (i + 0.5) / arc;
    const double y = std::min(h, reg.a * std::pow(x, reg.omega));
    for (int sx : {-1, 1})
      for (int sy : {-1, 1}) pts.emplace_back(sx * x, sy * y);
  }
  for (int i = 0; i < side; ++i) {
    const double y = -ys + 2 * ys * i / (side - 1);
    pts.emplace_back(-w, y);
    pts.emplace_back(w, y);
  }
  return pts;
}

}  // namespace

ContainmentReport containment(const ChartAtlas& atlas, const NeighborhoodSpec& s, int samples) {
  ContainmentReport rep;
  rep.region = neighborhood(atlas, s);
  const double lam = atlas.lambda(), rho = atlas.rho(), eps = atlas.eps();
  const bool forward = s.kind == Neighborhood::TruncatedForward;
  if (forward) {
    rep.premise = std::pow(lam, 1 - 4 * eps) / std::pow(rho, 6 * eps) < 1;
    if (s.m + s.n > atlas.N()) throw InputError("containment: n exceeds the forward window");
  } else if (s.kind == Neighborhood::Pinched) {
    rep.premise = s.omega > pinch_threshold(lam, rho, eps);
    if (s.m - s.n < -atlas.M()) throw InputError("containment: n exceeds the backward window");
  } else {
    throw InputError("containment: only truncated-forward and pinched regions carry a containment claim");
  }
  const std::vector<Vec2> pts = boundary(rep.region, samples);
  rep.samples = static_cast<int>(pts.size());
  for (const Vec2& z0 : pts) {
    Vec2 z = z0;
    for (int i = 1; i <= s.n; ++i) {
      const int k = forward ? s.m + i : s.m - i;
      z = forward ? atlas.chart_map(k - 1, z) : atlas.chart_map_inv(k, z);
      const double ratio = inf_norm(z) / atlas.radius(k);
      if (ratio > rep.worst) {
        rep.worst = ratio;
        rep.witness = z0;
        rep.witness_step = i;
      }
    }
  }
  rep.pass = rep.premise && rep.worst <= 1 + 1e-12;
  return rep;
}

PinchClassReport pinching_classification(const ChartAtlas& atlas, int grid) {
  PinchClassReport rep;
  const double lam = atlas.lambda(), rho = atlas.rho(), eps = atlas.eps();
  const double l0 = atlas.radius(0);
  const double w1 = std::log(std::pow(lam, 1 - 2 * eps) / std::pow(rho, 2 * eps)) / std::log(std::pow(lam, 2 * eps) * std::pow(rho, 4 * eps));
  const double w2 = std::log(lam * std::pow(rho, 2 * eps)) / std::log(std::pow(lam, 1 + 4 * eps) / std::pow(rho, 1 - 7 * eps));
  auto logC1 = [&](double w) { return -2 * eps * w * std::log(lam) - 4 * eps * w * std::log(rho) - (w - 1) * std::log(l0); };
  auto logC2 = [&](double w) {
    return (1 - 7 * eps) * w * std::log(rho) - (1 + 4 * eps) * w * std::log(lam) - (w - 1) * std::log(l0);
  };
  const bool shrinking = e_minus(atlas) > 1;
  rep.omega = shrinking ? w2 : w1;
  rep.log_C = shrinking ? logC2(rep.omega) : logC1(rep.omega);
  rep.omega_max = std::max(w1, w2);
  rep.log_C_max = std::max(logC1(rep.omega_max), logC2(rep.omega_max));
  const double w = rep.omega;
  for (const Vec2& z : grid_points(atlas.box(0), grid, grid)) {
    if (z.x() == 0.0 || z.y() == 0.0) continue;
    if (!(inf_norm(z) < l0)) continue;
    int n = 0;
    while (n < atlas.M() && neighborhood(atlas, {Neighborhood::TruncatedBackward, 0, n + 1}).contains(z)) ++n;
    // the backward orbit has to stay in the boxes; stop at the first exit
    Vec2 y = z;
    bool stays = true;
    for (int i = 1; i <= n && stays; ++i) {
      y = atlas.chart_map_inv(-i, y);
      stays = inf_norm(y) < atlas.radius(-i);
    }
    if (!stays) continue;
    ++rep.tested;
    const double ly = std::log(std::abs(z.y())), lx = std::log(std::abs(z.x()));
    if (ly < rep.log_C + w * lx) ++rep.inside;
    if (ly < rep.log_C_max + rep.omega_max * lx) ++rep.inside_max;
  }
  rep.pass = rep.inside == rep.tested;
  return rep;
}

RadiiReport radii_check(const ChartAtlas& atlas, int samples) {
  RadiiReport rep;
  const double step = 4 * atlas.eps() * std::log(atlas.rho()) + 2 * atlas.eps() * std::log(atlas.lambda());
  const double l0 = std::log(atlas.radius(0));
  for (int m = -atlas.M(); m <= atlas.N(); ++m) {
    rep.max_law_error = std::max(rep.max_law_error, std::abs(std::log(atlas.radius(m)) - l0 - std::abs(m) * step));
    const double R = atlas.lambda_check() / (atlas.C() * atlas.C()) * std::exp(-2 * atlas.log_calK(m));
    const Vec2 p = atlas.frames().frame(m).p;
    for (int i = 0; i < samples; ++i) {
      const Vec2 z = atlas.phi(m, p + R * unit(2 * kPi * i / samples));
      rep.ball_worst = std::max(rep.ball_worst, inf_norm(z) / atlas.radius(m));
    }
  }
  rep.pass = rep.max_law_error <= 1e-12 && rep.ball_worst < 1;
  return rep;
}

}  // namespace pesin
