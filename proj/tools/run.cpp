#include "run.hpp"

#include "pesin/cocycle.hpp"
#include "pesin/homogeneity.hpp"
#include "pesin/manifolds.hpp"
#include "pesin/qlinearize.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

namespace pesin::cli {

namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------- config

[[noreturn]] void bad(const std::string& path, const std::string& what) { throw InputError("config " + path + ": " + what); }

const Json& field(const Json& o, const std::string& key, const std::string& path) {
  if (!o.contains(key)) bad(path + "/" + key, "missing");
  return o.at(key);
}

void only_keys(const Json& o, const std::string& path, std::initializer_list<const char*> keys) {
  if (!o.is_object()) bad(path, "expected an object");
  const std::set<std::string> ok(keys.begin(), keys.end());
  for (auto it = o.begin(); it != o.end(); ++it)
    if (!ok.count(it.key())) bad(path + "/" + it.key(), "unknown field");
}

double number(const Json& o, const std::string& key, const std::string& path, double lo, double hi, bool open = true) {
  const Json& v = field(o, key, path);
  if (!v.is_number()) bad(path + "/" + key, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x) || (open ? !(x > lo && x < hi) : !(x >= lo && x <= hi))) {
    std::ostringstream os;
    os << "value " << x << " outside " << (open ? "(" : "[") << lo << ", " << hi << (open ? ")" : "]");
    bad(path + "/" + key, os.str());
  }
  return x;
}

double number_or(const Json& o, const std::string& key, const std::string& path, double lo, double hi, double def,
                 bool open = true) {
  return o.contains(key) ? number(o, key, path, lo, hi, open) : def;
}

int integer(const Json& o, const std::string& key, const std::string& path, int lo, int hi) {
  const Json& v = field(o, key, path);
  if (!v.is_number_integer()) bad(path + "/" + key, "expected an integer");
  const long long x = v.get<long long>();
  if (x < lo || x > hi) bad(path + "/" + key, "value " + std::to_string(x) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return static_cast<int>(x);
}

int integer_or(const Json& o, const std::string& key, const std::string& path, int lo, int hi, int def) {
  return o.contains(key) ? integer(o, key, path, lo, hi) : def;
}

Vec2 point(const Json& o, const std::string& key, const std::string& path) {
  const Json& v = field(o, key, path);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) bad(path + "/" + key, "expected [x, y]");
  return {v[0].get<double>(), v[1].get<double>()};
}

// a number in range, or "fit"
void number_or_fit(const Json& o, const std::string& key, const std::string& path, double lo, double hi) {
  const Json& v = field(o, key, path);
  if (v.is_string() && v.get<std::string>() == "fit") return;
  if (!v.is_number()) bad(path + "/" + key, "expected a number or \"fit\"");
  if (key == "L")
    number(o, key, path, lo, hi, false);
  else
    number(o, key, path, lo, hi);
}

Flavor flavor_of(const Json& o, const std::string& path) {
  if (!o.contains("flavor")) return Flavor::Vertical;
  const Json& v = o.at("flavor");
  if (v == "vertical") return Flavor::Vertical;
  if (v == "horizontal") return Flavor::Horizontal;
  bad(path + "/flavor", "expected \"vertical\" or \"horizontal\"");
}

Rect domain_of(const Json& m, double def) {
  if (!m.contains("domain")) return Rect::box(def);
  const Json& d = m.at("domain");
  if (!d.is_array() || d.size() != 4) bad("/map/domain", "expected [x0, x1, y0, y1]");
  for (const Json& x : d)
    if (!x.is_number()) bad("/map/domain", "expected numbers");
  const Rect r{d[0].get<double>(), d[1].get<double>(), d[2].get<double>(), d[3].get<double>()};
  if (!(r.x0 < r.x1 && r.y0 < r.y1)) bad("/map/domain", "empty rectangle");
  return r;
}

std::vector<Monomial> monomials(const Json& m, const std::string& key) {
  const Json& v = field(m, key, "/map");
  if (!v.is_array() || v.empty()) bad("/map/" + key, "expected a nonempty list of [i, j, c]");
  std::vector<Monomial> out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const Json& t = v[k];
    const std::string p = "/map/" + key + "/" + std::to_string(k);
    if (!t.is_array() || t.size() != 3 || !t[0].is_number_integer() || !t[1].is_number_integer() || !t[2].is_number())
      bad(p, "expected [i, j, c] with integer powers");
    if (t[0].get<int>() < 0 || t[1].get<int>() < 0) bad(p, "negative power");
    out.push_back({t[0].get<int>(), t[1].get<int>(), t[2].get<double>()});
  }
  return out;
}

PlanarMap build_map(const Json& m) {
  const std::string kind = field(m, "kind", "/map").is_string() ? m.at("kind").get<std::string>() : "";
  if (kind == "henon") {
    only_keys(m, "/map", {"kind", "a", "b", "domain"});
    const double a = number(m, "a", "/map", -1e6, 1e6), b = number(m, "b", "/map", -1e6, 1e6);
    if (b == 0) bad("/map/b", "must be nonzero (the map is not invertible)");
    return henon(a, b, domain_of(m, 10));
  }
  if (kind == "linear") {
    only_keys(m, "/map", {"kind", "matrix", "shift", "domain"});
    const Json& a = field(m, "matrix", "/map");
    if (!a.is_array() || a.size() != 2 || !a[0].is_array() || !a[1].is_array() || a[0].size() != 2 || a[1].size() != 2)
      bad("/map/matrix", "expected [[a, b], [c, d]]");
    Mat2 A;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        if (!a[i][j].is_number()) bad("/map/matrix", "expected numbers");
        A(i, j) = a[i][j].get<double>();
      }
    if (std::abs(A.determinant()) < 1e-300) bad("/map/matrix", "singular");
    const Vec2 s = m.contains("shift") ? point(m, "shift", "/map") : Vec2::Zero();
    return affine_map(A, s, domain_of(m, 1e6));
  }
  if (kind == "polynomial") {
    only_keys(m, "/map", {"kind", "f", "g", "domain"});
    return polynomial_map(monomials(m, "f"), monomials(m, "g"), domain_of(m, 10));
  }
  bad("/map/kind", "expected \"henon\", \"linear\" or \"polynomial\"");
}

const std::vector<std::string> kTasks{"certify", "atlas", "stable", "center", "appendix-bounds", "homogeneity", "cocycle-study"};

const std::vector<std::string> kAtlasChecks{"i", "ii", "iii", "iv", "residual", "radii"};

std::set<std::string> tasks_of(const Json& cfg) {
  std::set<std::string> t;
  for (const Json& x : cfg.at("tasks")) t.insert(x.get<std::string>());
  // dependencies: certify before atlas before the manifolds
  if (t.count("stable") || t.count("center") || t.count("appendix-bounds")) t.insert("atlas");
  if (t.count("atlas")) t.insert("certify");
  return t;
}

}  // namespace

Json parse_config(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    // the message already carries line and column
    throw InputError(std::string("config: ") + e.what());
  }
}

Json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("config: cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate_config(const Json& cfg) {
  only_keys(cfg, "", {"map", "orbit", "regularity", "r", "tolerances", "tasks", "output", "atlas", "stable", "center",
                      "appendix_bounds", "homogeneity", "cocycle_study"});
  build_map(field(cfg, "map", ""));
  const Json& o = field(cfg, "orbit", "");
  only_keys(o, "/orbit", {"seed", "M", "N", "transient"});
  point(o, "seed", "/orbit");
  integer(o, "M", "/orbit", 0, 100000);
  integer(o, "N", "/orbit", 0, 100000);
  integer_or(o, "transient", "/orbit", 0, 10000000, 0);
  const Json& p = field(cfg, "regularity", "");
  only_keys(p, "/regularity", {"lambda", "rho", "eps", "L", "flavor"});
  number_or_fit(p, "lambda", "/regularity", 0, 1);
  number_or_fit(p, "rho", "/regularity", 0, 1);
  number_or_fit(p, "eps", "/regularity", 0, 1);
  number_or_fit(p, "L", "/regularity", 1, 1e300);
  flavor_of(p, "/regularity");
  integer_or(cfg, "r", "", 2, 6, 2);
  if (cfg.contains("tolerances")) {
    only_keys(cfg.at("tolerances"), "/tolerances", {"residual", "stitch"});
    number_or(cfg.at("tolerances"), "residual", "/tolerances", 0, 1, 0);
    number_or(cfg.at("tolerances"), "stitch", "/tolerances", 0, 1, 0);
  }
  const Json& t = field(cfg, "tasks", "");
  if (!t.is_array() || t.empty()) bad("/tasks", "expected a nonempty list");
  for (std::size_t i = 0; i < t.size(); ++i)
    if (!t[i].is_string() || std::find(kTasks.begin(), kTasks.end(), t[i].get<std::string>()) == kTasks.end())
      bad("/tasks/" + std::to_string(i), "unknown task");
  if (cfg.contains("output") && !cfg.at("output").is_string()) bad("/output", "expected a string");
  if (cfg.contains("atlas")) {
    only_keys(cfg.at("atlas"), "/atlas", {"grid", "cells", "assert"});
    integer_or(cfg.at("atlas"), "grid", "/atlas", 2, 101, 7);
    integer_or(cfg.at("atlas"), "cells", "/atlas", 2, 64, 6);
    if (cfg.at("atlas").contains("assert")) {
      const Json& a = cfg.at("atlas").at("assert");
      if (!a.is_array()) bad("/atlas/assert", "expected a list");
      for (std::size_t i = 0; i < a.size(); ++i)
        if (!a[i].is_string() || std::find(kAtlasChecks.begin(), kAtlasChecks.end(), a[i].get<std::string>()) == kAtlasChecks.end())
          bad("/atlas/assert/" + std::to_string(i), "expected one of i, ii, iii, iv, residual, radii");
    }
  }
  if (cfg.contains("stable")) {
    const Json& s = cfg.at("stable");
    only_keys(s, "/stable", {"n_max", "samples", "rate_n", "rate_samples"});
    integer_or(s, "n_max", "/stable", 0, 100000, 0);
    const int n = integer_or(s, "samples", "/stable", 3, 1000001, 401);
    if (n % 2 == 0) bad("/stable/samples", "must be odd");
    integer_or(s, "rate_n", "/stable", 1, 100000, 20);
    integer_or(s, "rate_samples", "/stable", 1, 100000, 101);
  }
  if (cfg.contains("center")) {
    const Json& c = cfg.at("center");
    only_keys(c, "/center", {"curve", "a", "k", "order", "n_max", "samples", "expect_discrepancy"});
    if (c.contains("curve") && c.at("curve") != "center" && c.at("curve") != "planted")
      bad("/center/curve", "expected \"center\" or \"planted\"");
    number_or(c, "a", "/center", -1e6, 1e6, 1);
    integer_or(c, "k", "/center", 2, 12, 3);
    integer_or(c, "order", "/center", 1, 8, 4);
    integer_or(c, "n_max", "/center", 1, 100000, 1);
    const int n = integer_or(c, "samples", "/center", 3, 100001, 201);
    if (n % 2 == 0) bad("/center/samples", "must be odd");
    integer_or(c, "expect_discrepancy", "/center", -1, 8, -1);
  }
  if (cfg.contains("appendix_bounds")) only_keys(cfg.at("appendix_bounds"), "/appendix_bounds", {});
  if (cfg.contains("homogeneity")) {
    const Json& h = cfg.at("homogeneity");
    only_keys(h, "/homogeneity", {"eta", "count", "transient", "N_cap", "seed", "simplified"});
    number(h, "eta", "/homogeneity", 0, 1);
    integer_or(h, "count", "/homogeneity", 1, 10000000, 10000);
    integer_or(h, "transient", "/homogeneity", 0, 10000000, 1000);
    integer_or(h, "N_cap", "/homogeneity", 1, 4096, 64);
    if (h.contains("seed")) point(h, "seed", "/homogeneity");
    if (h.contains("simplified")) {
      const Json& s = h.at("simplified");
      only_keys(s, "/homogeneity/simplified", {"eps", "M", "N", "L", "flavor"});
      number(s, "eps", "/homogeneity/simplified", 0, 1);
      integer_or(s, "M", "/homogeneity/simplified", 0, 100000, 20);
      integer_or(s, "N", "/homogeneity/simplified", 0, 100000, 20);
      if (s.contains("L")) number_or_fit(s, "L", "/homogeneity/simplified", 1, 1e300);
      flavor_of(s, "/homogeneity/simplified");
    }
  }
  if (cfg.contains("cocycle_study")) {
    const Json& c = cfg.at("cocycle_study");
    only_keys(c, "/cocycle_study", {"seeds", "N", "rho", "eps", "first_seed"});
    integer_or(c, "seeds", "/cocycle_study", 1, 100000, 50);
    integer_or(c, "N", "/cocycle_study", 1, 100000, 60);
    number_or(c, "rho", "/cocycle_study", 0, 1, 0.5);
    number_or(c, "eps", "/cocycle_study", 0, 1, 0.05);
    integer_or(c, "first_seed", "/cocycle_study", 0, 1 << 30, 1);
  }
}

// ---------------------------------------------------------------- running

namespace {

Json value(double v, const char* provenance) { return Json{{"value", v}, {"provenance", provenance}}; }

Json vec(const Vec2& v) { return Json::array({v.x(), v.y()}); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Csv {
 public:
  Csv(const fs::path& p, std::initializer_list<const char*> header) : out_(p) {
    if (!out_) throw InputError("cannot write " + p.string());
    bool first = true;
    for (const char* h : header) {
      out_ << (first ? "" : ",") << h;
      first = false;
    }
    out_ << '\n';
  }
  void row(std::initializer_list<double> v) {
    bool first = true;
    for (double x : v) {
      out_ << (first ? "" : ",") << fmt(x);
      first = false;
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

// a group of tasks sharing state; failures and files collected per group
struct Outcome {
  int code = 0;  // max severity: 0 < 2 (premise / assertion) < 1 (error) by rank
  std::vector<std::string> failures;
  std::vector<std::string> files;
  Json tasks = Json::object();
  Json timings = Json::object();

  void fail(const std::string& what) {
    failures.push_back(what);
    if (code == 0) code = 2;
  }
  void error(const std::string& what) {
    failures.push_back(what);
    code = 1;
  }
};

template <class F>
void timed(Outcome& o, const std::string& name, F&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  o.timings[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errs(n);
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errs[i] = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

// runs fn, mapping exceptions onto the outcome
void guarded(Outcome& o, const std::string& name, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const PremiseError& e) {
    o.tasks[name] = Json{{"status", "premise failure"}, {"error", e.what()}};
    o.fail(name + ": " + e.what());
    o.code = std::max(o.code, 2) == 1 ? 1 : 2;
  } catch (const InputError& e) {
    o.tasks[name] = Json{{"status", "input error"}, {"error", e.what()}};
    o.error(name + ": " + e.what());
  } catch (const std::exception& e) {
    o.tasks[name] = Json{{"status", "internal error"}, {"error", e.what()}};
    o.error(name + ": " + e.what());
  }
}

struct Setup {
  const Json& cfg;
  const PlanarMap& f;
  fs::path out;
  int workers = 1;
  std::set<std::string> tasks;
};

// certify -> atlas -> stable, center, appendix-bounds
void orbit_chain(const Setup& s, Outcome& o) {
  const Json& cfg = s.cfg;
  const Json& oc = cfg.at("orbit");
  const Json& pc = cfg.at("regularity");
  const int r = cfg.value("r", 2);
  const double tol = cfg.contains("tolerances") ? cfg.at("tolerances").value("residual", 1e-8) : 1e-8;

  Vec2 seed = point(oc, "seed", "/orbit");
  for (int i = 0; i < oc.value("transient", 0); ++i) seed = s.f.eval(seed);
  const OrbitSegment orb = orbit(s.f, seed, oc.at("M").get<int>(), oc.at("N").get<int>());
  o.tasks["orbit"] = Json{{"p0", vec(orb.point(0))}, {"M", orb.M}, {"N", orb.N}, {"truncated", orb.truncated}};
  if (orb.M < 1 || orb.N < 1) throw InputError("orbit: the segment needs M, N >= 1 (got " + std::to_string(orb.M) + ", " + std::to_string(orb.N) + ")");

  RegularityParams p;
  p.flavor = flavor_of(pc, "/regularity");
  p.M = orb.M;
  p.N = orb.N;
  const DirectionField ev = p.flavor == Flavor::Vertical ? vertical_field(orb) : horizontal_field(orb);
  const bool fit_any = pc.at("lambda").is_string() || pc.at("rho").is_string() || pc.at("eps").is_string();
  RateFit rf;
  if (fit_any) {
    if (p.flavor != Flavor::Vertical) throw InputError("regularity: rate fitting needs the vertical flavor");
    rf = fit_rates(orb, ev, orb.N);
  }
  Json params;
  auto pick = [&](const char* key, double fitted, double floor) {
    const Json& v = pc.at(key);
    if (v.is_string()) {
      params[key] = value(std::max(fitted, floor), "fitted");
      return std::max(fitted, floor);
    }
    params[key] = value(v.get<double>(), "given");
    return v.get<double>();
  };
  p.lambda = pick("lambda", rf.lambda, 0);
  p.rho = pick("rho", rf.rho, 0);
  p.eps = pick("eps", rf.eps, 0.01);
  if (pc.at("L").is_string()) {
    RegularityParams q = p;
    q.L = 1;
    p.L = std::max(1.0, certify(orb, ev, q, 0).min_L * (1 + 1e-9));
    params["L"] = value(p.L, "fitted");
  } else {
    p.L = pc.at("L").get<double>();
    params["L"] = value(p.L, "given");
  }
  params["flavor"] = p.flavor == Flavor::Vertical ? "vertical" : "horizontal";
  params["r"] = r;
  o.tasks["parameters"] = params;

  std::unique_ptr<ChartAtlas> atlas;
  guarded(o, "certify", [&] {
    timed(o, "certify", [&] {
      const RegularityCertificate c = certify(orb, ev, p, 0);
      Json ineq = Json::array();
      Csv csv(s.out / "certify_margins.csv", {"inequality", "n", "value", "lower_margin", "upper_margin"});
      for (int k = 0; k < 4; ++k) {
        const InequalityRecord& rec = c.ineq[k];
        ineq.push_back(Json{{"name", rec.name}, {"pass", rec.pass}, {"log_min_L", rec.log_min_L}});
        for (std::size_t n = 0; n < rec.value.size(); ++n)
          csv.row({double(k), double(n + 1), rec.value[n], rec.lower_margin[n], rec.upper_margin[n]});
      }
      o.files.push_back("certify_margins.csv");
      o.tasks["certify"] = Json{{"status", "done"}, {"pass", c.pass}, {"min_L", value(c.min_L, "evaluated")},
                                {"E", c.E.t}, {"inequalities", ineq}};
      if (!c.pass) o.fail("certify: the orbit is not regular at L = " + fmt(p.L) + " (min L " + fmt(c.min_L) + ")");
    });
  });
  if (!s.tasks.count("atlas") || o.code != 0) return;

  guarded(o, "atlas", [&] {
    timed(o, "atlas", [&] {
      if (p.flavor != Flavor::Vertical) throw InputError("atlas: needs the vertical flavor");
      require_reg_cond(p.lambda, p.rho, p.eps, r);
      ChartOptions opt;
      opt.r = r;
      if (cfg.contains("atlas")) opt.cells = cfg.at("atlas").value("cells", opt.cells);
      atlas = std::make_unique<ChartAtlas>(build_atlas(s.f, orb, ev, p, opt));
      const int grid = cfg.contains("atlas") ? cfg.at("atlas").value("grid", 7) : 7;
      const TheoremReport th = verify_theorem(*atlas, grid);
      const RadiiReport rr = radii_check(*atlas);
      const FrameSequence& fsq = atlas->frames();
      Csv csv(s.out / "radii.csv", {"m", "l_m", "log_K_m"});
      for (int m = -atlas->M(); m <= atlas->N(); ++m) csv.row({double(m), atlas->radius(m), atlas->log_calK(m)});
      Csv tcsv(s.out / "theorem_rows.csv", {"m", "norm_DFm", "diag_x", "diag_y", "diag_x_expected", "diag_y_expected",
                                             "offdiag", "deriv_distance", "skew_K", "conjugacy"});
      for (const TheoremRow& row : th.rows)
        tcsv.row({double(row.m), row.norm_DFm, row.diag.x(), row.diag.y(), row.diag_expected.x(), row.diag_expected.y(),
                  row.offdiag, row.deriv_distance, row.skew_K, row.conjugacy});
      o.files.push_back("radii.csv");
      o.files.push_back("theorem_rows.csv");
      o.tasks["atlas"] = Json{
          {"status", "done"},
          {"reg_cond", Json::array({fsq.reg_cond[0], fsq.reg_cond[1]})},
          {"C", value(atlas->C(), "fitted")},
          {"omega", value(atlas->omega(), "evaluated")},
          {"kappa", value(fsq.kappa, "evaluated")},
          {"lambda_check", value(atlas->lambda_check(), "evaluated")},
          {"norm_DF_Cr", value(atlas->norm_DF_Cr(), "evaluated")},
          {"l_0", value(atlas->radius(0), "evaluated")},
          {"theorem", Json{{"pass", th.pass()},
                           {"margin_i", th.margin_i},
                           {"margin_ii", th.margin_ii},
                           {"margin_iii", th.margin_iii},
                           {"margin_iv", th.margin_iv},
                           {"max_residual", th.max_residual},
                           {"chart_norm_ratio", th.chart_norm_ratio}}},
          {"radii", Json{{"pass", rr.pass}, {"max_law_error", rr.max_law_error}, {"ball_worst", rr.ball_worst}}}};
      std::set<std::string> checks(kAtlasChecks.begin(), kAtlasChecks.end());
      if (cfg.contains("atlas") && cfg.at("atlas").contains("assert")) checks = cfg.at("atlas").at("assert").get<std::set<std::string>>();
      Json asserted = Json::array();
      for (const std::string& c : kAtlasChecks)
        if (checks.count(c)) asserted.push_back(c);
      o.tasks["atlas"]["asserted"] = asserted;
      // ii and iv are equalities up to rounding
      const std::tuple<const char*, double, double> tm[4] = {
          {"i", th.margin_i, 0}, {"ii", th.margin_ii, -1e-8}, {"iii", th.margin_iii, 0}, {"iv", th.margin_iv, -1e-8}};
      for (const auto& [name, m, floor] : tm)
        if (checks.count(name) && m < floor) o.fail("atlas: theorem margin " + std::string(name) + " negative (" + fmt(m) + ")");
      if (checks.count("residual") && th.max_residual > tol) o.fail("atlas: max residual " + fmt(th.max_residual) + " above " + fmt(tol));
      if (checks.count("radii") && !rr.pass) o.fail("atlas: radii check failed");
    });
  });
  if (!atlas) return;

  if (s.tasks.count("stable"))
    guarded(o, "stable", [&] {
      timed(o, "stable", [&] {
        const Json sc = cfg.value("stable", Json::object());
        const int n_max = sc.value("n_max", std::min(atlas->N(), 6));
        const int rate_n = sc.value("rate_n", std::min(atlas->N(), 20));
        const StrongStableReport rep = strong_stable(*atlas, n_max, sc.value("samples", 401), rate_n, sc.value("rate_samples", 101));
        Csv csv(s.out / "stable_curve.csv", {"s", "x", "y", "tx", "ty", "curvature", "piece"});
        for (const CurveSample& c : rep.curve.samples) csv.row({c.s, c.q.x(), c.q.y(), c.tangent.x(), c.tangent.y(), c.curvature, double(c.source)});
        o.files.push_back("stable_curve.csv");
        Json jet = Json::array();
        for (const Vec2& v : rep.curve.jet) jet.push_back(vec(v));
        o.tasks["stable"] = Json{{"status", "done"},
                                 {"pass", rep.pass},
                                 {"n_max", rep.n_max},
                                 {"reach", Json::array({rep.curve.s_min(), rep.curve.s_max()})},
                                 {"stitch_mismatch", rep.stitch_mismatch},
                                 {"nesting_gap", rep.nesting_gap},
                                 {"rate_n", rep.rate_n},
                                 {"rate_samples", rep.rate_samples},
                                 {"rate_margin", rep.rate_margin},
                                 {"piece_half_length", rep.piece_half_length},
                                 {"jet", jet}};
        if (!rep.pass) o.fail("stable: nesting or rate check failed");
      });
    });

  if (s.tasks.count("center"))
    guarded(o, "center", [&] {
      timed(o, "center", [&] {
        const Json cc = cfg.value("center", Json::object());
        const bool planted = cc.value("curve", "center") == "planted";
        const int order = cc.value("order", r + 2);
        const int samples = cc.value("samples", 201);
        const int k = cc.value("k", r + 1);
        const ManifoldCurve g =
            planted ? chart_graph_curve(*atlas, cc.value("a", 1.0), k, samples, order) : center_curve(*atlas, samples, order);
        const CenterJetReport rep = center_jet_compare(*atlas, g, order, cc.value("n_max", atlas->M()));
        Csv csv(s.out / "center_curve.csv", {"s", "x", "y", "tx", "ty", "curvature"});
        for (const CurveSample& c : g.samples) csv.row({c.s, c.q.x(), c.q.y(), c.tangent.x(), c.tangent.y(), c.curvature});
        o.files.push_back("center_curve.csv");
        const int expect = cc.value("expect_discrepancy", planted ? k : -1);
        o.tasks["center"] = Json{{"status", "done"},
                                 {"curve", planted ? "planted" : "center"},
                                 {"frak_r", value(rep.frak_r, "evaluated")},
                                 {"n_checked", rep.n_checked},
                                 {"hypothesis", rep.hypothesis},
                                 {"first_failure_n", rep.first_failure_n},
                                 {"worst_log_margin", rep.worst_log_margin},
                                 {"discrepancy_order", rep.discrepancy_order},
                                 {"discrepancy", rep.discrepancy},
                                 {"expected_discrepancy", expect},
                                 {"growth_holds", rep.growth_holds},
                                 {"n0", rep.n0},
                                 {"n0_predicted", rep.n0_predicted},
                                 {"t0", rep.t0}};
        if (rep.discrepancy_order != expect)
          o.fail("center: discrepancy order " + std::to_string(rep.discrepancy_order) + ", expected " + std::to_string(expect));
        if (!planted && !rep.hypothesis) o.fail("center: hypothesis fails for the center curve");
        if (!rep.growth_holds) o.fail("center: angle growth bound violated");
      });
    });

  if (s.tasks.count("appendix-bounds"))
    guarded(o, "appendix-bounds", [&] {
      timed(o, "appendix-bounds", [&] {
        const BoundsReport jb = jacobian_bounds_check(orb, p);
        const BoundsReport dv = derivative_bounds_check(orb, *atlas, ev.at(0));
        const BoundsReport dh = derivative_bounds_check(orb, *atlas, atlas->frames().frame(0).R.col(0));
        Csv csv(s.out / "appendix_bounds.csv", {"n", "jac_forward", "jac_backward", "ev_forward", "ev_backward", "eh_forward", "eh_backward"});
        const std::size_t rows = std::max(jb.forward_margin.size(), jb.backward_margin.size());
        auto at = [](const std::vector<double>& v, std::size_t i) { return i < v.size() ? v[i] : NAN; };
        for (std::size_t i = 0; i < rows; ++i)
          csv.row({double(i + 1), at(jb.forward_margin, i), at(jb.backward_margin, i), at(dv.forward_margin, i),
                   at(dv.backward_margin, i), at(dh.forward_margin, i), at(dh.backward_margin, i)});
        o.files.push_back("appendix_bounds.csv");
        o.tasks["appendix-bounds"] = Json{{"status", "done"},
                                          {"jacobian_min_margin", jb.min_margin},
                                          {"derivative_min_margin_ev", dv.min_margin},
                                          {"derivative_min_margin_eh", dh.min_margin},
                                          {"pass", jb.pass && dv.pass && dh.pass}};
        if (!(jb.pass && dv.pass && dh.pass)) o.fail("appendix-bounds: a bound fails");
      });
    });
}

void homogeneity_task(const Setup& s, Outcome& o) {
  guarded(o, "homogeneity", [&] {
    timed(o, "homogeneity", [&] {
      const Json& h = s.cfg.at("homogeneity");
      const Vec2 seed = h.contains("seed") ? point(h, "seed", "/homogeneity") : point(s.cfg.at("orbit"), "seed", "/orbit");
      const double eta = h.at("eta").get<double>();
      const int cap = h.value("N_cap", 64);
      const AttractorSample smp = attractor_sample(s.f, seed, h.value("count", 10000), h.value("transient", 1000), cap);
      const HomogenizingReport rep = find_homogenizing_iterate(smp, eta, cap);
      {
        Csv csv(s.out / "birkhoff.csv", {"k", "mean_log_jac"});
        for (std::size_t k = 0; k < rep.birkhoff.size(); ++k) csv.row({double(k + 1), rep.birkhoff[k]});
        Csv t(s.out / "homogeneity_trace.csv", {"n", "sup_log_norm", "inf_log_conorm", "margin_i", "margin_ii"});
        for (std::size_t n = 0; n < rep.sup_log_norm.size(); ++n)
          t.row({double(n + 1), rep.sup_log_norm[n], rep.inf_log_conorm[n], rep.min_margin_i[n], rep.min_margin_ii[n]});
      }
      o.files.push_back("birkhoff.csv");
      o.files.push_back("homogeneity_trace.csv");
      Json j{{"status", "done"},
             {"eta", eta},
             {"lambda_est", value(rep.lambda_est, "evaluated")},
             {"found", rep.found},
             {"N", rep.N},
             {"sample_count", smp.count},
             {"sample_period", smp.period}};
      if (!rep.found) o.fail("homogeneity: no homogenizing iterate up to " + std::to_string(cap));
      if (rep.found && h.contains("simplified")) {
        const Json& sc = h.at("simplified");
        SimplifiedParams sp;
        sp.lambda = std::pow(rep.lambda_est, rep.N);
        sp.eta = eta;
        sp.eps = sc.at("eps").get<double>();
        sp.M = sc.value("M", 20);
        sp.N = sc.value("N", 20);
        sp.flavor = flavor_of(sc, "/homogeneity/simplified");
        const OrbitSegment og = iterate_orbit(orbit_from(s.f, smp.pts[0], sp.M * rep.N, (sp.N + 1) * rep.N), rep.N);
        const DirectionField e = sp.flavor == Flavor::Vertical ? vertical_field(og) : horizontal_field(og);
        const bool fitL = !sc.contains("L") || sc.at("L").is_string();
        sp.L = fitL ? std::max(1.0, simplified_certify(og, e, sp).min_L * (1 + 1e-9)) : sc.at("L").get<double>();
        const SimplifiedCertificate c = simplified_certify(og, e, sp);
        j["simplified"] = Json{{"lambda", value(sp.lambda, "evaluated")},
                               {"L", value(sp.L, fitL ? "fitted" : "given")},
                               {"pass", c.pass},
                               {"min_L", c.min_L},
                               {"L_bar", c.L_bar},
                               {"eps_bar", c.eps_bar},
                               {"full_pass", c.full.pass},
                               {"full_min_L", c.full.min_L},
                               {"measured_eps", c.measured_eps},
                               {"implication", c.implication}};
        if (!c.implication) o.fail("homogeneity: simplified pass without full pass");
      }
      o.tasks["homogeneity"] = j;
    });
  });
}

void cocycle_task(const Setup& s, Outcome& o) {
  guarded(o, "cocycle-study", [&] {
    timed(o, "cocycle-study", [&] {
      const Json c = s.cfg.value("cocycle_study", Json::object());
      const int seeds = c.value("seeds", 50), N = c.value("N", 60), first = c.value("first_seed", 1);
      const double rho = c.value("rho", 0.5), eps = c.value("eps", 0.05);
      struct Row {
        double dom_res, cone, lower, upper, hat_res, check_res, rep_cone, tau_gap;
      };
      std::vector<Row> rows(seeds);
      parallel_for(seeds, s.workers, [&](int i) {
        const std::uint64_t sd = static_cast<std::uint64_t>(first + i);
        const TriangularCocycle up = synthetic_cocycle(sd, N, rho, eps, true);
        const DominatedReport d = dominated_block_diagonalization(up);
        const TransverseReport t = transverse_repelling_direction(up);
        const TriangularCocycle lo = synthetic_cocycle(sd + 1000, N, rho, eps, false);
        const RepellerReport rr = repeller_normalization(lo);
        rows[i] = {d.max_residual, t.min_cone_margin, t.min_lower_margin, t.min_upper_margin,
                   rr.max_hat_residual, rr.max_check_residual, rr.min_cone_margin, rr.omega_hat - rr.max_tau};
      });
      Csv csv(s.out / "cocycle_study.csv", {"seed", "dominated_residual", "cone_margin", "sandwich_lower", "sandwich_upper",
                                             "repeller_hat_residual", "repeller_check_residual", "repeller_cone_margin", "tau_gap"});
      int good = 0;
      double worst_res = 0;
      for (int i = 0; i < seeds; ++i) {
        const Row& r = rows[i];
        csv.row({double(first + i), r.dom_res, r.cone, r.lower, r.upper, r.hat_res, r.check_res, r.rep_cone, r.tau_gap});
        worst_res = std::max({worst_res, r.dom_res, r.hat_res, r.check_res});
        good += r.dom_res <= 1e-10 && r.cone > 0 && r.lower >= 0 && r.upper >= 0 && r.hat_res <= 1e-10 && r.check_res <= 1e-10 &&
                r.rep_cone > 0 && r.tau_gap >= 0;
      }
      o.files.push_back("cocycle_study.csv");
      o.tasks["cocycle-study"] = Json{{"status", "done"}, {"seeds", seeds}, {"passed", good}, {"worst_residual", worst_res}};
      if (good != seeds) o.fail("cocycle-study: " + std::to_string(seeds - good) + " seeds fail");
    });
  });
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

}  // namespace

RunResult analyze(const Json& cfg, const std::string& out_dir, int workers) {
  validate_config(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  const PlanarMap f = build_map(cfg.at("map"));
  fs::create_directories(out_dir);
  const Setup s{cfg, f, fs::path(out_dir), std::max(1, workers), tasks_of(cfg)};

  // independent groups; each owns its outcome, assembly below is in fixed order
  std::vector<std::pair<std::string, std::function<void(Outcome&)>>> groups;
  if (s.tasks.count("certify"))
    groups.emplace_back("orbit", [&](Outcome& o) {
      guarded(o, "orbit", [&] { orbit_chain(s, o); });
    });
  if (s.tasks.count("homogeneity")) {
    if (!cfg.contains("homogeneity")) throw InputError("config /homogeneity: missing (needed by the homogeneity task)");
    groups.emplace_back("homogeneity", [&](Outcome& o) { homogeneity_task(s, o); });
  }
  if (s.tasks.count("cocycle-study")) groups.emplace_back("cocycle", [&](Outcome& o) { cocycle_task(s, o); });

  std::vector<Outcome> outs(groups.size());
  parallel_for(static_cast<int>(groups.size()), s.workers, [&](int i) { groups[i].second(outs[i]); });

  RunResult res;
  Json tasks = Json::object(), failures = Json::array(), files = Json::array(), timings = Json::object();
  int code = 0;
  std::vector<std::string> all_files;
  for (const Outcome& o : outs) {
    for (auto it = o.tasks.begin(); it != o.tasks.end(); ++it) tasks[it.key()] = it.value();
    for (const auto& x : o.failures) failures.push_back(x);
    for (const auto& x : o.files) all_files.push_back(x);
    for (auto it = o.timings.begin(); it != o.timings.end(); ++it) timings[it.key()] = it.value();
    if (o.code == 1) code = 1;
    else if (o.code == 2 && code == 0) code = 2;
  }
  std::sort(all_files.begin(), all_files.end());
  for (const auto& x : all_files) files.push_back(x);
  res.exit_code = code;
  Json requested = Json::array();
  for (const std::string& t : kTasks)
    if (s.tasks.count(t)) requested.push_back(t);
  res.report = Json{{"schema", 1},
                    {"status", code == 0 ? "ok" : code == 2 ? "failed" : "error"},
                    {"exit_code", code},
                    {"tasks_run", requested},
                    {"config", cfg},
                    {"results", tasks},
                    {"failures", failures},
                    {"files", files}};
  res.meta = Json{{"finished_utc", utc_now()},
                  {"workers", s.workers},
                  {"wall_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()},
                  {"task_seconds", timings}};
  std::ofstream(s.out / "report.json") << res.report.dump(2) << '\n';
  std::ofstream(s.out / "meta.json") << res.meta.dump(2) << '\n';
  return res;
}

Json fit(const Json& cfg) {
  validate_config(cfg);
  const PlanarMap f = build_map(cfg.at("map"));
  const Json& oc = cfg.at("orbit");
  Vec2 seed = point(oc, "seed", "/orbit");
  for (int i = 0; i < oc.value("transient", 0); ++i) seed = f.eval(seed);
  const OrbitSegment orb = orbit(f, seed, oc.at("M").get<int>(), oc.at("N").get<int>());
  if (orb.N < 10) throw InputError("fit: needs an orbit with N >= 10");
  const RateFit r = fit_rates(orb, vertical_field(orb), orb.N);
  return Json{{"schema", 1}, {"lambda", r.lambda}, {"rho", r.rho}, {"eps_suggested", r.eps}, {"N", orb.N}, {"p0", vec(orb.point(0))}};
}

}  // namespace pesin::cli
