#include "elhom/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "elhom/errors.hpp"

namespace elhom {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_abs(const std::vector<double>& a) {
  double m = 0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

struct Trial {
  double a = 0;
  double f = 0;
  double dphi = 0;
  std::vector<double> x;
  std::vector<double> g;
};

// Strong-Wolfe line search along d (bracketing phase followed by zoom).
class LineSearch {
 public:
  LineSearch(const Objective& obj, const std::vector<double>& x0, double f0, const std::vector<double>& d,
             double dphi0, int& evals, const MarginFn& margin, double min_margin)
      : obj_(obj), x0_(x0), f0_(f0), d_(d), dphi0_(dphi0), evals_(evals), margin_(margin), min_margin_(min_margin) {
    tol_f_ = 1e-14 * std::max(1.0, std::abs(f0));
  }

  bool run(double a_init, Trial& out) {
    Trial prev{0.0, f0_, dphi0_, {}, {}};
    double a = a_init;
    for (int i = 0; i < 40; ++i) {
      Trial t = eval(a);
      if (!std::isfinite(t.f) || t.f > armijo(a) || (i > 0 && t.f >= prev.f)) return zoom(prev, t, out);
      if (std::abs(t.dphi) <= -kC2 * dphi0_) {
        out = std::move(t);
        return true;
      }
      if (t.dphi >= 0) return zoom(t, prev, out);
      prev = std::move(t);
      a *= 2.0;
    }
    out = std::move(prev);
    return out.a > 0;
  }

 private:
  static constexpr double kC1 = 1e-4;
  static constexpr double kC2 = 0.9;

  double armijo(double a) const { return f0_ + kC1 * a * dphi0_ + tol_f_; }

  Trial eval(double a) {
    Trial t;
    t.a = a;
    t.x = x0_;
    for (std::size_t i = 0; i < t.x.size(); ++i) t.x[i] += a * d_[i];
    if (margin_ && margin_(t.x) < min_margin_) {
      t.f = std::numeric_limits<double>::infinity();
    } else {
      t.f = obj_(t.x, t.g);
      ++evals_;
    }
    t.dphi = std::isfinite(t.f) ? dot(t.g, d_) : std::numeric_limits<double>::infinity();
    return t;
  }

  bool zoom(Trial lo, Trial hi, Trial& out) {
    for (int i = 0; i < 40; ++i) {
      const double w = hi.a - lo.a;
      double a = 0.5 * (lo.a + hi.a);
      if (std::isfinite(hi.f)) {
        // Minimizer of the quadratic through (lo.f, lo.dphi) and hi.f.
        const double denom = 2.0 * (hi.f - lo.f - lo.dphi * w);
        if (denom > 0) a = lo.a - lo.dphi * w * w / denom;
      }
      const double lo_b = std::min(lo.a, hi.a), hi_b = std::max(lo.a, hi.a);
      const double margin = 0.1 * (hi_b - lo_b);
      a = std::clamp(a, lo_b + margin, hi_b - margin);
      Trial t = eval(a);
      if (!std::isfinite(t.f) || t.f > armijo(a) || t.f >= lo.f) {
        hi = std::move(t);
      } else {
        if (std::abs(t.dphi) <= -kC2 * dphi0_) {
          out = std::move(t);
          return true;
        }
        if (t.dphi * (hi.a - lo.a) >= 0) hi = std::move(lo);
        lo = std::move(t);
      }
      if (std::abs(hi.a - lo.a) <= 1e-16 * std::max(1.0, std::abs(lo.a))) break;
    }
    // Accept a sufficient-decrease point without the curvature condition.
    if (lo.a > 0 && lo.f < f0_) {
      out = std::move(lo);
      return true;
    }
    return false;
  }

  const Objective& obj_;
  const std::vector<double>& x0_;
  double f0_;
  const std::vector<double>& d_;
  double dphi0_;
  int& evals_;
  const MarginFn& margin_;
  double min_margin_;
  double tol_f_;
};

}  // namespace

LbfgsResult lbfgs(const Objective& objective, std::vector<double> x0, const LbfgsOptions& opt) {
  require(opt.memory >= 1 && opt.max_iter >= 0 && opt.grad_scale > 0, "invalid L-BFGS options");
  LbfgsResult res;
  std::vector<double> g;
  double f = objective(x0, g);
  res.evaluations = 1;
  res.x = std::move(x0);
  res.f = f;
  if (!std::isfinite(f)) {
    res.status = "infeasible_start";
    res.grad_norm = std::numeric_limits<double>::infinity();
    return res;
  }
  res.grad_norm = max_abs(g) / opt.grad_scale;

  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;
  std::deque<double> f_hist{f};
  const std::size_t n = res.x.size();
  std::vector<double> d(n), alpha(opt.memory);
  bool restarted = false;

  for (int it = 0;; ++it) {
    if (res.grad_norm <= opt.grad_tol) {
      res.converged = true;
      res.status = "converged";
      break;
    }
    if (it >= opt.max_iter) {
      res.status = "max_iter";
      break;
    }
    // Two-loop recursion.
    for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
    const int m = static_cast<int>(s_hist.size());
    for (int j = m - 1; j >= 0; --j) {
      alpha[j] = rho_hist[j] * dot(s_hist[j], d);
      for (std::size_t i = 0; i < n; ++i) d[i] -= alpha[j] * y_hist[j][i];
    }
    double a_init = 1.0;
    if (m > 0) {
      const double gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
      for (double& v : d) v *= gamma;
    } else {
      a_init = 1.0 / std::max(std::sqrt(dot(g, g)), 1e-300);
    }
    for (int j = 0; j < m; ++j) {
      const double b = rho_hist[j] * dot(y_hist[j], d);
      for (std::size_t i = 0; i < n; ++i) d[i] += (alpha[j] - b) * s_hist[j][i];
    }
    double dphi0 = dot(g, d);
    if (!(dphi0 < 0)) {
      s_hist.clear(), y_hist.clear(), rho_hist.clear();
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
      dphi0 = dot(g, d);
      a_init = 1.0 / std::max(std::sqrt(-dphi0), 1e-300);
    }

    const double min_margin = opt.margin ? opt.fraction_to_boundary * opt.margin(res.x) : 0.0;
    LineSearch ls(objective, res.x, f, d, dphi0, res.evaluations, opt.margin, min_margin);
    Trial t;
    if (!ls.run(a_init, t)) {
      if (!restarted && m > 0) {
        // Retry once along steepest descent with fresh memory.
        s_hist.clear(), y_hist.clear(), rho_hist.clear();
        restarted = true;
        --it;
        continue;
      }
      res.status = "line_search_stall";
      break;
    }
    restarted = false;
    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = t.x[i] - res.x[i];
      y[i] = t.g[i] - g[i];
    }
    const double sy = dot(s, y);
    if (sy > 1e-16 * std::sqrt(dot(s, s) * dot(y, y))) {
      if (static_cast<int>(s_hist.size()) == opt.memory) s_hist.pop_front(), y_hist.pop_front(), rho_hist.pop_front();
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
    }
    res.x = std::move(t.x);
    g = std::move(t.g);
    f = t.f;
    res.f = f;
    res.grad_norm = max_abs(g) / opt.grad_scale;
    res.iterations = it + 1;

    f_hist.push_back(f);
    if (static_cast<int>(f_hist.size()) > opt.stall_window + 1) f_hist.pop_front();
    if (static_cast<int>(f_hist.size()) == opt.stall_window + 1 &&
        f_hist.front() - f_hist.back() <= opt.stall_tol * std::max(1.0, std::abs(f)) &&
        res.grad_norm > opt.grad_tol) {
      res.status = "stalled";
      break;
    }
  }
  return res;
}

CgResult conjugate_gradient(const LinearOperator& apply, const std::vector<double>& b, std::vector<double> x0,
                            const std::vector<double>& diagonal, const Projector& project, const CgOptions& opt) {
  const std::size_t n = b.size();
  if (x0.empty()) x0.assign(n, 0.0);
  if (x0.size() != n || (!diagonal.empty() && diagonal.size() != n))
    throw LengthMismatch("conjugate_gradient: size mismatch");
  CgResult res;
  res.x = std::move(x0);
  if (project) project(res.x);

  std::vector<double> r(n), z(n), p(n), ap(n);
  apply(res.x, ap);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
  if (project) project(r);
  auto energy = [&] {
    double e = 0;
    for (std::size_t i = 0; i < n; ++i) e -= 0.5 * res.x[i] * (b[i] + r[i]);
    return e;
  };
  auto precondition = [&] {
    for (std::size_t i = 0; i < n; ++i) z[i] = diagonal.empty() || diagonal[i] <= 0 ? r[i] : r[i] / diagonal[i];
    if (project) project(z);
  };
  res.energy_history.push_back(energy());
  const double bnorm = std::sqrt(dot(b, b));
  const double target = opt.tol * std::max(bnorm, 1e-300);
  res.residual = std::sqrt(dot(r, r));
  if (res.residual <= target) {
    res.converged = true;
    return res;
  }
  precondition();
  p = z;
  double rz = dot(r, z);
  for (int it = 0; it < opt.max_iter; ++it) {
    apply(p, ap);
    if (project) project(ap);
    const double pap = dot(p, ap);
    if (pap < -1e-10 * std::sqrt(dot(p, p) * dot(ap, ap)))
      throw IndefiniteForm("conjugate_gradient: negative Rayleigh quotient " + std::to_string(pap / dot(p, p)));
    if (pap <= 0) break;
    const double a = rz / pap;
    for (std::size_t i = 0; i < n; ++i) {
      res.x[i] += a * p[i];
      r[i] -= a * ap[i];
    }
    res.iterations = it + 1;
    res.energy_history.push_back(energy());
    res.residual = std::sqrt(dot(r, r));
    if (res.residual <= target) {
      res.converged = true;
      return res;
    }
    precondition();
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  throw NotConverged("conjugate_gradient: residual " + std::to_string(res.residual) + " after " +
                     std::to_string(res.iterations) + " iterations");
}

}  // namespace elhom
