#include "elhom/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "elhom/errors.hpp"

namespace elhom {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double frac(double x) { return x - std::floor(x); }

}  // namespace

std::string to_string(BaseKind kind) { return kind == BaseKind::dist2 ? "dist2" : "stvk"; }

std::string to_string(Microstructure m) {
  switch (m) {
    case Microstructure::homogeneous:
      return "homogeneous";
    case Microstructure::layered:
      return "layered";
    case Microstructure::prestressed_perforated:
      return "prestressed_perforated";
  }
  return "?";
}

BaseKind parse_base_kind(const std::string& name) {
  if (name == "dist2") return BaseKind::dist2;
  if (name == "stvk") return BaseKind::stvk;
  throw InvalidArgument("unknown base density '" + name + "' (expected dist2 or stvk)");
}

Microstructure parse_microstructure(const std::string& name) {
  if (name == "homogeneous") return Microstructure::homogeneous;
  if (name == "layered") return Microstructure::layered;
  if (name == "prestressed_perforated" || name == "prestressed") return Microstructure::prestressed_perforated;
  throw InvalidArgument("unknown microstructure '" + name + "'");
}

double stvk_energy(const Mat& f) {
  const Mat e = transpose(f) * f - Mat::identity(f.dim());
  return 0.25 * norm_sq(e);
}

Mat stvk_stress(const Mat& f) { return f * (transpose(f) * f - Mat::identity(f.dim())); }

Density Density::homogeneous(BaseKind base, int dim) {
  require(dim == 2 || dim == 3, "density dimension must be 2 or 3");
  Density d;
  d.base_ = base;
  d.dim_ = dim;
  return d;
}

Density Density::layered(BaseKind base, int dim, double alpha) {
  require(alpha > 0 && std::isfinite(alpha), "layered density needs alpha > 0");
  Density d = homogeneous(base, dim);
  d.micro_ = Microstructure::layered;
  d.alpha_ = alpha;
  return d;
}

Density Density::prestressed_perforated(BaseKind base, double s, double rho, Phase phase) {
  require(s > 0 && s < 0.5, "prestressed density needs 0 < s < 1/2");
  require(rho > 0 && rho < 0.25, "prestressed density needs 0 < rho < 1/4");
  Density d = homogeneous(base, 3);
  d.micro_ = Microstructure::prestressed_perforated;
  d.s_ = s;
  d.rho_ = rho;
  d.phase_ = phase;
  return d;
}

double Density::growth_p() const { return base_ == BaseKind::dist2 ? 2.0 : 4.0; }

double Density::coercivity_a() const {
  const double base_a = base_ == BaseKind::dist2 ? 1.0 : 4.0;
  switch (micro_) {
    case Microstructure::homogeneous:
      return base_a;
    case Microstructure::layered:
      return base_a * std::max(1.0, 1.0 / alpha_);
    case Microstructure::prestressed_perforated:
      return kInf;
  }
  return kInf;
}

Density Density::restricted_to(Phase phase) const {
  require(micro_ == Microstructure::prestressed_perforated, "only the prestressed composite has phases");
  Density d = *this;
  d.phase_ = phase;
  return d;
}

MaterialPoint Density::material_at(const Point& y) const {
  switch (micro_) {
    case Microstructure::homogeneous:
      return {1.0, false};
    case Microstructure::layered:
      return {frac(y[1]) < 0.5 ? 1.0 : alpha_, false};
    case Microstructure::prestressed_perforated: {
      const double y2 = frac(y[1]), y3 = frac(y[2]);
      if (y3 < 0.5) return {phase_ == Phase::rod ? 0.0 : 1.0, false};
      const double d2 = (y2 - 0.5) * (y2 - 0.5) + (y3 - 0.75) * (y3 - 0.75);
      if (d2 <= rho_ * rho_) return {phase_ == Phase::slab ? 0.0 : 1.0, true};
      return {0.0, false};
    }
  }
  return {1.0, false};
}

Mat Density::prestrain() const {
  Mat s = Mat::identity(dim_);
  s(0, 0) = 1.0 / (1.0 + s_);
  return s;
}

double Density::base_energy(const Mat& f) const {
  return base_ == BaseKind::dist2 ? dist2_SO(f) : stvk_energy(f);
}

double Density::base_energy_and_stress(const Mat& f, Mat& stress) const {
  if (base_ == BaseKind::dist2) return dist2_SO_with_grad(f, stress);
  const Mat e = transpose(f) * f - Mat::identity(f.dim());
  stress = f * e;
  return 0.25 * norm_sq(e);
}

double Density::energy(const MaterialPoint& mp, const Mat& f) const {
  if (mp.weight == 0.0) return 0.0;
  if (mp.prestressed) return mp.weight * base_energy(f * prestrain());
  return mp.weight * base_energy(f);
}

double Density::energy_and_stress(const MaterialPoint& mp, const Mat& f, Mat& stress) const {
  if (mp.weight == 0.0) {
    stress = Mat::zero(f.dim());
    return 0.0;
  }
  double w;
  if (mp.prestressed) {
    const Mat s = prestrain();
    Mat p;
    w = base_energy_and_stress(f * s, p);
    stress = p * s;  // S is symmetric
  } else {
    w = base_energy_and_stress(f, stress);
  }
  stress *= mp.weight;
  return mp.weight * w;
}

double Density::eval(const Point& y, const Mat& f) const {
  require(f.dim() == dim_, "density evaluated with a matrix of the wrong dimension");
  return energy(material_at(y), f);
}

EnergyGradient Density::grad_F(const Point& y, const Mat& f) const {
  require(f.dim() == dim_, "density evaluated with a matrix of the wrong dimension");
  EnergyGradient out;
  const MaterialPoint mp = material_at(y);
  energy_and_stress(mp, f, out.grad);
  if (base_ == BaseKind::dist2 && mp.weight != 0.0) {
    const Mat arg = mp.prestressed ? f * prestrain() : f;
    out.nonsmooth = det(arg) <= 0.0;
  }
  return out;
}

std::string Density::describe() const {
  std::ostringstream os;
  os << to_string(micro_);
  if (micro_ == Microstructure::layered) os << "(alpha=" << alpha_ << ")";
  if (micro_ == Microstructure::prestressed_perforated) {
    os << "(s=" << s_ << ", rho=" << rho_;
    if (phase_ != Phase::all) os << ", phase=" << (phase_ == Phase::slab ? "slab" : "rod");
    os << ")";
  }
  os << " " << to_string(base_) << " dim=" << dim_;
  return os.str();
}

QuadraticField QuadraticField::constant(const SymTensor4& l) {
  QuadraticField q;
  q.dim = l.dim();
  q.sampler = [l](const Point&) { return l; };
  q.bound_c = std::max(0.0, -(-1.0 * l).min_eigenvalue());
  return q;
}

SymTensor4 base_hessian_fd(BaseKind base, int dim, double step) {
  const Density w0 = Density::homogeneous(base, dim);
  const MaterialPoint mp{1.0, false};
  const int n2 = dim * dim;
  auto unit = [dim](int a) { return Mat::unit(dim, a / dim, a % dim); };
  const Mat id = Mat::identity(dim);
  const double w_id = w0.energy(mp, id);
  SymTensor4 l(dim);
  for (int a = 0; a < n2; ++a) {
    const Mat ea = step * unit(a);
    const double daa = (w0.energy(mp, id + ea) - 2.0 * w_id + w0.energy(mp, id - ea)) / (step * step);
    l(a, a) = 0.5 * daa;
    for (int b = a + 1; b < n2; ++b) {
      const Mat eb = step * unit(b);
      const double dab = (w0.energy(mp, id + ea + eb) - w0.energy(mp, id + ea - eb) - w0.energy(mp, id - ea + eb) +
                          w0.energy(mp, id - ea - eb)) /
                         (4.0 * step * step);
      l(a, b) = 0.5 * dab;
      l(b, a) = 0.5 * dab;
    }
  }
  return l;
}

QuadraticField quadratic_term(const Density& w) {
  if (w.microstructure() == Microstructure::prestressed_perforated && w.phase() != Phase::slab)
    throw NotExpandable("the prestressed rod is not stress free at the identity");
  const SymTensor4 base =
      w.base() == BaseKind::stvk ? SymTensor4::sym_projector(w.dim()) : base_hessian_fd(w.base(), w.dim());
  const double max_weight = w.microstructure() == Microstructure::layered ? std::max(1.0, w.alpha()) : 1.0;
  QuadraticField q;
  q.dim = w.dim();
  q.sampler = [w, base](const Point& y) {
    const MaterialPoint mp = w.material_at(y);
    return mp.weight * base;
  };
  q.bound_c = max_weight * std::max(0.0, -(-1.0 * base).min_eigenvalue());
  return q;
}

bool ValidationReport::all_pass() const {
  return std::all_of(conditions.begin(), conditions.end(), [](const ConditionCheck& c) { return c.pass; });
}

const ConditionCheck& ValidationReport::condition(const std::string& name) const {
  for (const auto& c : conditions)
    if (c.name == name) return c;
  throw InvalidArgument("no condition named " + name);
}

ValidationReport validate_class(const Density& w, int sample_count, std::uint64_t seed) {
  require(sample_count > 0, "validate_class needs a positive sample count");
  const int n = w.dim();
  const double p = w.growth_p();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0), cell(0.0, 1.0);
  auto random_point = [&] {
    Point y{0, 0, 0};
    for (int i = 0; i < n; ++i) y[i] = cell(rng);
    return y;
  };
  auto random_matrix = [&] {
    Mat a(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = unif(rng);
    return a;
  };
  const double scales[] = {0.05, 0.3, 1.0, 3.0};
  auto random_deformation = [&](int i) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
      Mat f = Mat::identity(n) + scales[i % 4] * random_matrix();
      if (det(f) > 0) return f;
    }
    return Mat::identity(n);
  };

  ValidationReport rep;
  rep.sample_count = sample_count;
  rep.seed = seed;

  // (W1) growth sandwich and local Lipschitz bound.
  {
    ConditionCheck c{"W1", true, 0.0, ""};
    double lip = 0.0;
    for (int i = 0; i < sample_count; ++i) {
      const Point y = random_point();
      const Mat f = random_deformation(i);
      const double val = w.eval(y, f);
      if (!std::isfinite(val) || val < 0) {
        c.pass = false;
        c.detail = "non-finite or negative value";
        continue;
      }
      const double x = std::pow(norm(f), p);
      const double upper = val / (1.0 + x);
      const double lower = 0.5 * (-val + std::sqrt(val * val + 4.0 * x));
      c.fitted_constant = std::max({c.fitted_constant, upper, lower});
      const Mat g = f + (0.01 * scales[i % 4]) * random_matrix();
      const double dw = std::abs(w.eval(y, g) - val);
      const double denom = (1.0 + std::pow(norm(f), p - 1) + std::pow(norm(g), p - 1)) * norm(f - g);
      if (denom > 0) lip = std::max(lip, dw / denom);
    }
    if (c.fitted_constant > 1e6) c.pass = false;
    if (c.detail.empty()) c.detail = "fitted growth constant a";
    rep.lipschitz_fit = lip;
    rep.conditions.push_back(c);
  }

  // (W2) W(y, Id) = 0.
  {
    ConditionCheck c{"W2", true, 0.0, "max_y W(y, Id)"};
    for (int i = 0; i < sample_count; ++i)
      c.fitted_constant = std::max(c.fitted_constant, w.eval(random_point(), Mat::identity(n)));
    c.pass = c.fitted_constant <= 1e-12;
    rep.conditions.push_back(c);
  }

  // (W3) W >= dist^2 / a.
  {
    ConditionCheck c{"W3", true, 0.0, "fitted a with W >= dist^2/a"};
    for (int i = 0; i < sample_count; ++i) {
      const Point y = random_point();
      const Mat f = random_deformation(i);
      const double d2 = dist2_SO(f), val = w.eval(y, f);
      if (d2 <= 1e-14) continue;
      c.fitted_constant = val > 0 ? std::max(c.fitted_constant, d2 / val) : kInf;
    }
    c.pass = c.fitted_constant <= 1e6;
    rep.conditions.push_back(c);
  }

  // (W4) quadratic expansion at Id.
  {
    ConditionCheck c{"W4", false, kInf, ""};
    rep.w4_steps = {1e-1, 1e-2, 1e-3};
    try {
      const QuadraticField q = quadratic_term(w);
      const int m = std::min(sample_count, 100);
      std::vector<Point> ys;
      std::vector<Mat> gs;
      for (int i = 0; i < m; ++i) {
        ys.push_back(random_point());
        Mat g = random_matrix();
        gs.push_back((1.0 / norm(g)) * g);
      }
      for (double t : rep.w4_steps) {
        double r = 0;
        for (int i = 0; i < m; ++i) {
          const Mat tg = t * gs[i];
          r = std::max(r, std::abs(w.eval(ys[i], Mat::identity(n) + tg) - q.value(ys[i], tg)) / (t * t));
        }
        rep.w4_residuals.push_back(r);
      }
      bool decreasing = true;
      for (std::size_t i = 1; i < rep.w4_residuals.size(); ++i)
        decreasing = decreasing && rep.w4_residuals[i] < rep.w4_residuals[i - 1];
      c.fitted_constant = rep.w4_residuals.back();
      c.pass = decreasing && c.fitted_constant <= 1e-2 * std::max(1.0, q.bound_c);
      c.detail = "sup |W(Id+G) - Q(G)| / |G|^2 at the smallest |G|";
    } catch (const NotExpandable& e) {
      c.detail = e.what();
    }
    rep.conditions.push_back(c);
  }
  return rep;
}

}  // namespace elhom
