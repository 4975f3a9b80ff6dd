#include "hkl/envelope.hpp"

#include <algorithm>
#include <cmath>

#include "hkl/errors.hpp"

namespace hkl {

namespace {

double diagonal(const EnvelopeSpec& spec, double t, int x, const VolumeOracle& vol) {
  return 1.0 / vol(x, generalized_inverse(spec.Phi, t));
}

double jump_term(const ScalingFunction& psi, double t, int x, double r, const VolumeOracle& vol) {
  return t / (vol(x, r) * psi(r));
}

Bounds checked(Bounds b) {
  if (b.lower > b.upper * (1.0 + 1e-12)) {
    throw SpecError("envelope lower bound exceeds upper bound; constants are inconsistent");
  }
  return b;
}

Bounds finish(Bounds b, bool check) { return check ? checked(b) : b; }

void require_positive_time(double t, double r) {
  if (!(t > 0.0)) throw DomainError("envelope needs t > 0");
  if (!(r >= 0.0)) throw DomainError("envelope needs r >= 0");
}

}  // namespace

VolumeOracle VolumeOracle::power(double dimension, double coef) {
  if (!(dimension > 0.0) || !(coef > 0.0)) throw DomainError("power volume needs positive data");
  return VolumeOracle([=](int, double r) { return coef * std::pow(r, dimension); }, "power");
}

VolumeOracle VolumeOracle::graph(const MetricMeasureGraph& g) {
  const MetricMeasureGraph* ptr = &g;
  return VolumeOracle([ptr](int x, double r) { return ptr->ball_volume(x, r); }, "graph");
}

std::string to_string(EnvelopeForm form) {
  switch (form) {
    case EnvelopeForm::HK: return "HK";
    case EnvelopeForm::UHK: return "UHK";
    case EnvelopeForm::UHKD: return "UHKD";
    case EnvelopeForm::SHK: return "SHK";
    case EnvelopeForm::GHK: return "GHK";
    case EnvelopeForm::STABLE: return "STABLE";
    case EnvelopeForm::EXAMPLE_LOG_SMALL: return "EXAMPLE-LOG-SMALL";
    case EnvelopeForm::EXAMPLE_LOG_LARGE: return "EXAMPLE-LOG-LARGE";
    case EnvelopeForm::EXAMPLE_MIXED: return "EXAMPLE-MIXED";
  }
  return "unknown";
}

EnvelopeForm envelope_form_from_string(const std::string& name) {
  for (auto form : {EnvelopeForm::HK, EnvelopeForm::UHK, EnvelopeForm::UHKD, EnvelopeForm::SHK,
                    EnvelopeForm::GHK, EnvelopeForm::STABLE, EnvelopeForm::EXAMPLE_LOG_SMALL,
                    EnvelopeForm::EXAMPLE_LOG_LARGE, EnvelopeForm::EXAMPLE_MIXED}) {
    if (to_string(form) == name) return form;
  }
  throw DomainError("unknown envelope form '" + name + "'");
}

void EnvelopeSpec::validate() const {
  if (!(c >= 1.0)) throw DomainError("envelope constant c must be >= 1");
  if (!(eta > 0.0)) throw DomainError("eta must be positive");
  if (!(a0 > 0.0)) throw DomainError("a0 must be positive");
  if (!(a_U > 0.0) || a_L < a_U) throw DomainError("need a_L >= a_U > 0");
}

double g_envelope(const EnvelopeSpec& spec, double a, double t, int x, double r,
                  const VolumeOracle& vol) {
  require_positive_time(t, r);
  if (r == 0.0) return diagonal(spec, t, x, vol);
  // The supremum defining Phi_1 is never negative (s -> infinity gives 0).
  const double phi1 = std::max(0.0, sup_transform(spec.Phi, spec.phi_indices, r, t).value);
  return jump_term(spec.psi, t, x, r, vol) + std::exp(-a * phi1) * diagonal(spec, t, x, vol);
}

static Bounds hk_form(const EnvelopeSpec& spec, double t, int x, double r,
                         const VolumeOracle& vol, bool check) {
  spec.validate();
  require_positive_time(t, r);
  const double inv = generalized_inverse(spec.Phi, t);
  const double diag = 1.0 / vol(x, inv);
  Bounds b;
  b.lower = (r <= spec.eta * inv ? diag : jump_term(spec.psi, t, x, r, vol)) / spec.c;
  b.upper = spec.c * std::min(diag, g_envelope(spec, spec.a0, t, x, r, vol));
  return finish(b, check);
}

Bounds hk_bounds(const EnvelopeSpec& spec, double t, int x, double r, const VolumeOracle& vol) {
  return hk_form(spec, t, x, r, vol, true);
}

static Bounds uhk_form(const EnvelopeSpec& spec, double t, int x, double r,
                         const VolumeOracle& vol, bool) {
  spec.validate();
  require_positive_time(t, r);
  const double diag = diagonal(spec, t, x, vol);
  return {0.0, spec.c * std::min(diag, g_envelope(spec, spec.a0, t, x, r, vol))};
}

Bounds uhk_bounds(const EnvelopeSpec& spec, double t, int x, double r, const VolumeOracle& vol) {
  return uhk_form(spec, t, x, r, vol, true);
}

Bounds uhkd_bounds(const EnvelopeSpec& spec, double t, int x, const VolumeOracle& vol) {
  spec.validate();
  require_positive_time(t, 0.0);
  return {0.0, spec.c * diagonal(spec, t, x, vol)};
}

static Bounds shk_form(const EnvelopeSpec& spec, double t, int x, double r,
                         const VolumeOracle& vol, bool check) {
  spec.validate();
  require_positive_time(t, r);
  const double diag = diagonal(spec, t, x, vol);
  Bounds b;
  b.lower = std::min(diag, g_envelope(spec, spec.a_L, t, x, r, vol)) / spec.c;
  b.upper = spec.c * std::min(diag, g_envelope(spec, spec.a_U, t, x, r, vol));
  return finish(b, check);
}

Bounds shk_bounds(const EnvelopeSpec& spec, double t, int x, double r, const VolumeOracle& vol) {
  return shk_form(spec, t, x, r, vol, true);
}

static Bounds ghk_form(const EnvelopeSpec& spec, double t, int x, double r,
                         const VolumeOracle& vol, bool check) {
  spec.validate();
  require_positive_time(t, r);
  if (!spec.F) throw DomainError("GHK needs the walk-dimension function F");
  const double inv = generalized_inverse(spec.Phi, t);
  const double diag = 1.0 / vol(x, inv);
  Bounds b;
  if (r == 0.0) return finish({diag / spec.c, spec.c * diag}, check);
  const double jump = jump_term(spec.psi, t, x, r, vol);
  if (r <= spec.eta * inv) b.lower += diag / spec.c;
  if (r >= spec.eta * inv) b.lower += jump / spec.c;
  const double f1 =
      std::max(0.0, sup_transform(*spec.F, spec.F_indices, r, (*spec.F)(inv)).value);
  b.upper = spec.c * std::min(diag, jump + diag * std::exp(-spec.a_U * f1));
  return finish(b, check);
}

Bounds ghk_bounds(const EnvelopeSpec& spec, double t, int x, double r, const VolumeOracle& vol) {
  return ghk_form(spec, t, x, r, vol, true);
}

Bounds stable_bounds(const EnvelopeSpec& spec, double t, int x, double r,
                     const VolumeOracle& vol) {
  spec.validate();
  require_positive_time(t, r);
  const double diag = diagonal(spec, t, x, vol);
  const double form = r == 0.0 ? diag : std::min(diag, jump_term(spec.Phi, t, x, r, vol));
  return {form / spec.c, spec.c * form};
}

Bounds example_envelope(const EnvelopeSpec& spec, double t, int x, double r,
                        const VolumeOracle& vol) {
  spec.validate();
  require_positive_time(t, r);
  const auto& p = spec.example;
  double form = 0.0;
  switch (spec.form) {
    case EnvelopeForm::EXAMPLE_LOG_SMALL: {
      const bool in_D = p.alpha > 1.0 || (p.alpha == 1.0 && p.beta > 1.0);
      if (!in_D) throw DomainError("LOG-SMALL needs (alpha, beta) in D");
      if (!(p.gamma > 1.0)) throw DomainError("LOG-SMALL needs gamma > 1");
      if (!(p.T <= 0.0625) || !(t < p.T)) throw DomainError("LOG-SMALL needs t < T <= 2^-4");
      const double L = std::log(1.0 / t);
      const double f = std::pow(L, 1.0 - (p.alpha - p.kappa)) * std::pow(std::log(L), -p.beta);
      const double diag = 1.0 / vol(x, std::pow(t * f, 1.0 / p.gamma));
      if (r == 0.0) {
        form = diag;
        break;
      }
      const double expo = std::pow(std::pow(r, p.gamma) / (t * f), 1.0 / (p.gamma - 1.0));
      form = std::min(diag, jump_term(spec.psi, t, x, r, vol) + diag * std::exp(-p.a * expo));
      break;
    }
    case EnvelopeForm::EXAMPLE_LOG_LARGE: {
      if (!(p.gamma > 1.0)) throw DomainError("LOG-LARGE needs gamma > 1");
      if (p.beta > 1.0) throw DomainError("LOG-LARGE needs beta <= 1");
      if (!(p.T >= 16.0) || t < p.T) throw DomainError("LOG-LARGE needs t >= T >= 16");
      const double lt = std::log(t);
      const double g = p.gamma;
      double scale = 0.0;
      double time_factor = 0.0;
      double log_power = 0.0;
      if (p.beta < 1.0) {
        scale = std::pow(t, 1.0 / g) * std::pow(lt, (1.0 - p.beta - p.kappa) / g);
        time_factor = t * std::pow(lt, 1.0 - p.beta - p.kappa);
        log_power = p.beta + p.kappa;
      } else {
        scale = std::pow(t, 1.0 / g) * std::pow(lt, -p.kappa / g) * std::pow(std::log(lt), 1.0 / g);
        time_factor = t * std::log(lt) * std::pow(lt, -p.kappa);
        log_power = 1.0 + p.kappa;
      }
      const double diag = 1.0 / vol(x, scale);
      if (r == 0.0) {
        form = diag;
        break;
      }
      const double jump = t / (vol(x, r) * std::pow(r, g) * std::pow(std::log1p(r), log_power));
      const double expo = std::pow(std::pow(r, g) / time_factor, 1.0 / (g - 1.0));
      form = std::min(diag, jump + diag * std::exp(-p.a * expo));
      break;
    }
    case EnvelopeForm::EXAMPLE_MIXED: {
      if (!(p.alpha < p.gamma1 && p.gamma1 <= p.gamma2 && p.gamma2 < p.beta)) {
        throw DomainError("MIXED needs alpha < gamma1 <= gamma2 < beta");
      }
      auto psi = [&](double s) { return s <= 1.0 ? std::pow(s, p.alpha) : std::pow(s, p.beta); };
      if (t <= p.T) {
        const double diag = 1.0 / vol(x, std::pow(t, 1.0 / p.alpha));
        form = r == 0.0 ? diag : std::min(diag, t / (vol(x, r) * psi(r)));
        break;
      }
      if (!spec.F) throw DomainError("MIXED at large times needs F");
      const ScalingFunction& F = *spec.F;
      const double diag = 1.0 / vol(x, generalized_inverse(F, t));
      if (r == 0.0) {
        form = diag;
        break;
      }
      const auto dF = ScalingFunction::composed("F'", [F](double s) { return F.derivative(s); });
      const double expo = r / generalized_inverse(dF, t / r);
      form = std::min(diag, t / (vol(x, r) * std::pow(r, p.beta)) + diag * std::exp(-p.a * expo));
      break;
    }
    default:
      throw DomainError("example_envelope needs an EXAMPLE-* form");
  }
  return {form / spec.c, spec.c * form};
}

namespace {

Bounds dispatch(const EnvelopeSpec& spec, double t, int x, double r, const VolumeOracle& vol,
                bool check) {
  switch (spec.form) {
    case EnvelopeForm::HK: return hk_form(spec, t, x, r, vol, check);
    case EnvelopeForm::UHK: return uhk_form(spec, t, x, r, vol, check);
    case EnvelopeForm::UHKD: return uhkd_bounds(spec, t, x, vol);
    case EnvelopeForm::SHK: return shk_form(spec, t, x, r, vol, check);
    case EnvelopeForm::GHK: return ghk_form(spec, t, x, r, vol, check);
    case EnvelopeForm::STABLE: return finish(stable_bounds(spec, t, x, r, vol), check);
    default: return finish(example_envelope(spec, t, x, r, vol), check);
  }
}

}  // namespace

Bounds envelope_bounds(const EnvelopeSpec& spec, double t, int x, double r,
                       const VolumeOracle& vol) {
  return dispatch(spec, t, x, r, vol, true);
}

Bounds envelope_forms(const EnvelopeSpec& spec, double t, int x, double r,
                      const VolumeOracle& vol) {
  return dispatch(spec, t, x, r, vol, false);
}

Bounds green_envelope(const ScalingFunction& Phi, double r, const VolumeOracle& vol, int x,
                      double alpha2, double d1, double c) {
  if (!(alpha2 < d1)) throw DomainError("Green envelope needs alpha2 < d1");
  if (!(r > 0.0)) throw DomainError("Green envelope needs r > 0");
  const double form = Phi(r) / vol(x, r);
  return {form / c, c * form};
}

double lil_h(const ScalingFunction& F, double t) {
  if (!(t >= 16.0)) throw DomainError("h(t) is defined for t >= 16");
  const double ll = std::log(std::log(t));
  return ll * generalized_inverse(F, t / ll);
}

LilCheckReport lil_h_checks(const ScalingFunction& F, const PhiIndices& F_indices, double gamma1,
                            double c1, double c2, std::span<const double> t_grid) {
  if (!(c1 > 0.0)) throw DomainError("c1 must be positive");
  if (!(c2 > 0.0 && c2 <= 1.0)) throw DomainError("c2 must lie in (0, 1]");
  LilCheckReport report;
  report.h1_margin = std::numeric_limits<double>::infinity();
  const double cF = std::pow(F_indices.c_U, 1.0 / (gamma1 - 1.0));
  for (double t : t_grid) {
    const double h = lil_h(F, t);
    const double ll = std::log(std::log(t));
    const double m1 = sup_transform(F, F_indices, (c1 + 1.0) * h, t).value / (c1 * ll);
    const double m2 = sup_transform(F, F_indices, c2 * h, t).value / (cF * c2 * ll);
    ++report.points;
    report.h1_margin = std::min(report.h1_margin, m1);
    report.h2_margin = std::max(report.h2_margin, m2);
    if (m1 < 1.0 - 1e-9) throw ViolationError("F_1((c1+1)h(t), t) < c1 log log t", t, m1);
    if (m2 > 1.0 + 1e-9) throw ViolationError("F_1(c2 h(t), t) > c_F^(1/(g1-1)) c2 log log t", t, m2);
  }
  return report;
}

}  // namespace hkl
