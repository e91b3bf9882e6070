#pragma once

#include <string>

namespace sfhn {

/// Monotone diffusion law γ inside Δγ(v).
///
/// Every variant satisfies γ(0) = 0 and the strong monotonicity
/// (γ(r₁) - γ(r₂))(r₁ - r₂) ≥ c (r₁ - r₂)² with c the linear coefficient.
struct DiffusionLaw {
    enum class Kind { linear, cubic_monotone, saturating };

    Kind kind = Kind::linear;
    double c = 1.0;  ///< linear coefficient, > 0
    double b = 0.0;  ///< cubic coefficient for cubic_monotone, ≥ 0

    static DiffusionLaw linear(double c);
    static DiffusionLaw cubic_monotone(double c, double b);
    static DiffusionLaw saturating(double c);

    double monotonicity_constant() const noexcept { return c; }

    bool operator==(const DiffusionLaw&) const = default;
};

std::string to_string(DiffusionLaw::Kind kind);
DiffusionLaw::Kind diffusion_kind_from_string(const std::string& name);

double gamma_eval(const DiffusionLaw& law, double r);
double gamma_prime(const DiffusionLaw& law, double r);

/// Ionic current G(v) = scale · v (v - a)(v - 1). scale = 0 switches the reaction off.
struct IonicCubic {
    double a = 0.5;
    double scale = 1.0;

    IonicCubic() = default;
    IonicCubic(double a, double scale = 1.0);

    /// Global minimum of G′, attained at v = (1 + a)/3.
    double gprime_min() const noexcept;

    bool operator==(const IonicCubic&) const = default;
};

double ionic_eval(const IonicCubic& g, double v);
double ionic_prime(const IonicCubic& g, double v);

/// Largest Yosida parameter for which r ↦ r + εG(r) has slope ≥ ½.
double yosida_admissible_max(const IonicCubic& g);

/// Throws ConfigError unless 0 < ε ≤ yosida_admissible_max(g).
void require_admissible_epsilon(const IonicCubic& g, double epsilon);

/// Unique w with w + εG(w) = z (safeguarded Newton, bisection fallback).
double resolvent_G(const IonicCubic& g, double epsilon, double z);

/// G_ε(z) = (z - (I + εG)⁻¹ z)/ε, evaluated as G(w) at the resolvent point.
double yosida_G(const IonicCubic& g, double epsilon, double z);

/// Value and derivative of G_ε at z in one resolvent solve.
struct YosidaValue {
    double value;
    double derivative;
};
YosidaValue yosida_G_with_derivative(const IonicCubic& g, double epsilon, double z);

}  // namespace sfhn
