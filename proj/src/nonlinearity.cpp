#include "sfhn/nonlinearity.hpp"

#include <cmath>
#include <limits>

#include "sfhn/errors.hpp"

namespace sfhn {

namespace {

void require_law(bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
}

}  // namespace

DiffusionLaw DiffusionLaw::linear(double c) {
    require_law(c > 0.0 && std::isfinite(c), "diffusion law: c must be positive");
    return {Kind::linear, c, 0.0};
}

DiffusionLaw DiffusionLaw::cubic_monotone(double c, double b) {
    require_law(c > 0.0 && std::isfinite(c), "diffusion law: c must be positive");
    require_law(b >= 0.0 && std::isfinite(b), "diffusion law: b must be nonnegative");
    return {Kind::cubic_monotone, c, b};
}

DiffusionLaw DiffusionLaw::saturating(double c) {
    require_law(c > 0.0 && std::isfinite(c), "diffusion law: c must be positive");
    return {Kind::saturating, c, 0.0};
}

std::string to_string(DiffusionLaw::Kind kind) {
    switch (kind) {
        case DiffusionLaw::Kind::linear: return "linear";
        case DiffusionLaw::Kind::cubic_monotone: return "cubic_monotone";
        case DiffusionLaw::Kind::saturating: return "saturating";
    }
    return "linear";
}

DiffusionLaw::Kind diffusion_kind_from_string(const std::string& name) {
    if (name == "linear") return DiffusionLaw::Kind::linear;
    if (name == "cubic_monotone") return DiffusionLaw::Kind::cubic_monotone;
    if (name == "saturating") return DiffusionLaw::Kind::saturating;
    throw ConfigError("unknown diffusion law '" + name + "' (expected linear, cubic_monotone, saturating)");
}

double gamma_eval(const DiffusionLaw& law, double r) {
    switch (law.kind) {
        case DiffusionLaw::Kind::linear: return law.c * r;
        case DiffusionLaw::Kind::cubic_monotone: return law.c * r + law.b * r * r * r;
        case DiffusionLaw::Kind::saturating: return law.c * r + std::atan(r);
    }
    return law.c * r;
}

double gamma_prime(const DiffusionLaw& law, double r) {
    switch (law.kind) {
        case DiffusionLaw::Kind::linear: return law.c;
        case DiffusionLaw::Kind::cubic_monotone: return law.c + 3.0 * law.b * r * r;
        case DiffusionLaw::Kind::saturating: return law.c + 1.0 / (1.0 + r * r);
    }
    return law.c;
}

IonicCubic::IonicCubic(double a_, double scale_) : a(a_), scale(scale_) {
    if (!(a > 0.0 && a < 1.0)) throw ConfigError("ionic cubic: threshold a must lie in (0, 1)");
    if (!(scale >= 0.0) || !std::isfinite(scale)) throw ConfigError("ionic cubic: scale must be nonnegative");
}

double IonicCubic::gprime_min() const noexcept {
    return scale * (a - (1.0 + a) * (1.0 + a) / 3.0);
}

double ionic_eval(const IonicCubic& g, double v) { return g.scale * v * (v - g.a) * (v - 1.0); }

double ionic_prime(const IonicCubic& g, double v) {
    return g.scale * (3.0 * v * v - 2.0 * (1.0 + g.a) * v + g.a);
}

double yosida_admissible_max(const IonicCubic& g) {
    const double dip = std::max(0.0, -g.gprime_min());
    if (dip == 0.0) return std::numeric_limits<double>::infinity();
    return 1.0 / (2.0 * dip);
}

void require_admissible_epsilon(const IonicCubic& g, double epsilon) {
    if (!(epsilon > 0.0) || epsilon > yosida_admissible_max(g)) {
        throw ConfigError("Yosida epsilon " + std::to_string(epsilon) + " outside (0, " +
                          std::to_string(yosida_admissible_max(g)) + "]");
    }
}

double resolvent_G(const IonicCubic& g, double epsilon, double z) {
    require_admissible_epsilon(g, epsilon);
    if (g.scale == 0.0) return z;

    // h(w) = w + εG(w) - z has h' ≥ ½, hence |w* - z| ≤ 2|h(z)| = 2ε|G(z)|.
    auto h = [&](double w) { return w + epsilon * ionic_eval(g, w) - z; };
    const double tol = 1e-12 * std::max(1.0, std::abs(z));
    const double h0 = h(z);
    if (h0 == 0.0) return z;
    const double radius = 2.0 * std::abs(h0);
    double lo = z - radius;
    double hi = z + radius;

    double w = z - epsilon * ionic_eval(g, z);
    if (!(w > lo && w < hi)) w = 0.5 * (lo + hi);
    double hw = h(w);
    for (int it = 0; it < 200; ++it) {
        if (std::abs(hw) <= tol) {
            // One polishing step; keep it only if it does not get worse.
            const double slope = 1.0 + epsilon * ionic_prime(g, w);
            const double cand = w - hw / slope;
            if (cand > lo && cand < hi && std::abs(h(cand)) <= std::abs(hw)) return cand;
            return w;
        }
        if (hw < 0.0) {
            lo = w;
        } else {
            hi = w;
        }
        const double slope = 1.0 + epsilon * ionic_prime(g, w);
        double next = w - hw / slope;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (next == w) break;
        w = next;
        hw = h(w);
    }
    if (std::abs(hw) <= tol) return w;
    throw NumericError("resolvent_G: failed to converge", std::abs(hw));
}

YosidaValue yosida_G_with_derivative(const IonicCubic& g, double epsilon, double z) {
    const double w = resolvent_G(g, epsilon, z);
    const double gp = ionic_prime(g, w);
    return {ionic_eval(g, w), gp / (1.0 + epsilon * gp)};
}

double yosida_G(const IonicCubic& g, double epsilon, double z) {
    return ionic_eval(g, resolvent_G(g, epsilon, z));
}

}  // namespace sfhn
