#include "ils/chaos.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ils {

void Guards::validate() const {
    if (!(eps > 0.0 && eps < 0.5)) {
        throw std::invalid_argument("guard eps must lie in (0, 0.5), got " + std::to_string(eps));
    }
    if (!(eps_d > 0.0 && eps_d < 1.0)) {
        throw std::invalid_argument("guard eps_d must lie in (0, 1), got " + std::to_string(eps_d));
    }
}

SystemParams::SystemParams(double alpha, double r, double mu, double c, Guards guards)
    : alpha_(alpha), r_(r), mu_(mu), c_(c), guards_(guards) {
    if (!(std::isfinite(alpha) && alpha > 0.0)) {
        throw std::invalid_argument("alpha must be finite and > 0");
    }
    if (!(std::isfinite(r) && r > 0.0 && r <= 4.0)) {
        throw std::invalid_argument("r must lie in (0, 4]");
    }
    if (!(std::isfinite(mu) && mu > 0.0)) {
        throw std::invalid_argument("mu must be finite and > 0");
    }
    if (!std::isfinite(c)) {
        throw std::invalid_argument("coupling c must be finite");
    }
    guards_.validate();
}

double sat(double u, const Guards& g) { return std::min(1.0 - g.eps, std::max(g.eps, u)); }

double den(double u, const Guards& g) {
    const double d = 2.0 * u - 1.0;
    if (std::abs(d) >= g.eps_d) return d;
    // sgn(0) = +1
    return d < 0.0 ? -g.eps_d : g.eps_d;
}

double map_G(double u, double r) { return r * u * (1.0 - u); }

double map_H(double u, double mu) {
    return (std::sin(mu * std::numbers::pi * (2.0 * u - 1.0)) + 1.0) / 2.0;
}

double map_F(double u, double alpha, const Guards& g) {
    return (std::sin(alpha / den(u, g)) + 1.0) / 2.0;
}

double ccc_u1(const SystemState& s, const UnaryMap& G, const UnaryMap& H, double c) {
    return s.x * G(s.y) + (1.0 - s.x) * H(s.z) + c * (s.y - s.z) * (s.x - 0.5);
}

SystemState ccc_step(const SystemState& s, const UnaryMap& F, const UnaryMap& G,
                     const UnaryMap& H, double c, const Guards& g) {
    SystemState next;
    const double u1 = sat(ccc_u1(s, G, H, c), g);
    next.x = F(u1);
    const double u2 = sat(s.y * G(s.z) + (1.0 - s.y) * H(next.x) + c * (s.z - next.x) * (s.y - 0.5), g);
    next.y = F(u2);
    const double u3 =
        sat(s.z * G(next.x) + (1.0 - s.z) * H(next.y) + c * (next.x - next.y) * (s.z - 0.5), g);
    next.z = F(u3);
    return next;
}

SystemState ils_step(const SystemState& s, const SystemParams& p) {
    const Guards& g = p.guards();
    const double r = p.r();
    const double mu = p.mu();
    const double alpha = p.alpha();
    const double c = p.c();

    SystemState next;
    const double u1 = sat(s.x * map_G(s.y, r) + (1.0 - s.x) * map_H(s.z, mu) +
                              c * (s.y - s.z) * (s.x - 0.5),
                          g);
    next.x = map_F(u1, alpha, g);
    const double u2 = sat(s.y * map_G(s.z, r) + (1.0 - s.y) * map_H(next.x, mu) +
                              c * (s.z - next.x) * (s.y - 0.5),
                          g);
    next.y = map_F(u2, alpha, g);
    const double u3 = sat(s.z * map_G(next.x, r) + (1.0 - s.z) * map_H(next.y, mu) +
                              c * (next.x - next.y) * (s.z - 0.5),
                          g);
    next.z = map_F(u3, alpha, g);
    return next;
}

SystemState clamp_state(const SystemState& s, const Guards& g) {
    return {sat(s.x, g), sat(s.y, g), sat(s.z, g)};
}

Orbit generate_orbit(const SystemState& seed, const SystemParams& p, std::size_t n_transient,
                     std::size_t n_samples) {
    if (!(std::isfinite(seed.x) && std::isfinite(seed.y) && std::isfinite(seed.z))) {
        throw std::invalid_argument("orbit seed must be finite");
    }
    if (n_samples == 0) {
        throw std::invalid_argument("orbit needs at least one sample");
    }
    SystemState s = clamp_state(seed, p.guards());
    for (std::size_t i = 0; i < n_transient; ++i) s = ils_step(s, p);

    Orbit orbit{{}, n_transient, p};
    orbit.states.reserve(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        s = ils_step(s, p);
        orbit.states.push_back(s);
    }
    return orbit;
}

}  // namespace ils
