#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

namespace ils {

/// Clamp margin for the state and floor for the singular ICMIC denominator.
struct Guards {
    double eps = 1e-12;
    double eps_d = 1e-12;

    /// Throws std::invalid_argument unless 0 < eps < 0.5 and 0 < eps_d < 1.
    void validate() const;
};

inline constexpr double kDefaultCoupling = 0.077;

/// Key-independent configuration of the 3D-ILS map.
///
/// Construction validates r in (0, 4], alpha > 0, mu > 0 and the guards; an
/// invalid combination throws std::invalid_argument. The coupling coefficient
/// defaults to 0.077 and is only changed for research scans.
class SystemParams {
public:
    SystemParams(double alpha, double r, double mu, double c = kDefaultCoupling,
                 Guards guards = {});

    double alpha() const { return alpha_; }
    double r() const { return r_; }
    double mu() const { return mu_; }
    double c() const { return c_; }
    const Guards& guards() const { return guards_; }

    SystemParams with_alpha(double v) const { return {v, r_, mu_, c_, guards_}; }
    SystemParams with_r(double v) const { return {alpha_, v, mu_, c_, guards_}; }
    SystemParams with_mu(double v) const { return {alpha_, r_, v, c_, guards_}; }
    SystemParams with_guards(Guards g) const { return {alpha_, r_, mu_, c_, g}; }

    bool operator==(const SystemParams&) const = default;

private:
    double alpha_;
    double r_;
    double mu_;
    double c_;
    Guards guards_;
};

struct SystemState {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double operator[](std::size_t i) const { return i == 0 ? x : (i == 1 ? y : z); }
    double& operator[](std::size_t i) { return i == 0 ? x : (i == 1 ? y : z); }

    bool operator==(const SystemState&) const = default;
};

struct Orbit {
    std::vector<SystemState> states;
    std::size_t transient_discarded = 0;
    SystemParams params;
};

inline constexpr std::size_t kDefaultTransient = 1000;

double sat(double u, const Guards& g);
double den(double u, const Guards& g);

double map_G(double u, double r);
double map_H(double u, double mu);
double map_F(double u, double alpha, const Guards& g);

using UnaryMap = std::function<double(double)>;

/// Generic cascading/crossing/coupling step. The three updates are sequential:
/// u2 sees the new x, u3 sees the new x and y.
SystemState ccc_step(const SystemState& s, const UnaryMap& F, const UnaryMap& G,
                     const UnaryMap& H, double c, const Guards& g);

/// Pre-saturation argument of the first update (exposed for endpoint checks).
double ccc_u1(const SystemState& s, const UnaryMap& G, const UnaryMap& H, double c);

/// One step of the 3D-ILS map (ICMIC outer map, Logistic and Sine inner maps).
SystemState ils_step(const SystemState& s, const SystemParams& p);

/// Clamps the seed with sat, discards n_transient steps, then records
/// n_samples states. Throws std::invalid_argument for non-finite seeds or
/// n_samples == 0.
Orbit generate_orbit(const SystemState& seed, const SystemParams& p,
                     std::size_t n_transient, std::size_t n_samples);

SystemState clamp_state(const SystemState& s, const Guards& g);

}  // namespace ils
