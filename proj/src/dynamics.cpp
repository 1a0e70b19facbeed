#include "ils/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include <Eigen/Dense>
#include <boost/multiprecision/eigen.hpp>
#include <boost/multiprecision/float128.hpp>
#include <json.hpp>

namespace ils {

namespace {

// Per-step Jacobians of the map reach condition numbers near 1e18, so the
// tangent frame, the triangular factors and the determinants are carried in
// quad precision.
using Wide = boost::multiprecision::float128;
using WideMatrix = Eigen::Matrix<Wide, 3, 3>;

WideMatrix widen(const Jacobian3& j) { return j.cast<Wide>(); }

Wide log_abs_det(const WideMatrix& j) { return log(abs(j.partialPivLu().determinant())); }

double derivative_G(double u, double r) { return r * (1.0 - 2.0 * u); }

double derivative_H(double u, double mu) {
    return mu * std::numbers::pi * std::cos(mu * std::numbers::pi * (2.0 * u - 1.0));
}

double derivative_den(double v, const Guards& g) {
    return std::abs(2.0 * v - 1.0) >= g.eps_d ? 2.0 : 0.0;
}

double derivative_sat(double u, const Guards& g) { return (g.eps < u && u < 1.0 - g.eps) ? 1.0 : 0.0; }

// d/dv of (sin(alpha / den(v)) + 1) / 2.
double derivative_phi(double v, double alpha, const Guards& g) {
    const double dv = derivative_den(v, g);
    if (dv == 0.0) return 0.0;
    const double d = den(v, g);
    return -0.5 * alpha * std::cos(alpha / d) / (d * d) * dv;
}

// F'(u) with u the pre-saturation argument.
double derivative_F(double u, double alpha, const Guards& g) {
    const double ds = derivative_sat(u, g);
    if (ds == 0.0) return 0.0;
    return derivative_phi(sat(u, g), alpha, g) * ds;
}

std::array<double, 3> sorted_descending(std::array<double, 3> v) {
    std::sort(v.begin(), v.end(), std::greater<>());
    return v;
}

}  // namespace

Jacobian3 jacobian_analytic(const SystemState& s, const SystemParams& p) {
    const Guards& g = p.guards();
    const double alpha = p.alpha();
    const double r = p.r();
    const double mu = p.mu();
    const double c = p.c();
    const double x = s.x;
    const double y = s.y;
    const double z = s.z;

    Jacobian3 j = Jacobian3::Zero();

    const double u1 = x * map_G(y, r) + (1.0 - x) * map_H(z, mu) + c * (y - z) * (x - 0.5);
    const double x1 = map_F(sat(u1, g), alpha, g);
    const double m1 = derivative_F(u1, alpha, g);
    j(0, 0) = m1 * (map_G(y, r) - map_H(z, mu) + c * (y - z));
    j(0, 1) = m1 * (x * derivative_G(y, r) + c * (x - 0.5));
    j(0, 2) = m1 * ((1.0 - x) * derivative_H(z, mu) - c * (x - 0.5));

    const double u2 = y * map_G(z, r) + (1.0 - y) * map_H(x1, mu) + c * (z - x1) * (y - 0.5);
    const double y1 = map_F(sat(u2, g), alpha, g);
    const double m2 = derivative_F(u2, alpha, g);
    const double a2 = (1.0 - y) * derivative_H(x1, mu) - c * (y - 0.5);
    j(1, 0) = m2 * (a2 * j(0, 0));
    j(1, 1) = m2 * (map_G(z, r) - map_H(x1, mu) + c * (z - x1) + a2 * j(0, 1));
    j(1, 2) = m2 * (y * derivative_G(z, r) + c * (y - 0.5) + a2 * j(0, 2));

    const double u3 = z * map_G(x1, r) + (1.0 - z) * map_H(y1, mu) + c * (x1 - y1) * (z - 0.5);
    const double m3 = derivative_F(u3, alpha, g);
    const double bx = z * derivative_G(x1, r) + c * (z - 0.5);
    const double by = (1.0 - z) * derivative_H(y1, mu) - c * (z - 0.5);
    j(2, 0) = m3 * (bx * j(0, 0) + by * j(1, 0));
    j(2, 1) = m3 * (bx * j(0, 1) + by * j(1, 1));
    j(2, 2) = m3 * (map_G(x1, r) - map_H(y1, mu) + c * (x1 - y1) + bx * j(0, 2) + by * j(1, 2));

    return j;
}

Jacobian3 jacobian_fd(const StepFunction& step, const SystemState& s, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be > 0");
    Jacobian3 j;
    for (std::size_t col = 0; col < 3; ++col) {
        SystemState plus = s;
        SystemState minus = s;
        plus[col] += h;
        minus[col] -= h;
        const SystemState fp = step(plus);
        const SystemState fm = step(minus);
        for (std::size_t row = 0; row < 3; ++row) {
            j(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) =
                (fp[row] - fm[row]) / (2.0 * h);
        }
    }
    return j;
}

Jacobian3 jacobian_fd(const SystemState& s, const SystemParams& p, double h) {
    return jacobian_fd([&p](const SystemState& st) { return ils_step(st, p); }, s, h);
}

bool has_zero_row(const Jacobian3& j) {
    for (Eigen::Index i = 0; i < 3; ++i) {
        if (j(i, 0) == 0.0 && j(i, 1) == 0.0 && j(i, 2) == 0.0) return true;
    }
    return false;
}

LyapunovSpectrum lyapunov_qr(const StepFunction& step, const JacobianFunction& jacobian,
                             const SystemState& start, std::size_t n_steps) {
    LyapunovSpectrum out;
    out.n_steps = n_steps;

    WideMatrix frame = WideMatrix::Identity();
    std::array<Wide, 3> log_sums{0, 0, 0};
    Wide logdet_sum = 0;
    SystemState s = start;

    for (std::size_t n = 0; n < n_steps; ++n) {
        const Jacobian3 j = jacobian(s);
        s = step(s);
        if (has_zero_row(j)) {
            ++out.guard_hits;
            continue;
        }

        const WideMatrix jw = widen(j);
        Eigen::HouseholderQR<WideMatrix> qr(jw * frame);
        const WideMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
        WideMatrix q = qr.householderQ();
        for (Eigen::Index i = 0; i < 3; ++i) {
            const Wide d = r(i, i);
            if (d == 0 || !isfinite(d)) {
                throw DegenerateFrameError(n, "tangent frame collapsed at step " + std::to_string(n));
            }
            // Flip columns so the triangular factor has a positive diagonal.
            if (d < 0) q.col(i) = -q.col(i);
            log_sums[static_cast<std::size_t>(i)] += log(abs(d));
        }
        frame = q;
        logdet_sum += log_abs_det(jw);
        ++out.contributing_steps;
    }

    if (out.contributing_steps == 0) {
        throw DegenerateFrameError(n_steps, "every step hit a guard; no exponents accumulated");
    }
    const Wide count = static_cast<double>(out.contributing_steps);
    std::array<double, 3> lambdas{};
    for (std::size_t i = 0; i < 3; ++i) lambdas[i] = static_cast<double>(log_sums[i] / count);
    out.lambdas = sorted_descending(lambdas);
    out.logdet_mean = static_cast<double>(logdet_sum / count);
    return out;
}

namespace {

JacobianFunction ils_jacobian(const SystemParams& p, JacobianSource source, double h) {
    if (source == JacobianSource::Analytic) {
        return [p](const SystemState& s) { return jacobian_analytic(s, p); };
    }
    if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be > 0");
    return [p, h](const SystemState& s) { return jacobian_fd(s, p, h); };
}

SystemState settle(const SystemState& seed, const SystemParams& p, std::size_t n_transient) {
    if (!(std::isfinite(seed.x) && std::isfinite(seed.y) && std::isfinite(seed.z))) {
        throw std::invalid_argument("seed must be finite");
    }
    SystemState s = clamp_state(seed, p.guards());
    for (std::size_t i = 0; i < n_transient; ++i) s = ils_step(s, p);
    return s;
}

}  // namespace

LyapunovSpectrum lyapunov_qr(const SystemState& seed, const SystemParams& p,
                             const LyapunovOptions& opts) {
    if (opts.n_steps < 100) throw std::invalid_argument("Lyapunov run needs at least 100 steps");
    const SystemState start = settle(seed, p, opts.n_transient);
    return lyapunov_qr([&p](const SystemState& s) { return ils_step(s, p); },
                       ils_jacobian(p, opts.source, opts.fd_step), start, opts.n_steps);
}

namespace {

std::array<Wide, 3> wide_singular_values(const WideMatrix& j) {
    Eigen::JacobiSVD<WideMatrix> svd(j);
    std::array<Wide, 3> sv{svd.singularValues()(0), svd.singularValues()(1), svd.singularValues()(2)};
    std::sort(sv.begin(), sv.end(), std::greater<>());
    return sv;
}

}  // namespace

std::array<double, 3> singular_values(const Jacobian3& j) {
    const auto sv = wide_singular_values(widen(j));
    return {static_cast<double>(sv[0]), static_cast<double>(sv[1]), static_cast<double>(sv[2])};
}

LyapunovSpectrum finite_time_exponents(const StepFunction& step,
                                       const JacobianFunction& jacobian,
                                       const SystemState& start, std::size_t n_steps) {
    if (n_steps == 0) throw std::invalid_argument("finite-time exponents need at least one step");
    LyapunovSpectrum out;
    out.n_steps = n_steps;
    std::array<Wide, 3> log_sums{0, 0, 0};
    Wide logdet_sum = 0;
    SystemState s = start;

    for (std::size_t n = 0; n < n_steps; ++n) {
        const Jacobian3 j = jacobian(s);
        s = step(s);
        if (has_zero_row(j)) {
            ++out.guard_hits;
            continue;
        }
        const WideMatrix jw = widen(j);
        const auto sv = wide_singular_values(jw);
        if (sv[2] == 0) {
            throw DegenerateFrameError(n, "zero singular value at step " + std::to_string(n));
        }
        for (std::size_t i = 0; i < 3; ++i) log_sums[i] += log(sv[i]);
        logdet_sum += log_abs_det(jw);
        ++out.contributing_steps;
    }
    if (out.contributing_steps == 0) {
        throw DegenerateFrameError(n_steps, "every step hit a guard; no exponents accumulated");
    }
    const Wide count = static_cast<double>(out.contributing_steps);
    for (std::size_t i = 0; i < 3; ++i) out.lambdas[i] = static_cast<double>(log_sums[i] / count);
    out.logdet_mean = static_cast<double>(logdet_sum / count);
    return out;
}

LyapunovSpectrum finite_time_exponents(const SystemState& seed, const SystemParams& p,
                                       std::size_t n_steps, std::size_t n_transient,
                                       JacobianSource source) {
    const SystemState start = settle(seed, p, n_transient);
    return finite_time_exponents([&p](const SystemState& s) { return ils_step(s, p); },
                                 ils_jacobian(p, source, kDefaultFdStep), start, n_steps);
}

std::string to_string(SweptParameter p) {
    switch (p) {
        case SweptParameter::Alpha: return "alpha";
        case SweptParameter::R: return "r";
        case SweptParameter::Mu: return "mu";
    }
    return "?";
}

SweptParameter parse_swept_parameter(const std::string& name) {
    if (name == "alpha") return SweptParameter::Alpha;
    if (name == "r") return SweptParameter::R;
    if (name == "mu") return SweptParameter::Mu;
    throw std::invalid_argument("unknown swept parameter '" + name + "' (expected alpha, r or mu)");
}

SystemParams bifurcation_defaults() { return SystemParams(10.0, 4.0, 5.0); }

std::vector<double> linspace(double start, double stop, std::size_t count) {
    if (count == 0) throw std::invalid_argument("grid needs at least one point");
    if (count == 1) return {start};
    std::vector<double> out(count);
    const double step = (stop - start) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) out[i] = start + step * static_cast<double>(i);
    out.back() = stop;
    return out;
}

BifurcationScan bifurcation_scan(SweptParameter swept, const std::vector<double>& grid,
                                 const SystemParams& fixed, const SystemState& seed,
                                 const BifurcationOptions& opts) {
    if (grid.empty()) throw std::invalid_argument("bifurcation grid is empty");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("bifurcation grid must be strictly increasing");
    }
    if (opts.n_keep == 0 || opts.n_keep > opts.n_iter) {
        throw std::invalid_argument("n_keep must lie in [1, n_iter]");
    }

    BifurcationScan scan;
    scan.swept = swept;
    scan.grid = grid;
    scan.samples.reserve(grid.size());
    for (double value : grid) {
        const SystemParams p = swept == SweptParameter::Alpha ? fixed.with_alpha(value)
                               : swept == SweptParameter::R   ? fixed.with_r(value)
                                                              : fixed.with_mu(value);
        Orbit orbit = generate_orbit(seed, p, opts.n_iter - opts.n_keep, opts.n_keep);
        scan.samples.push_back(std::move(orbit.states));
    }
    return scan;
}

double SensitivityTrace::max_difference() const {
    double m = 0.0;
    for (const auto& d : differences) m = std::max({m, d[0], d[1], d[2]});
    return m;
}

SensitivityTrace sensitivity_pair(const SystemState& seed, double delta, const SystemParams& p,
                                  std::size_t n_steps) {
    const SystemState shifted{seed.x + delta, seed.y + delta, seed.z + delta};
    SensitivityTrace trace{delta, generate_orbit(seed, p, 0, n_steps),
                           generate_orbit(shifted, p, 0, n_steps), {}};
    trace.differences.reserve(n_steps);
    for (std::size_t i = 0; i < n_steps; ++i) {
        const auto& a = trace.base.states[i];
        const auto& b = trace.perturbed.states[i];
        trace.differences.push_back({std::abs(a.x - b.x), std::abs(a.y - b.y), std::abs(a.z - b.z)});
    }
    return trace;
}

Orbit phase_samples(const SystemState& seed, const SystemParams& p, std::size_t n) {
    return generate_orbit(seed, p, kDefaultTransient, n);
}

namespace {
constexpr const char* kCoordNames[3] = {"x", "y", "z"};
}

void write_scan_csv(std::ostream& out, const BifurcationScan& scan) {
    out << "param,coord,iter,value\n" << std::setprecision(17);
    for (std::size_t g = 0; g < scan.grid.size(); ++g) {
        const auto& block = scan.samples[g];
        for (std::size_t c = 0; c < 3; ++c) {
            for (std::size_t i = 0; i < block.size(); ++i) {
                out << scan.grid[g] << ',' << kCoordNames[c] << ',' << i << ',' << block[i][c] << '\n';
            }
        }
    }
}

void write_sensitivity_csv(std::ostream& out, const SensitivityTrace& trace) {
    out << "iter,coord,base,perturbed,abs_diff\n" << std::setprecision(17);
    for (std::size_t i = 0; i < trace.differences.size(); ++i) {
        for (std::size_t c = 0; c < 3; ++c) {
            out << i + 1 << ',' << kCoordNames[c] << ',' << trace.base.states[i][c] << ','
                << trace.perturbed.states[i][c] << ',' << trace.differences[i][c] << '\n';
        }
    }
}

void write_orbit_csv(std::ostream& out, const Orbit& orbit) {
    out << "iter,x,y,z\n" << std::setprecision(17);
    for (std::size_t i = 0; i < orbit.states.size(); ++i) {
        const auto& s = orbit.states[i];
        out << i << ',' << s.x << ',' << s.y << ',' << s.z << '\n';
    }
}

std::string spectrum_json(const LyapunovSpectrum& spectrum, const SystemParams& p,
                          const SystemState& seed) {
    nlohmann::json j;
    j["alpha"] = p.alpha();
    j["r"] = p.r();
    j["mu"] = p.mu();
    j["c"] = p.c();
    j["seed"] = {seed.x, seed.y, seed.z};
    j["lambdas"] = spectrum.lambdas;
    j["n_steps"] = spectrum.n_steps;
    j["guard_hits"] = spectrum.guard_hits;
    j["logdet_mean"] = spectrum.logdet_mean;
    return j.dump(2);
}

}  // namespace ils
