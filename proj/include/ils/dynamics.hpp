#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ils/chaos.hpp"

namespace ils {

/// Row i holds d(next state)_i / d(current state)_j.
using Jacobian3 = Eigen::Matrix3d;

using StepFunction = std::function<SystemState(const SystemState&)>;
using JacobianFunction = std::function<Jacobian3(const SystemState&)>;

inline constexpr double kDefaultFdStep = 1e-7;

/// Exact chain-rule Jacobian of ils_step. Rows whose update is clamped by sat
/// or sits inside the den floor are exactly zero.
Jacobian3 jacobian_analytic(const SystemState& s, const SystemParams& p);

/// Central differences of an arbitrary step map; column j perturbs coordinate j.
/// Throws std::invalid_argument when h <= 0.
Jacobian3 jacobian_fd(const StepFunction& step, const SystemState& s, double h);
Jacobian3 jacobian_fd(const SystemState& s, const SystemParams& p, double h = kDefaultFdStep);

enum class JacobianSource { Analytic, FiniteDifference };

/// Thrown when a tangent-frame diagonal collapses to zero on a step whose
/// Jacobian has no guard-zeroed row.
class DegenerateFrameError : public std::runtime_error {
public:
    DegenerateFrameError(std::size_t step, const std::string& what)
        : std::runtime_error(what), step_(step) {}
    std::size_t step() const { return step_; }

private:
    std::size_t step_;
};

struct LyapunovSpectrum {
    std::array<double, 3> lambdas{};  // descending
    std::size_t n_steps = 0;          // requested steps
    std::size_t contributing_steps = 0;
    std::size_t guard_hits = 0;       // steps skipped because a Jacobian row was zero
    double logdet_mean = 0.0;         // mean log|det J| over the contributing steps

    double sum() const { return lambdas[0] + lambdas[1] + lambdas[2]; }
};

struct LyapunovOptions {
    std::size_t n_transient = kDefaultTransient;
    std::size_t n_steps = 10000;
    JacobianSource source = JacobianSource::FiniteDifference;
    double fd_step = kDefaultFdStep;
};

/// True when some row of the Jacobian is identically zero (a guard fired).
bool has_zero_row(const Jacobian3& j);

/// Tangent-space QR iteration along the orbit of `step` starting at `start`
/// (no transient handling, no clamping). Guard-hit steps advance the orbit but
/// contribute neither to the exponents nor to logdet_mean.
LyapunovSpectrum lyapunov_qr(const StepFunction& step, const JacobianFunction& jacobian,
                             const SystemState& start, std::size_t n_steps);

/// 3D-ILS spectrum from a sat-clamped seed after opts.n_transient steps.
/// Requires opts.n_steps >= 100.
LyapunovSpectrum lyapunov_qr(const SystemState& seed, const SystemParams& p,
                             const LyapunovOptions& opts = {});

/// Averages of log singular values of the per-step Jacobians. This bounds the
/// QR spectrum from above in the majorization sense but is not equal to it.
LyapunovSpectrum finite_time_exponents(const StepFunction& step,
                                       const JacobianFunction& jacobian,
                                       const SystemState& start, std::size_t n_steps);
LyapunovSpectrum finite_time_exponents(const SystemState& seed, const SystemParams& p,
                                       std::size_t n_steps,
                                       std::size_t n_transient = kDefaultTransient,
                                       JacobianSource source = JacobianSource::Analytic);

/// Singular values of a 3x3 matrix, descending.
std::array<double, 3> singular_values(const Jacobian3& j);

enum class SweptParameter { Alpha, R, Mu };

std::string to_string(SweptParameter p);
SweptParameter parse_swept_parameter(const std::string& name);

struct BifurcationScan {
    SweptParameter swept = SweptParameter::Alpha;
    std::vector<double> grid;
    std::vector<std::vector<SystemState>> samples;  // one block per grid value
};

struct BifurcationOptions {
    std::size_t n_iter = 1000;
    std::size_t n_keep = 200;
};

/// Default scan point for one-parameter sweeps: alpha = 10, r = 4, mu = 5.
SystemParams bifurcation_defaults();

/// For each grid value, iterates n_iter times and keeps the last n_keep states.
/// Throws std::invalid_argument on an empty or non-increasing grid or when
/// n_keep is 0 or exceeds n_iter.
BifurcationScan bifurcation_scan(SweptParameter swept, const std::vector<double>& grid,
                                 const SystemParams& fixed, const SystemState& seed,
                                 const BifurcationOptions& opts = {});

/// `count` evenly spaced values from start to stop inclusive.
std::vector<double> linspace(double start, double stop, std::size_t count);

struct SensitivityTrace {
    double delta = 0.0;
    Orbit base;
    Orbit perturbed;
    std::vector<std::array<double, 3>> differences;  // |base - perturbed| per step

    double max_difference() const;
};

/// Runs orbits from seed and seed + (delta, delta, delta) with no transient.
SensitivityTrace sensitivity_pair(const SystemState& seed, double delta, const SystemParams& p,
                                  std::size_t n_steps = 50);

Orbit phase_samples(const SystemState& seed, const SystemParams& p, std::size_t n);

// CSV/JSON emission. Scan rows are `param,coord,iter,value`.
void write_scan_csv(std::ostream& out, const BifurcationScan& scan);
void write_sensitivity_csv(std::ostream& out, const SensitivityTrace& trace);
void write_orbit_csv(std::ostream& out, const Orbit& orbit);
std::string spectrum_json(const LyapunovSpectrum& spectrum, const SystemParams& p,
                          const SystemState& seed);

}  // namespace ils
