#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <Eigen/LU>
#include <json.hpp>

#include "ils/dynamics.hpp"

using namespace ils;

namespace {

SystemState linear_step(const SystemState& s) { return {2.0 * s.x, 3.0 * s.y, 4.0 * s.z}; }

Jacobian3 linear_jacobian(const SystemState&) {
    Jacobian3 j = Jacobian3::Zero();
    j.diagonal() << 2.0, 3.0, 4.0;
    return j;
}

// True when no guard is active in any of the three updates at state s.
bool guards_inactive(const SystemState& s, const SystemParams& p) {
    const Guards& g = p.guards();
    const double r = p.r(), mu = p.mu(), c = p.c(), a = p.alpha();
    const double u1 = s.x * map_G(s.y, r) + (1 - s.x) * map_H(s.z, mu) + c * (s.y - s.z) * (s.x - 0.5);
    const double x1 = map_F(sat(u1, g), a, g);
    const double u2 = s.y * map_G(s.z, r) + (1 - s.y) * map_H(x1, mu) + c * (s.z - x1) * (s.y - 0.5);
    const double y1 = map_F(sat(u2, g), a, g);
    const double u3 = s.z * map_G(x1, r) + (1 - s.z) * map_H(y1, mu) + c * (x1 - y1) * (s.z - 0.5);
    for (double u : {u1, u2, u3}) {
        if (!(g.eps < u && u < 1 - g.eps)) return false;
        if (std::abs(2 * u - 1) < g.eps_d) return false;
    }
    return true;
}

double max_abs(const Jacobian3& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("finite differences are exact on a linear map") {
    const Jacobian3 j = jacobian_fd(linear_step, {0.3, 0.6, 0.9}, 1e-3);
    CHECK(max_abs(j - linear_jacobian({})) < 1e-12);
    CHECK_THROWS_AS(jacobian_fd(linear_step, {0.3, 0.6, 0.9}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(jacobian_fd(linear_step, {0.3, 0.6, 0.9}, -1e-7), std::invalid_argument);
}

TEST_CASE("central-difference error shrinks by four when the step halves") {
    // Mild parameters keep higher derivatives small so truncation error dominates.
    const SystemParams p(2.0, 3.5, 1.0);
    const SystemState s{0.31, 0.62, 0.27};
    REQUIRE(guards_inactive(s, p));
    const Jacobian3 exact = jacobian_analytic(s, p);
    const double e1 = max_abs(jacobian_fd(s, p, 2e-3) - exact);
    const double e2 = max_abs(jacobian_fd(s, p, 1e-3) - exact);
    CHECK(e1 / e2 > 3.5);
    CHECK(e1 / e2 < 4.5);
}

TEST_CASE("analytic Jacobian matches a high-precision derivative") {
    // Central differences with h = 1e-30 at 60 significant digits, independent script.
    const SystemParams p(10, 4, 5);
    const std::vector<std::pair<SystemState, std::array<double, 9>>> cases{
        {{0.4746, 0.2699, 0.2860},
         {-1405.2681282965544, -2450.5676050634677, -20998.82203859659, 15334.730597557404, 26742.109183857159,
          229143.75638987602, -2115000.1891102757, -3688329.9744498641, -31604010.598065689}},
        {{0.1339, 0.1364, 0.4512},
         {-3.9038549655483811, -3.1583158320581742, -4.7287684932282582, -4373.300314193291, -3473.2266445222056,
          -5295.0493250874487, -13093558.765223195, -10398731.001973337, -15853237.946350815}},
    };
    for (const auto& [s, expected] : cases) {
        const Jacobian3 a = jacobian_analytic(s, p);
        for (Eigen::Index i = 0; i < 3; ++i) {
            for (Eigen::Index j = 0; j < 3; ++j) {
                const double e = expected[static_cast<std::size_t>(3 * i + j)];
                CHECK(std::abs(a(i, j) - e) <= 1e-9 * std::abs(e));
            }
        }
    }
}

TEST_CASE("first Jacobian row matches central differences away from the den singularity") {
    const SystemParams p(10, 4, 5);
    const Guards& g = p.guards();
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int checked = 0;
    while (checked < 100) {
        const SystemState s{unit(rng), unit(rng), unit(rng)};
        if (!guards_inactive(s, p)) continue;
        const double u1 = s.x * map_G(s.y, p.r()) + (1 - s.x) * map_H(s.z, p.mu()) + p.c() * (s.y - s.z) * (s.x - 0.5);
        if (std::abs(2 * sat(u1, g) - 1) < 0.1) continue;
        const Jacobian3 a = jacobian_analytic(s, p);
        const Jacobian3 f = jacobian_fd(s, p, 1e-7);
        for (Eigen::Index j = 0; j < 3; ++j) {
            if (std::abs(a(0, j)) <= 1e-3) continue;
            INFO("state ", s.x, ", ", s.y, ", ", s.z, " column ", j);
            REQUIRE(std::abs(a(0, j) - f(0, j)) / std::abs(a(0, j)) <= 1e-5);
        }
        ++checked;
    }
}

TEST_CASE("central differences converge to the analytic Jacobian as h shrinks") {
    const SystemParams p(10, 4, 5);
    const SystemState s{0.4746, 0.2699, 0.2860};
    const Jacobian3 a = jacobian_analytic(s, p);
    double previous = std::numeric_limits<double>::infinity();
    // Entries reach 3e7 here, so h must fall well below 1e-7 before the stencil is linear.
    for (double h : {1e-6, 1e-7, 1e-8, 1e-9, 1e-10, 1e-11}) {
        const double err = max_abs(jacobian_fd(s, p, h) - a) / max_abs(a);
        CHECK(err < previous);
        previous = err;
    }
    CHECK(previous < 1e-6);
}

TEST_CASE("guard activity zeroes the corresponding Jacobian row") {
    SUBCASE("den floor: u1 is exactly one half") {
        // r = 2 and y = z = 1/2 make G(y) = H(z) = 1/2, so u1 = 1/2 for x = 1/2.
        const SystemParams p(10, 2, 5);
        const Jacobian3 j = jacobian_analytic({0.5, 0.5, 0.5}, p);
        CHECK(j.row(0).isZero(0.0));
        CHECK(has_zero_row(j));
    }
    SUBCASE("saturation: u1 above one") {
        const SystemParams p(10, 4, 5);
        // u1 = G(0.5) + c * 0.5 * 0.5 > 1.
        const Jacobian3 j = jacobian_analytic({1.0, 0.5, 0.0}, p);
        CHECK(j.row(0).isZero(0.0));
        CHECK(j(1, 0) == 0.0);  // dy1/dx flows only through dx1/dx
        CHECK(j.allFinite());
    }
    SUBCASE("random states with a guard firing") {
        const SystemParams p(109.1686, 3.957, 14.4175);
        SystemState s{0.31, 0.37, 0.41};
        int guarded = 0;
        for (int n = 0; n < 20000 && guarded < 20; ++n) {
            if (!guards_inactive(s, p)) {
                CHECK(has_zero_row(jacobian_analytic(s, p)));
                ++guarded;
            }
            s = ils_step(s, p);
        }
        CHECK(guarded > 0);
    }
}

TEST_CASE("Jacobian entries are finite") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const SystemParams p(109.1686, 3.957, 14.4175);
    for (int i = 0; i < 1000; ++i) {
        const Jacobian3 j = jacobian_analytic({unit(rng), unit(rng), unit(rng)}, p);
        REQUIRE(j.allFinite());
    }
}

TEST_CASE("QR spectrum of a constant linear map") {
    const LyapunovSpectrum s = lyapunov_qr(linear_step, linear_jacobian, {1, 1, 1}, 200);
    CHECK(s.lambdas[0] == doctest::Approx(std::log(4.0)).epsilon(1e-14));
    CHECK(s.lambdas[1] == doctest::Approx(std::log(3.0)).epsilon(1e-14));
    CHECK(s.lambdas[2] == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(s.guard_hits == 0);
    CHECK(s.contributing_steps == 200);
}

TEST_CASE("finite-time exponents of a constant linear map") {
    const LyapunovSpectrum s = finite_time_exponents(linear_step, linear_jacobian, {1, 1, 1}, 50);
    CHECK(s.lambdas[0] == doctest::Approx(std::log(4.0)).epsilon(1e-14));
    CHECK(s.lambdas[1] == doctest::Approx(std::log(3.0)).epsilon(1e-14));
    CHECK(s.lambdas[2] == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(std::abs(s.sum() - s.logdet_mean) < 1e-12);
}

TEST_CASE("collapsed tangent frame is reported with its step") {
    const JacobianFunction rank_deficient = [](const SystemState&) {
        Jacobian3 j;
        j << 1, 0, 0, 1, 0, 0, 0, 0, 1;  // zero column, no zero row
        return j;
    };
    try {
        lyapunov_qr([](const SystemState& s) { return s; }, rank_deficient, {0.5, 0.5, 0.5}, 100);
        FAIL("expected DegenerateFrameError");
    } catch (const DegenerateFrameError& e) {
        CHECK(e.step() == 0);
    }
}

TEST_CASE("Lyapunov run length is validated") {
    LyapunovOptions opts;
    opts.n_steps = 99;
    CHECK_THROWS_AS(lyapunov_qr({0.3, 0.3, 0.3}, SystemParams(10, 4, 5), opts), std::invalid_argument);
    CHECK_THROWS_AS(finite_time_exponents(linear_step, linear_jacobian, {1, 1, 1}, 0), std::invalid_argument);
}

TEST_CASE("QR sum rule and ordering on the map") {
    for (JacobianSource src : {JacobianSource::Analytic, JacobianSource::FiniteDifference}) {
        for (const SystemParams& p : {SystemParams(10, 4, 5), SystemParams(74.7631, 3.8647, 11.3289),
                                      SystemParams(5.2, 3.7, 8.3)}) {
            LyapunovOptions opts;
            opts.n_steps = 2000;
            opts.source = src;
            const LyapunovSpectrum s = lyapunov_qr({0.31, 0.37, 0.41}, p, opts);
            CHECK(s.lambdas[0] >= s.lambdas[1]);
            CHECK(s.lambdas[1] >= s.lambdas[2]);
            CHECK(std::abs(s.sum() - s.logdet_mean) <= 1e-8);
            CHECK(s.contributing_steps + s.guard_hits == s.n_steps);
        }
    }
}

TEST_CASE("singular values multiply to the determinant") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> entry(-3.0, 3.0);
    for (int n = 0; n < 200; ++n) {
        Jacobian3 j;
        for (Eigen::Index k = 0; k < 9; ++k) j(k / 3, k % 3) = entry(rng);
        const auto sv = singular_values(j);
        CHECK(sv[0] >= sv[1]);
        CHECK(sv[1] >= sv[2]);
        const double det = std::abs(j.determinant());
        CHECK(std::abs(sv[0] * sv[1] * sv[2] - det) <= 1e-9 * std::max(det, 1.0));
    }
    const Jacobian3 d = (Jacobian3() << 0, 0, 5, 0, -2, 0, 1, 0, 0).finished();
    CHECK(singular_values(d) == std::array<double, 3>{5.0, 2.0, 1.0});
}

TEST_CASE("finite-time exponents satisfy the sum rule and majorize the QR spectrum") {
    const SystemState seed{0.31, 0.37, 0.41};
    for (const SystemParams& p : {SystemParams(109.1686, 3.957, 14.4175), SystemParams(10, 4, 5)}) {
        for (JacobianSource src : {JacobianSource::Analytic, JacobianSource::FiniteDifference}) {
            const LyapunovSpectrum ft = finite_time_exponents(seed, p, 3000, kDefaultTransient, src);
            LyapunovOptions opts;
            opts.n_steps = 3000;
            opts.source = src;
            const LyapunovSpectrum qr = lyapunov_qr(seed, p, opts);
            CHECK(std::abs(ft.sum() - ft.logdet_mean) <= 1e-8);
            CHECK(ft.guard_hits == qr.guard_hits);
            CHECK(ft.lambdas[0] >= ft.lambdas[1]);
            CHECK(ft.lambdas[1] >= ft.lambdas[2]);
            CHECK(ft.lambdas[0] >= qr.lambdas[0] - 1e-9);
            CHECK(ft.lambdas[0] + ft.lambdas[1] >= qr.lambdas[0] + qr.lambdas[1] - 1e-9);
            CHECK(std::abs(ft.sum() - qr.sum()) <= 1e-8);
        }
    }
}

TEST_CASE("bifurcation scan") {
    const SystemParams fixed = bifurcation_defaults();
    const SystemState seed{0.3, 0.3, 0.3};

    SUBCASE("one grid point reduces to an orbit") {
        BifurcationOptions opts{1000, 200};
        const BifurcationScan scan = bifurcation_scan(SweptParameter::Alpha, {10.0}, fixed, seed, opts);
        REQUIRE(scan.samples.size() == 1);
        CHECK(scan.samples[0] == generate_orbit(seed, fixed, 800, 200).states);
    }
    SUBCASE("sweeping r and mu uses the swept value") {
        const BifurcationScan r_scan = bifurcation_scan(SweptParameter::R, {3.9}, fixed, seed, {100, 10});
        CHECK(r_scan.samples[0] == generate_orbit(seed, fixed.with_r(3.9), 90, 10).states);
        const BifurcationScan mu_scan = bifurcation_scan(SweptParameter::Mu, {7.5}, fixed, seed, {100, 10});
        CHECK(mu_scan.samples[0] == generate_orbit(seed, fixed.with_mu(7.5), 90, 10).states);
    }
    SUBCASE("alpha in [3, 6] spreads over the cube") {
        const BifurcationScan scan = bifurcation_scan(SweptParameter::Alpha, linspace(3, 6, 61), fixed, seed);
        int spread = 0;
        for (const auto& block : scan.samples) {
            REQUIRE(block.size() == 200);
            bool all_spread = true;
            for (std::size_t k = 0; k < 3; ++k) {
                double mean = 0, sq = 0;
                for (const auto& st : block) {
                    REQUIRE(st[k] >= 0.0);
                    REQUIRE(st[k] <= 1.0);
                    mean += st[k];
                }
                mean /= block.size();
                for (const auto& st : block) sq += (st[k] - mean) * (st[k] - mean);
                if (std::sqrt(sq / block.size()) <= 0.01) all_spread = false;
            }
            spread += all_spread ? 1 : 0;
        }
        CHECK(spread >= 0.9 * 61);
    }
    SUBCASE("invalid requests") {
        CHECK_THROWS_AS(bifurcation_scan(SweptParameter::Alpha, {}, fixed, seed), std::invalid_argument);
        CHECK_THROWS_AS(bifurcation_scan(SweptParameter::Alpha, {4, 4}, fixed, seed), std::invalid_argument);
        CHECK_THROWS_AS(bifurcation_scan(SweptParameter::Alpha, {5, 4}, fixed, seed), std::invalid_argument);
        CHECK_THROWS_AS(bifurcation_scan(SweptParameter::Alpha, {5}, fixed, seed, {10, 11}), std::invalid_argument);
        CHECK_THROWS_AS(bifurcation_scan(SweptParameter::R, {4.5}, fixed, seed), std::invalid_argument);
    }
}

TEST_CASE("linspace and parameter names") {
    const auto g = linspace(3, 6, 4);
    REQUIRE(g.size() == 4);
    CHECK(g[0] == 3);
    CHECK(g[1] == doctest::Approx(4));
    CHECK(g[3] == 6);
    CHECK(linspace(2, 9, 1) == std::vector<double>{2});
    CHECK_THROWS_AS(linspace(0, 1, 0), std::invalid_argument);
    CHECK(parse_swept_parameter("mu") == SweptParameter::Mu);
    CHECK(to_string(SweptParameter::R) == "r");
    CHECK_THROWS_AS(parse_swept_parameter("c"), std::invalid_argument);
}

TEST_CASE("sensitivity pair") {
    const SystemParams p(10, 4, 5);
    SUBCASE("zero perturbation gives identical orbits") {
        const SensitivityTrace t = sensitivity_pair({0.3, 0.3, 0.3}, 0.0, p);
        CHECK(t.max_difference() == 0.0);
        CHECK(t.base.states == t.perturbed.states);
    }
    SUBCASE("1e-16 perturbation diverges within 50 steps") {
        const SensitivityTrace t = sensitivity_pair({0.3, 0.3, 0.3}, 1e-16, p, 50);
        CHECK(t.base.states.size() == 50);
        CHECK(t.perturbed.states.size() == 50);
        CHECK(t.differences.size() == 50);
        CHECK(t.max_difference() > 0.1);
        CHECK(t.base.transient_discarded == 0);
    }
}

TEST_CASE("phase samples use the default transient") {
    const SystemParams p(5.2, 3.7, 8.3);
    const Orbit o = phase_samples({0.3, 0.3, 0.3}, p, 100);
    CHECK(o.states == generate_orbit({0.3, 0.3, 0.3}, p, kDefaultTransient, 100).states);
    CHECK(o.transient_discarded == kDefaultTransient);
}

TEST_CASE("scan CSV and spectrum JSON layout") {
    const BifurcationScan scan =
        bifurcation_scan(SweptParameter::Alpha, {4.0, 5.0}, bifurcation_defaults(), {0.3, 0.3, 0.3}, {20, 5});
    std::ostringstream csv;
    write_scan_csv(csv, scan);
    std::istringstream lines(csv.str());
    std::string line;
    std::getline(lines, line);
    CHECK(line == "param,coord,iter,value");
    int rows = 0, x_rows_at_4 = 0;
    while (std::getline(lines, line)) {
        ++rows;
        if (line.rfind("4,x,", 0) == 0) ++x_rows_at_4;
    }
    CHECK(rows == 2 * 3 * 5);
    CHECK(x_rows_at_4 == 5);

    const SystemParams p(10, 4, 5);
    LyapunovOptions opts;
    opts.n_steps = 200;
    const LyapunovSpectrum s = lyapunov_qr({0.3, 0.3, 0.3}, p, opts);
    const auto j = nlohmann::json::parse(spectrum_json(s, p, {0.3, 0.3, 0.3}));
    for (const char* key : {"alpha", "r", "mu", "c", "seed", "lambdas", "n_steps", "guard_hits", "logdet_mean"}) {
        CHECK(j.contains(key));
    }
    CHECK(j["lambdas"].size() == 3);
    CHECK(j["n_steps"] == 200);
}
