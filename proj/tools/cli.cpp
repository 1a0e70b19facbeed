#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ils/chaos.hpp"
#include "ils/cipher.hpp"
#include "ils/dynamics.hpp"
#include "ils/image_io.hpp"
#include "ils/metrics.hpp"

namespace ils::cli {

namespace fs = std::filesystem;

namespace {

// Nominal figure quoted for six 64-bit real parameters, and the entropy
// actually reachable through the 16-bit word schedule (6 x 16 bits).
constexpr int kNominalKeySpaceBits = 309;
constexpr int kDerivedKeySpaceBits = 96;

class MissingKey : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

int guarded(std::ostream& err, const std::function<int()>& body) {
    try {
        return body();
    } catch (const KeyFormatError& e) {
        err << "key error: " << e.what() << '\n';
        return kKeyError;
    } catch (const MissingKey& e) {
        err << "key error: " << e.what() << '\n';
        return kKeyError;
    } catch (const LossyFormatError& e) {
        err << "format error: " << e.what() << '\n';
        return kLossyFormat;
    } catch (const ImageIoError& e) {
        err << "i/o error: " << e.what() << '\n';
        return kIoError;
    } catch (const std::invalid_argument& e) {
        err << "invalid argument: " << e.what() << '\n';
        return kUsage;
    } catch (const std::out_of_range& e) {
        err << "invalid argument: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
}

void require_input(const std::string& path, const char* what) {
    if (path.empty()) throw std::invalid_argument(std::string("missing ") + what + " path");
    if (!fs::is_regular_file(path)) throw ImageIoError(std::string(what) + " '" + path + "' does not exist");
}

void require_output(const std::string& path, const char* what) {
    if (path.empty()) throw std::invalid_argument(std::string("missing ") + what + " path");
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty() && !fs::is_directory(parent)) {
        throw ImageIoError(std::string(what) + " directory '" + parent.string() + "' does not exist");
    }
}

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingKey("cannot read key file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out || !(out << text)) throw ImageIoError("cannot write '" + path + "'");
}

std::optional<KeyMaterial> supplied_key(const RunConfig& cfg) {
    if (cfg.raw_key) return keys_from_hex(*cfg.raw_key);
    if (!cfg.key_file.empty()) {
        if (!fs::is_regular_file(cfg.key_file)) throw MissingKey("key file '" + cfg.key_file + "' not found");
        return keys_from_hex(read_text(cfg.key_file));
    }
    return std::nullopt;
}

std::pair<std::size_t, std::size_t> parse_pixel(const std::string& text) {
    const auto comma = text.find(',');
    if (comma == std::string::npos) throw std::invalid_argument("pixel must be row,col: '" + text + "'");
    try {
        const std::string a = text.substr(0, comma);
        const std::string b = text.substr(comma + 1);
        std::size_t used_a = 0, used_b = 0;
        const long long row = std::stoll(a, &used_a);
        const long long col = std::stoll(b, &used_b);
        if (used_a != a.size() || used_b != b.size() || row < 0 || col < 0) throw std::invalid_argument(text);
        return {static_cast<std::size_t>(row), static_cast<std::size_t>(col)};
    } catch (const std::logic_error&) {
        throw std::invalid_argument("pixel must be row,col with non-negative integers: '" + text + "'");
    }
}

std::string default_key_path(const std::string& out) { return out + ".key"; }

// Writes to the file when a path is given, else to `fallback`.
void emit(const std::string& path, std::ostream& fallback, const std::function<void(std::ostream&)>& writer) {
    if (path.empty()) {
        writer(fallback);
        return;
    }
    std::ofstream file(path);
    if (!file) throw ImageIoError("cannot write '" + path + "'");
    writer(file);
    if (!file) throw ImageIoError("failed writing '" + path + "'");
}

}  // namespace

GridSpec parse_grid(const std::string& text) {
    std::stringstream ss(text);
    std::string a, b, n;
    if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, n) || n.empty()) {
        throw std::invalid_argument("grid must be start:stop:count, got '" + text + "'");
    }
    GridSpec g;
    try {
        std::size_t used = 0;
        g.start = std::stod(a, &used);
        if (used != a.size()) throw std::invalid_argument(a);
        g.stop = std::stod(b, &used);
        if (used != b.size()) throw std::invalid_argument(b);
        const long long count = std::stoll(n, &used);
        if (used != n.size() || count < 1) throw std::invalid_argument(n);
        g.count = static_cast<std::size_t>(count);
    } catch (const std::logic_error&) {
        throw std::invalid_argument("grid must be start:stop:count, got '" + text + "'");
    }
    if (g.count > 1 && !(g.stop > g.start)) throw std::invalid_argument("grid stop must exceed start");
    return g;
}

std::array<double, 3> parse_triple(const std::string& text) {
    std::stringstream ss(text);
    std::array<double, 3> v{};
    std::string part;
    for (std::size_t i = 0; i < 3; ++i) {
        if (!std::getline(ss, part, ',')) throw std::invalid_argument("expected three comma-separated values: '" + text + "'");
        try {
            std::size_t used = 0;
            v[i] = std::stod(part, &used);
            if (used != part.size()) throw std::invalid_argument(part);
        } catch (const std::logic_error&) {
            throw std::invalid_argument("not a number: '" + part + "'");
        }
    }
    if (std::getline(ss, part, ',')) throw std::invalid_argument("expected exactly three values: '" + text + "'");
    return v;
}

int cmd_encrypt(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        require_input(cfg.in, "input");
        require_output(cfg.out, "output");
        const ImageFormat format = resolve_format(cfg.out, cfg.format);
        const ImageBuffer plain = read_image(cfg.in);

        const bool derived = !cfg.raw_key.has_value();
        const KeyMaterial keys = derived ? derive_keys(plain) : keys_from_hex(*cfg.raw_key);
        const std::string key_path = cfg.key_file.empty() ? default_key_path(cfg.out) : cfg.key_file;
        if (derived) require_output(key_path, "key file");

        write_image(cfg.out, encrypt(plain, keys), format);
        if (derived) write_text(key_path, keys.hex() + "\n");

        out << "encrypted " << plain.height() << "x" << plain.width() << " -> " << cfg.out << '\n';
        if (derived) out << "key written to " << key_path << '\n';
        return static_cast<int>(kOk);
    });
}

int cmd_decrypt(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        require_input(cfg.in, "input");
        require_output(cfg.out, "output");
        const ImageFormat format = resolve_format(cfg.out, cfg.format);
        const std::optional<KeyMaterial> keys = supplied_key(cfg);
        if (!keys) throw MissingKey("decryption needs --key-file or --raw-key");
        const ImageBuffer cipher = read_image(cfg.in);
        write_image(cfg.out, decrypt(cipher, *keys), format);
        out << "decrypted " << cipher.height() << "x" << cipher.width() << " -> " << cfg.out << '\n';
        return static_cast<int>(kOk);
    });
}

namespace {

struct AnalysisSetup {
    SystemParams params;
    SystemState seed;
};

AnalysisSetup analysis_setup(const RunConfig& cfg) {
    // Lyapunov runs default to the reference point of the exponent sweeps;
    // the other analyses use the one-parameter scan defaults.
    double alpha = 10.0, r = 4.0, mu = 5.0;
    SystemState seed{0.3, 0.3, 0.3};
    if (cfg.analysis == AnalysisKind::Lyapunov) {
        alpha = 74.7631;
        r = 3.8647;
        mu = 11.3289;
        seed = {0.31, 0.37, 0.41};
    }
    if (const auto keys = supplied_key(cfg)) {
        alpha = keys->alpha;
        r = keys->r;
        mu = keys->mu;
        seed = keys->seed();
    }
    if (cfg.seed) {
        const auto t = parse_triple(*cfg.seed);
        seed = {t[0], t[1], t[2]};
    }
    if (cfg.x0) seed.x = *cfg.x0;
    if (cfg.y0) seed.y = *cfg.y0;
    if (cfg.z0) seed.z = *cfg.z0;
    return {SystemParams(cfg.alpha.value_or(alpha), cfg.r.value_or(r), cfg.mu.value_or(mu),
                         cfg.c.value_or(kDefaultCoupling), Guards{cfg.eps, cfg.eps_d}),
            seed};
}

std::string default_grid(SweptParameter p) {
    switch (p) {
        case SweptParameter::Alpha: return "3:6:301";
        case SweptParameter::R: return "3.7:4:301";
        case SweptParameter::Mu: return "5:10:301";
    }
    return "";
}

JacobianSource parse_jacobian(const std::string& name) {
    if (name == "fd") return JacobianSource::FiniteDifference;
    if (name == "analytic") return JacobianSource::Analytic;
    throw std::invalid_argument("jacobian must be 'fd' or 'analytic'");
}

}  // namespace

int cmd_analyze(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const AnalysisSetup setup = analysis_setup(cfg);
        if (!cfg.out.empty()) require_output(cfg.out, "output");
        if (!cfg.report.empty()) require_output(cfg.report, "report");

        switch (cfg.analysis) {
            case AnalysisKind::Lyapunov: {
                LyapunovOptions opts;
                opts.n_steps = cfg.steps.value_or(10000);
                opts.n_transient = cfg.transient.value_or(kDefaultTransient);
                opts.source = parse_jacobian(cfg.jacobian);
                opts.fd_step = cfg.fd_step;
                const LyapunovSpectrum spectrum = lyapunov_qr(setup.seed, setup.params, opts);
                const std::string json = spectrum_json(spectrum, setup.params, setup.seed);
                const std::string report_path = cfg.report.empty() ? cfg.out : cfg.report;
                if (!report_path.empty()) {
                    write_text(report_path, json + "\n");
                    out << std::setprecision(8) << "lambdas " << spectrum.lambdas[0] << ' ' << spectrum.lambdas[1]
                        << ' ' << spectrum.lambdas[2] << " (guard hits " << spectrum.guard_hits << ")\n";
                } else {
                    out << json << '\n';
                }
                break;
            }
            case AnalysisKind::Bifurcation: {
                const SweptParameter swept = parse_swept_parameter(cfg.swept);
                const GridSpec g = parse_grid(cfg.grid.value_or(default_grid(swept)));
                BifurcationOptions opts;
                opts.n_iter = cfg.steps.value_or(1000);
                opts.n_keep = cfg.keep;
                const BifurcationScan scan =
                    bifurcation_scan(swept, linspace(g.start, g.stop, g.count), setup.params, setup.seed, opts);
                emit(cfg.out, out, [&](std::ostream& o) { write_scan_csv(o, scan); });
                break;
            }
            case AnalysisKind::Sensitivity: {
                if (!(cfg.delta >= 0.0)) throw std::invalid_argument("delta must be >= 0");
                const SensitivityTrace trace =
                    sensitivity_pair(setup.seed, cfg.delta, setup.params, cfg.steps.value_or(50));
                emit(cfg.out, out, [&](std::ostream& o) { write_sensitivity_csv(o, trace); });
                if (!cfg.out.empty()) out << "max difference " << trace.max_difference() << '\n';
                break;
            }
            case AnalysisKind::Phase: {
                const Orbit orbit = generate_orbit(setup.seed, setup.params, cfg.transient.value_or(kDefaultTransient),
                                                   cfg.steps.value_or(5000));
                emit(cfg.out, out, [&](std::ostream& o) { write_orbit_csv(o, orbit); });
                break;
            }
        }
        return static_cast<int>(kOk);
    });
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        require_input(cfg.in, "input");
        if (!cfg.cipher_in.empty()) require_input(cfg.cipher_in, "cipher");
        if (!cfg.report.empty()) require_output(cfg.report, "report");
        if (!cfg.histogram_csv.empty()) require_output(cfg.histogram_csv, "histogram");

        const ImageBuffer plain = read_image(cfg.in);
        const std::optional<KeyMaterial> supplied = supplied_key(cfg);
        const KeyMaterial keys = supplied ? *supplied : derive_keys(plain);
        const ImageBuffer cipher = cfg.cipher_in.empty() ? encrypt(plain, keys) : read_image(cfg.cipher_in);
        require_same_shape(plain, cipher);

        const auto [row, col] = parse_pixel(cfg.pixel);
        if (row >= plain.height() || col >= plain.width()) throw std::out_of_range("differential pixel outside image");
        std::array<std::uint8_t, 3> replacement{};
        if (cfg.new_value) {
            const auto v = parse_triple(*cfg.new_value);
            for (std::size_t i = 0; i < 3; ++i) {
                if (v[i] < 0 || v[i] > 255) throw std::invalid_argument("pixel values must lie in [0, 255]");
                replacement[i] = static_cast<std::uint8_t>(v[i]);
            }
        } else {
            for (Channel ch : kAllChannels) replacement[static_cast<std::size_t>(ch)] = plain.at(row, col, ch);
            replacement[0] = static_cast<std::uint8_t>(replacement[0] ^ 1u);
        }
        const KeyMode mode = cfg.fixed_key ? KeyMode::FixedKey : KeyMode::PlaintextKeyed;
        const DifferentialResult diff = differential_test(plain, row, col, replacement, mode);

        MetricsReport cipher_stats = image_statistics(cipher, cfg.corr_samples, cfg.rng_seed);
        cipher_stats.npcr = diff.npcr;
        cipher_stats.uaci = diff.uaci;

        nlohmann::json report = to_json(cipher_stats);
        report["height"] = plain.height();
        report["width"] = plain.width();
        report["key"] = keys.hex();
        report["key_source"] = supplied ? "supplied" : "derived";
        report["params"] = {{"alpha", keys.alpha}, {"r", keys.r}, {"mu", keys.mu}, {"c", kDefaultCoupling},
                            {"x0", keys.x0},       {"y0", keys.y0}, {"z0", keys.z0}};
        report["differential"] = {{"pixel", {row, col}},
                                  {"new_value", replacement},
                                  {"mode", mode == KeyMode::PlaintextKeyed ? "plaintext-keyed" : "fixed-key"}};
        report["key_space_bits"] = {{"nominal", kNominalKeySpaceBits}, {"derived", kDerivedKeySpaceBits}};
        report["correlation_samples"] = cfg.corr_samples;
        report["rng_seed"] = cfg.rng_seed;
        try {
            report["plain"] = to_json(image_statistics(plain, cfg.corr_samples, cfg.rng_seed));
            report["plain"].erase("npcr");
            report["plain"].erase("uaci");
        } catch (const UndefinedCorrelation&) {
            report["plain"] = nullptr;  // flat plaintext channels have no correlation
        }

        emit(cfg.report, out, [&](std::ostream& o) { o << report.dump(2) << '\n'; });
        if (!cfg.histogram_csv.empty()) {
            emit(cfg.histogram_csv, out, [&](std::ostream& o) { write_histogram_csv(o, cipher_stats); });
        }
        if (!cfg.report.empty()) {
            out << std::setprecision(6) << "entropy " << cipher_stats.entropy[0] << ' ' << cipher_stats.entropy[1]
                << ' ' << cipher_stats.entropy[2] << "; npcr " << diff.npcr << "; uaci " << diff.uaci << '\n';
        }
        return static_cast<int>(kOk);
    });
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    CLI::App app{"3D-ILS hyperchaotic map toolkit: image cipher, dynamics analysis, cipher evaluation", "ils3d"};
    app.require_subcommand(1);

    auto add_key_flags = [&cfg](CLI::App* sub) {
        sub->add_option("--key-file", cfg.key_file, "Key file holding 64 hex characters");
        sub->add_option("--raw-key", cfg.raw_key, "Raw 256-bit key as 64 hex characters");
    };

    CLI::App* enc = app.add_subcommand("encrypt", "Encrypt an RGB image");
    enc->add_option("--in", cfg.in, "Plaintext image (PNG or PPM)")->required();
    enc->add_option("--out", cfg.out, "Cipher image")->required();
    enc->add_option("--format", cfg.format, "Output format: png or ppm");
    add_key_flags(enc);

    CLI::App* dec = app.add_subcommand("decrypt", "Decrypt a cipher image");
    dec->add_option("--in", cfg.in, "Cipher image")->required();
    dec->add_option("--out", cfg.out, "Recovered plaintext image")->required();
    dec->add_option("--format", cfg.format, "Output format: png or ppm");
    add_key_flags(dec);

    CLI::App* ana = app.add_subcommand("analyze", "Run a dynamics analysis of the map");
    std::string kind;
    ana->add_option("kind", kind, "lyapunov | bifurcation | sensitivity | phase")
        ->required()
        ->check(CLI::IsMember({"lyapunov", "bifurcation", "sensitivity", "phase"}));
    ana->add_option("--out", cfg.out, "CSV (or JSON for lyapunov) output path; stdout when omitted");
    ana->add_option("--report", cfg.report, "JSON report path (lyapunov)");
    ana->add_option("--alpha", cfg.alpha);
    ana->add_option("--r", cfg.r);
    ana->add_option("--mu", cfg.mu);
    ana->add_option("--c", cfg.c, "Coupling coefficient (default 0.077)");
    ana->add_option("--x0", cfg.x0);
    ana->add_option("--y0", cfg.y0);
    ana->add_option("--z0", cfg.z0);
    ana->add_option("--seed", cfg.seed, "Initial state x,y,z");
    ana->add_option("--grid", cfg.grid, "Bifurcation grid start:stop:count");
    ana->add_option("--param", cfg.swept, "Swept parameter for bifurcation: alpha, r or mu");
    ana->add_option("--steps", cfg.steps, "Steps / iterations / samples");
    ana->add_option("--transient", cfg.transient, "Transient iterations discarded");
    ana->add_option("--keep", cfg.keep, "Bifurcation iterates kept per grid point");
    ana->add_option("--delta", cfg.delta, "Sensitivity perturbation");
    ana->add_option("--eps", cfg.eps, "Saturation margin");
    ana->add_option("--eps-d", cfg.eps_d, "Denominator floor");
    ana->add_option("--fd-step", cfg.fd_step, "Finite-difference step");
    ana->add_option("--jacobian", cfg.jacobian, "fd or analytic")->check(CLI::IsMember({"fd", "analytic"}));
    add_key_flags(ana);

    CLI::App* eva = app.add_subcommand("evaluate", "Encrypt and report statistical security metrics");
    eva->add_option("--in", cfg.in, "Plaintext image")->required();
    eva->add_option("--cipher", cfg.cipher_in, "Existing cipher image to evaluate instead of encrypting");
    eva->add_option("--report", cfg.report, "JSON report path; stdout when omitted");
    eva->add_option("--histogram-csv", cfg.histogram_csv, "Cipher histogram CSV path");
    eva->add_option("--samples", cfg.corr_samples, "Correlation pairs per direction and channel");
    eva->add_option("--rng-seed", cfg.rng_seed, "Seed for correlation sampling");
    eva->add_option("--pixel", cfg.pixel, "Differential test pixel row,col");
    eva->add_option("--new-value", cfg.new_value, "Replacement RGB for the differential pixel");
    eva->add_flag("--fixed-key", cfg.fixed_key, "Reuse the original key for the modified plaintext");
    add_key_flags(eva);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n';
        return kUsage;
    }

    if (enc->parsed()) {
        cfg.subcommand = Subcommand::Encrypt;
        return cmd_encrypt(cfg, out, err);
    }
    if (dec->parsed()) {
        cfg.subcommand = Subcommand::Decrypt;
        return cmd_decrypt(cfg, out, err);
    }
    if (ana->parsed()) {
        cfg.subcommand = Subcommand::Analyze;
        cfg.analysis = kind == "lyapunov"      ? AnalysisKind::Lyapunov
                       : kind == "bifurcation" ? AnalysisKind::Bifurcation
                       : kind == "sensitivity" ? AnalysisKind::Sensitivity
                                               : AnalysisKind::Phase;
        return cmd_analyze(cfg, out, err);
    }
    cfg.subcommand = Subcommand::Evaluate;
    return cmd_evaluate(cfg, out, err);
}

}  // namespace ils::cli
