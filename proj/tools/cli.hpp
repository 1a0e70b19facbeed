#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace ils::cli {

/// Process exit codes.
enum ExitCode : int {
    kOk = 0,
    kFailure = 1,     // unexpected internal error
    kUsage = 2,       // bad flags, out-of-range numeric overrides, invalid grid
    kIoError = 3,     // unreadable input or unwritable output
    kKeyError = 4,    // missing or malformed key file / raw key
    kLossyFormat = 5  // lossy output format requested
};

enum class Subcommand { Encrypt, Decrypt, Analyze, Evaluate };
enum class AnalysisKind { Lyapunov, Bifurcation, Sensitivity, Phase };

struct GridSpec {
    double start = 0.0;
    double stop = 0.0;
    std::size_t count = 0;
};

/// Parses "start:stop:count"; throws std::invalid_argument.
GridSpec parse_grid(const std::string& text);
/// Parses "x,y,z"; throws std::invalid_argument.
std::array<double, 3> parse_triple(const std::string& text);

struct RunConfig {
    Subcommand subcommand = Subcommand::Encrypt;
    std::string in;
    std::string out;
    std::string cipher_in;  // evaluate: optional pre-computed ciphertext
    std::string key_file;
    std::optional<std::string> raw_key;
    std::optional<std::string> format;
    std::string report;
    std::string histogram_csv;

    AnalysisKind analysis = AnalysisKind::Lyapunov;
    std::optional<double> alpha, r, mu, c, x0, y0, z0;
    std::optional<std::string> seed;
    std::optional<std::string> grid;
    std::string swept = "alpha";
    std::optional<std::size_t> steps;
    std::optional<std::size_t> transient;
    std::size_t keep = 200;
    double delta = 1e-16;
    double eps = 1e-12;
    double eps_d = 1e-12;
    double fd_step = 1e-7;
    std::string jacobian = "fd";

    std::size_t corr_samples = 5000;
    std::uint64_t rng_seed = 1;
    std::string pixel = "0,0";
    std::optional<std::string> new_value;
    bool fixed_key = false;
};

int cmd_encrypt(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_decrypt(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_analyze(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_evaluate(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Parses argv-style arguments (without the program name) and dispatches.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ils::cli
