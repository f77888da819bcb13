#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cspath/constraints.hpp"
#include "cspath/report.hpp"

namespace cspath::cli {

enum ExitCode : int {
    exit_ok = 0,
    exit_other = 1,
    exit_parse = 2,
    exit_precondition = 3,
    exit_refusal = 4,
};

inline const std::vector<std::string> kComputations{"overlap", "symbols", "lattice",
                                                    "wiener", "constraint-equivalence", "convergence"};

struct GridSpec {
    double lo = -7.5;
    double hi = 7.5;
    std::size_t nodes = 61;
};

// Every field of a run after defaults are applied. Field names match the config keys.
struct ExperimentConfig {
    std::string computation;

    std::size_t n_constrained = 0;
    std::size_t n_reduced = 1;
    double hbar = 1.0;
    std::vector<double> widths;
    Json op;       // grammar string or term list
    Json reduced;  // optional reduced Hamiltonian for constraint-equivalence; null when absent

    std::vector<PhasePoint> initial;
    std::vector<PhasePoint> final;
    std::vector<std::vector<PhasePoint>> points;

    double T = 0.2;
    std::size_t N = 16;
    std::vector<std::size_t> N_list{2, 4, 8, 16};
    SymbolRoute route = SymbolRoute::upper;
    std::string method = "auto";
    GridSpec grid;
    std::size_t threads = 0;
    std::size_t fock_n_trunc = 60;

    double nu = 1.0;
    std::vector<double> metric;
    std::string estimator = "mc";
    std::uint64_t seed = 0;
    std::size_t n_samples = 10000;
    std::size_t bridge_samples = 0;

    std::vector<double> nu_ladder{5.0, 20.0, 80.0};
    std::size_t projected_N = 2048;
    std::size_t projected_quadrature_N = 8;
    std::size_t wiener_N = 64;
    double box_length = 10.0;
    unsigned box_J = 4;
    std::size_t dirac_n_trunc = 30;
    double tolerance = 1e-4;
    double lambda_common = 0.0;
};

// Parses a config document. Unknown keys and wrong types throw ParseError; values are checked by validate().
ExperimentConfig parse_config(const Json& doc, const std::string& computation);
Json config_json(const ExperimentConfig& cfg);
// Checks every numeric parameter against the preconditions of the module that will use it.
void validate(const ExperimentConfig& cfg);

PolynomialOperator build_operator(const Json& spec, const ModeSpace& space);
ModeSpace build_space(const ExperimentConfig& cfg);

struct RunOutput {
    Json result;
    std::string summary;
    // File name -> CSV text.
    std::vector<std::pair<std::string, std::string>> csv;
};

RunOutput run(const ExperimentConfig& cfg);

/**
 * Full driver: parses argv, reads the config, runs, writes result.json and CSVs to
 * the output directory (--out, else $CSPATH_OUT_DIR, else ./cspath-out) and prints
 * the summary to `out` unless --quiet. On failure writes error.json and returns the
 * matching exit code.
 */
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cspath::cli
