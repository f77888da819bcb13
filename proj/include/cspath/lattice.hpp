#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "cspath/polynomial_operator.hpp"
#include "cspath/states.hpp"

namespace cspath {

// Which symbol enters the short-time kernel between x_n (ket) and x_{n+1} (bra).
enum class SymbolRoute {
    upper,           // <x_{n+1}|H|x_n> / <x_{n+1}|x_n>
    lower,           // h(x_n)
    upper_diagonal,  // H(x_{n+1}) = <x_{n+1}|H|x_{n+1}>
};

enum class Method { gaussian_chain, quadrature, fock_oracle, wiener_mc, wiener_exact };

std::string to_string(SymbolRoute route);
std::string to_string(Method method);
SymbolRoute parse_symbol_route(std::string_view text);

struct LatticeConfig {
    // Interior resolutions of unity; the product has N + 1 kernels.
    std::size_t N = 1;
    double T = 0.0;
    SymbolRoute route = SymbolRoute::upper;

    double epsilon() const { return T / static_cast<double>(N + 1); }
    void validate() const;
};

struct PropagatorResult {
    Complex amplitude;
    // log(amplitude), kept separately because long pinned lattices under- or overflow.
    Complex log_amplitude;
    Method method = Method::gaussian_chain;
    std::size_t N = 0;
    double T = 0.0;
    double epsilon = 0.0;
    SymbolRoute route = SymbolRoute::upper;
    double error_estimate = 0.0;
};

// 61 nodes on [-7.5, 7.5] per axis.
QuadratureAxis default_lattice_axis();

struct LatticeGrid {
    QuadratureAxis axis = default_lattice_axis();
    // Worker threads for the quadrature evaluator; 0 picks the hardware count.
    std::size_t threads = 0;
};

inline constexpr std::size_t kMaxLatticeAxes = 8;
inline constexpr std::size_t kMaxNodesPerAxis = 61;
inline constexpr std::size_t kMaxNodesPerLabel = 61 * 61;

/**
 * Per-mode flags. Interior momenta of a pinned mode are fixed at p = 0 instead of
 * integrated, so its measure per slice becomes dq / (2 pi hbar). In the upper route
 * the pinned-mode factors of each symbol term are taken diagonally on the later
 * label, so pinned positions enter the way q enters H_cr(q, z).
 */
using PinnedModes = std::vector<bool>;

// One kernel factor; `bra` is the later label x_{n+1}, `ket` the earlier x_n.
Complex short_time_kernel(const ModeSpace& space, const PolynomialOperator& op, const Label& bra, const Label& ket,
                          double epsilon, SymbolRoute route);
Complex log_short_time_kernel(const ModeSpace& space, const PolynomialOperator& op, const Label& bra,
                              const Label& ket, double epsilon, SymbolRoute route);

/**
 * Lattice approximation of <final| exp(-i op T / hbar) |initial> for op of total
 * ladder degree <= 2. Each interior label is integrated in closed form, one slice at
 * a time; error_estimate is 0.
 */
PropagatorResult propagator_gaussian_chain(const ModeSpace& space, const PolynomialOperator& op, const Label& initial,
                                           const Label& final_label, const LatticeConfig& cfg,
                                           const PinnedModes& pinned = {});

/**
 * The same lattice product by trapezoid quadrature over every interior label,
 * evaluated as a chain of dense transfer sums. Budget: modes * N <= 8, at most 61
 * nodes per axis and 3721 nodes per label grid. error_estimate is the largest
 * boundary mass of any slice.
 */
PropagatorResult propagator_quadrature(const ModeSpace& space, const PolynomialOperator& op, const Label& initial,
                                       const Label& final_label, const LatticeConfig& cfg,
                                       const LatticeGrid& grid = {}, const PinnedModes& pinned = {});

/**
 * Dispatching evaluator. Separable operators factor into one-mode lattices times
 * the phase of the constant part; each factor uses the Gaussian chain when its
 * degree allows and quadrature otherwise.
 */
PropagatorResult propagator(const ModeSpace& space, const PolynomialOperator& op, const Label& initial,
                            const Label& final_label, const LatticeConfig& cfg, const LatticeGrid& grid = {},
                            const PinnedModes& pinned = {});

struct ConvergenceRow {
    std::size_t N = 0;
    double epsilon = 0.0;
    Complex amplitude;
    double error = 0.0;
};

struct ConvergenceStudy {
    std::vector<ConvergenceRow> rows;
    Complex reference;
    // Least-squares slope of log(error) against log(epsilon).
    double slope = 0.0;
    // First-order extrapolation from the two finest rows, and its distance to the reference.
    Complex richardson;
    double richardson_error = 0.0;
};

ConvergenceStudy convergence_study(const ModeSpace& space, const PolynomialOperator& op, const Label& initial,
                                   const Label& final_label, double T, const std::vector<std::size_t>& N_list,
                                   SymbolRoute route, Complex reference, const LatticeGrid& grid = {});

// First-order Richardson extrapolation in epsilon from two lattice values.
Complex richardson_first_order(double eps_coarse, Complex coarse, double eps_fine, Complex fine);

// Least-squares slope of log(y) against log(x); pairs with y == 0 are skipped.
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace cspath
