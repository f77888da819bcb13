#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "cspath/gaussian_form.hpp"
#include "cspath/lattice.hpp"
#include "cspath/symbols.hpp"

namespace cspath {

// Flat diagonal metric sum_a w_a dx_a^2 over phase-space axes ordered (p_0, q_0, p_1, q_1, ...).
struct MetricSpec {
    std::vector<double> weights;

    static MetricSpec flat(std::size_t axes, double weight = 1.0) { return {std::vector<double>(axes, weight)}; }
    std::size_t axes() const { return weights.size(); }
    void validate() const;
};

struct WienerConfig {
    double nu = 1.0;
    LatticeConfig lattice;
    MetricSpec metric;
    std::uint64_t seed = 0;
    std::size_t n_samples = 1;
    // Worker threads for Monte Carlo chunks; 0 picks the hardware count.
    std::size_t threads = 0;

    void validate() const;
};

struct BridgePath {
    std::vector<double> times;                // N + 2 uniform times from 0 to T
    std::vector<std::vector<double>> values;  // [N + 2][axes]
};

// prod_a (2 pi nu t / w_a)^{-1/2} exp(-w_a (b_a - a_a)^2 / (2 nu t)).
double heat_kernel(std::span<const double> a, std::span<const double> b, double t, double nu, const MetricSpec& metric);
double log_heat_kernel(std::span<const double> a, std::span<const double> b, double t, double nu,
                       const MetricSpec& metric);

struct ChapmanKolmogorov {
    double residual = 0.0;
    double boundary_mass = 0.0;
    // False when the grid step exceeds half the narrower kernel's standard deviation.
    bool grid_resolves_kernel = true;
};

/**
 * |rho(a, c; t1 + t2) - \int rho(a, x; t1) rho(x, c; t2) dx|. The flat kernel is a
 * product over axes, so the integral is taken axis by axis on `axis`.
 */
ChapmanKolmogorov chapman_kolmogorov_residual(std::span<const double> a, std::span<const double> c, double t1,
                                              double t2, double nu, const MetricSpec& metric,
                                              const QuadratureAxis& axis = QuadratureAxis::standard());

// Per-sample generator seed derived from (seed, sample index) by splitmix64 mixing.
std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t index);

/**
 * One pinned Brownian bridge on the uniform lattice, built by midpoint bisection with
 * exact conditional Gaussians (variance nu / w_a per unit time). Endpoints are copied
 * exactly; the result depends only on (cfg.seed, sample_index).
 */
BridgePath sample_pinned_bridge(std::span<const double> start, std::span<const double> end, const WienerConfig& cfg,
                                std::uint64_t sample_index = 0);

// Writes bridge samples as CSV with header sample_id,time_index,axis,value and LF line endings.
void write_bridge_csv(std::ostream& out, const std::vector<BridgePath>& paths, std::uint64_t first_sample_id = 0);

// Axis values of a label in metric order (p_0, q_0, p_1, q_1, ...).
std::vector<double> label_axes(const Label& label);
Label axes_label(std::span<const double> values);

// Extra log-weight on a sampled path, e.g. the lambda-integrated constraint factor.
using PathLogWeight = std::function<Complex(const BridgePath&)>;

struct WienerEstimate {
    PropagatorResult result;
    // Calibrated ratio, its delta-method standard error, and the raw means.
    Complex ratio;
    double standard_error = 0.0;
    Complex mean_signal;
    // Standard error of mean_signal alone.
    double signal_standard_error = 0.0;
    Complex mean_anchor;
    // |mean_anchor|: small values mean the oscillating integrand is dominated by noise.
    double anchor_magnitude = 0.0;
};

/**
 * Monte Carlo estimate of the regularized propagator <final|exp(-i H T / hbar)|initial>
 * with lower symbol h. Each bridge x_0..x_{N+1} contributes
 *   F_h = exp(i sum_n arg<x_{n+1}|x_n> - (i epsilon / hbar) sum_{n=0}^{N} h(x_n)).
 * The same noise bridge serves the signal (initial -> final, shifted linearly) and the
 * anchor (initial -> initial, h = 0); the estimate is
 *   mean(F_h) rho(initial, final; T) / rho(initial, initial; T) / mean(F_0).
 * Samples are reduced in fixed chunks of 4096 in index order.
 */
WienerEstimate regularized_propagator_mc(const ModeSpace& space, const SymbolFn& h, const Label& initial,
                                         const Label& final_label, const WienerConfig& cfg,
                                         const PathLogWeight& extra = {});

// Variable layout of a lattice path: label n in 0..N+1 occupies 2M consecutive slots.
struct PathLayout {
    std::size_t modes;
    std::size_t N;
    std::size_t label(std::size_t n) const { return n * 2 * modes; }
    std::size_t p(std::size_t n, std::size_t mode) const { return label(n) + 2 * mode; }
    std::size_t q(std::size_t n, std::size_t mode) const { return label(n) + 2 * mode + 1; }
    std::size_t size() const { return (N + 2) * 2 * modes; }
};

// Adds extra quadratic terms to the path exponent before integration.
using PathExponentHook = std::function<void(GaussianExponent&, const PathLayout&)>;

/**
 * The same calibrated quantity as regularized_propagator_mc, with both expectations
 * taken in closed form: for h of degree <= 2 the integrand times the lattice Wiener
 * density is a complex Gaussian in the interior labels. error_estimate is 0.
 */
WienerEstimate regularized_propagator_gaussian(const ModeSpace& space, const SymbolFn& h, const Label& initial,
                                               const Label& final_label, const WienerConfig& cfg,
                                               const PathExponentHook& extra = {});

// log \int prod_n rho(x_{n+1}, x_n; eps) F_h(x) dx over interior labels; the unnormalized signal.
Complex log_wiener_functional(const ModeSpace& space, const SymbolFn& h, const Label& initial,
                              const Label& final_label, const WienerConfig& cfg, const PathExponentHook& extra = {});

}  // namespace cspath
