#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "cspath/lattice.hpp"
#include "cspath/oracle.hpp"
#include "cspath/polynomial_operator.hpp"
#include "cspath/states.hpp"
#include "cspath/wiener.hpp"

namespace cspath {

/**
 * Abelianized constraints p_i = 0. The constrained modes are the leading
 * n_constrained modes of the ModeSpace; `indices` must list exactly those.
 */
struct ConstraintSpec {
    std::vector<std::size_t> indices;

    static ConstraintSpec from_space(const ModeSpace& space);
    void validate(const ModeSpace& space) const;
};

// Operator terms that touch no constrained mode, as an operator on the reduced space.
// Mode-free constant terms count as reduced.
PolynomialOperator reduced_hamiltonian(const ModeSpace& space, const PolynomialOperator& op);
// op minus its reduced part: the terms that touch at least one constrained mode.
PolynomialOperator constrained_sector_terms(const ModeSpace& space, const PolynomialOperator& op);

// Throws ContractError when a constrained momentum of the label is not exactly zero.
void require_constraint_surface(const ModeSpace& space, const Label& label, const std::string& name);

/**
 * <q, z| P_i^n |q, z> at p = 0 for constrained mode `constraint`, from the exact
 * normal-ordered expansion. The value does not depend on q or z.
 */
double constrained_state_moments(const ModeSpace& space, std::size_t constraint, std::span<const double> q,
                                 const Label& z, unsigned n);

struct ProjectedResult {
    PropagatorResult raw;
    // The same lattice with op = 0; carries the gauge-orbit volume factor.
    PropagatorResult anchor;
    // raw / anchor * <z''|z'>.
    Complex normalized;
    // |normalized(N) - normalized(N / 2)| when requested, else 0.
    double error_estimate = 0.0;
    // First-order extrapolation from the same two lattices; equals normalized without the estimate.
    Complex extrapolated;
};

/**
 * Lattice propagator with every interior constrained momentum fixed at 0 (the
 * delta-function collapse of the multiplier integrals). Endpoints must satisfy
 * p_i = 0. Uses the dispatching lattice evaluator with constrained modes pinned.
 */
PropagatorResult projected_lattice_propagator(const ModeSpace& space, const PolynomialOperator& op,
                                              const Label& initial, const Label& final_label,
                                              const LatticeConfig& cfg, const LatticeGrid& grid = {});

ProjectedResult projected_normalized(const ModeSpace& space, const PolynomialOperator& op, const Label& initial,
                                     const Label& final_label, const LatticeConfig& cfg,
                                     const LatticeGrid& grid = {}, bool with_error_estimate = true);

/**
 * Closed-form integral of the interior multipliers lambda_1..lambda_N against the
 * pinned Wiener weight (unit metric, diffusion nu) and the phase
 * exp(-(i / hbar) sum_n lambda_n p_n), divided by (2 pi nu T)^{-1/2}:
 *   exp(-(lambda_{N+1} - lambda_0)^2 / (2 nu T))
 *   * exp(-(i / hbar) sum_n p_n m_n),  m_n = (lambda_0 (T - t_n) + lambda_{N+1} t_n) / T
 *   * exp(-(nu / (2 hbar^2 T)) sum_{j,k} p_j p_k (T - max(t_j, t_k)) min(t_j, t_k)).
 * Times are t_n = n T / (N + 1). p_path is [N][n_c]; the product runs over constraints.
 */
Complex lambda_effective_weight(std::span<const std::vector<double>> p_path, std::span<const double> lambda_initial,
                                std::span<const double> lambda_final, double nu, double T, double hbar);
Complex log_lambda_effective_weight(std::span<const std::vector<double>> p_path,
                                    std::span<const double> lambda_initial, std::span<const double> lambda_final,
                                    double nu, double T, double hbar);

// The lattice kernel (T - max(t_j, t_k)) min(t_j, t_k) of the quadratic form, N x N.
Eigen::MatrixXd lambda_covariance_kernel(std::size_t N, double T);

/**
 * Adds the log of lambda_effective_weight to a path exponent, acting on the
 * constrained momenta of the interior labels.
 */
PathExponentHook lambda_weight_hook(const ModeSpace& space, double nu, double T, std::span<const double> lambda_initial,
                                    std::span<const double> lambda_final);

struct SaddleRow {
    double nu = 0.0;
    // hbar sqrt(T / (nu kappa_min)): the widest Gaussian direction of the weight in p.
    double width = 0.0;
    double width_ratio = 0.0;
    // |W| for a single p = 0.1 at the middle interior slice, relative to p = 0.
    double probe_weight = 0.0;
    // |W| for p = 0 with lambda_0 = lambda_{N+1}.
    double zero_path_weight = 0.0;
};

std::vector<SaddleRow> saddle_concentration_check(const std::vector<double>& nu_ladder, const LatticeConfig& cfg,
                                                  double hbar);

struct HcrValue {
    Complex total;
    // Upper symbol of the reduced Hamiltonian at z.
    Complex reduced;
    // total - reduced: the contribution of terms that touch constrained modes.
    Complex constrained;
};

// <p=0, q, z| op |p=0, q, z> split into the reduced and constrained-sector parts.
HcrValue reduced_symbol_Hcr(const ModeSpace& space, const PolynomialOperator& op, std::span<const double> q,
                            const Label& z);

// True when H_cr depends on a constrained q, i.e. the constrained-sector terms break the gauge symmetry.
bool hcr_depends_on_q(const ModeSpace& space, const PolynomialOperator& op);

// Polynomial in one mode's Q and P with every Q to the left: (a, b) -> coefficient of Q^a P^b.
using StandardOrdered = std::map<std::pair<unsigned, unsigned>, Complex>;

// A†^m A^n of a mode with width w, rewritten in Q-left standard order.
StandardOrdered standard_order_ladder(unsigned m, unsigned n, double w, double hbar);

struct BoxBasis {
    double length = 1.0;
    // Plane waves k_j = 2 pi hbar j / L for j in [-J, J].
    unsigned J = 4;

    std::size_t dimension() const { return 2 * J + 1; }
    std::size_t zero_index() const { return J; }
};

// Position on the box [-L/2, L/2]: <j|Q|l> = -i (-1)^{l-j} L / (2 pi (l-j)), zero on the diagonal.
Eigen::MatrixXcd box_position(const BoxBasis& box, double hbar);
Eigen::MatrixXcd box_momentum(const BoxBasis& box, double hbar);

struct DiracConfig {
    BoxBasis box;
    // Number-basis cutoff of each reduced mode.
    std::size_t n_trunc = 30;
    double norm_loss_tolerance = 1e-10;
    std::size_t max_dimension = 2000;
    // Largest |A(L) - A(2L)| accepted as L-independent.
    double factorization_tolerance = 1e-12;
};

struct DiracResult {
    Complex amplitude;
    // |A(L) - A(2L)|.
    double box_variation = 0.0;
    bool factorizes = true;
    // Some constrained-sector term keeps a Q^a, a > 0, in standard order.
    bool bare_constrained_position = false;
    std::size_t dimension = 0;
};

/**
 * <phys''| exp(-i op T / hbar) |phys'> with |phys> = (zero-momentum box state per
 * constrained mode) x |z>. Constrained modes use the plane-wave box basis and the
 * reduced modes a truncated number basis. z labels live on space.reduced_space().
 */
DiracResult dirac_physical_matrix_element(const ModeSpace& space, const PolynomialOperator& op, const Label& z_initial,
                                          const Label& z_final, double T, const DiracConfig& cfg = {});

/**
 * Extended lattice: constrained momenta are integrated with the multiplier weight
 * of lambda_weight_hook; symbol terms follow the projected route's convention.
 * Evaluated as one dense Gaussian over all interior labels.
 */
PropagatorResult extended_lattice_propagator(const ModeSpace& space, const PolynomialOperator& op,
                                             const Label& initial, const Label& final_label,
                                             const LatticeConfig& cfg, double nu,
                                             std::span<const double> lambda_initial,
                                             std::span<const double> lambda_final);

struct ExtendedWienerConfig {
    double nu = 80.0;
    LatticeConfig lattice;
    // Weights of the reduced axes (p_z, q_z per reduced mode); constrained axes have weight 1.
    std::vector<double> reduced_metric;
    std::vector<double> lambda_initial;
    std::vector<double> lambda_final;
};

struct ExtendedWienerResult {
    WienerEstimate signal;
    WienerEstimate anchor;
    // signal / anchor * <z''|z'>.
    Complex normalized;
};

// Exact Gaussian expectation under the pinned Wiener measure with the multiplier weight, lower symbol of op.
ExtendedWienerResult extended_wiener_propagator(const ModeSpace& space, const PolynomialOperator& op,
                                                const Label& initial, const Label& final_label,
                                                const ExtendedWienerConfig& cfg);

struct EquivalenceConfig {
    double T = 0.2;
    // Projected route: N for ladder degree <= 2, the quadrature N otherwise.
    std::size_t projected_N = 2048;
    std::size_t projected_quadrature_N = 8;
    LatticeGrid grid;
    std::vector<double> nu_ladder{5.0, 20.0, 80.0};
    std::size_t wiener_N = 64;
    std::vector<double> reduced_metric;  // empty: unit weights
    double lambda_common = 0.0;
    DiracConfig dirac;
    FockTruncation oracle;
    // Pairwise tolerance for the projected, Dirac and reduced-oracle routes.
    double tolerance = 1e-4;
    // The extended route must sit within this multiple of its ladder error.
    double ladder_factor = 3.0;
};

struct RouteOutcome {
    std::string name;
    bool ok = false;
    Complex amplitude;
    double error_estimate = 0.0;
    bool normalized = false;
    std::string error;
};

struct Deviation {
    std::string a;
    std::string b;
    double value = 0.0;
};

struct LadderRow {
    double nu = 0.0;
    Complex amplitude;
    double distance = 0.0;
};

struct EquivalenceReport {
    std::vector<RouteOutcome> routes;  // projected, extended, dirac, reduced_oracle
    std::vector<Deviation> deviations;
    std::vector<LadderRow> ladder;
    // Largest deviation among projected, dirac and reduced_oracle.
    double core_max_deviation = 0.0;
    bool core_agree = false;
    bool ladder_monotone = false;
    bool ladder_within_error = false;
    // Terms touching constrained modes exist; H_cr then gains O(hbar) terms.
    bool constrained_sector_terms = false;
    bool gauge_breaking = false;
    bool bare_constrained_position = false;

    const RouteOutcome* route(const std::string& name) const;
};

/**
 * Runs the four routes on one system. `reduced` is the reduced Hamiltonian on
 * space.reduced_space() used by the oracle route. Failures are recorded per route.
 * All constrained routes are normalized by their own op = 0 result times <z''|z'>.
 */
EquivalenceReport equivalence_report(const ModeSpace& space, const PolynomialOperator& op,
                                     const PolynomialOperator& reduced, const Label& initial,
                                     const Label& final_label, const EquivalenceConfig& cfg = {});
// Same, with reduced = reduced_hamiltonian(space, op).
EquivalenceReport equivalence_report(const ModeSpace& space, const PolynomialOperator& op, const Label& initial,
                                     const Label& final_label, const EquivalenceConfig& cfg = {});

}  // namespace cspath
