#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <vector>

#include "cspath/polynomial_operator.hpp"
#include "cspath/states.hpp"

namespace cspath {

struct FockTruncation {
    // Number states 0..n_trunc-1 per mode.
    std::size_t n_trunc = 60;
    // Refuse when a label loses more than this much norm to the cutoff.
    double norm_loss_tolerance = 1e-10;
    // Largest Kronecker dimension for non-separable operators.
    std::size_t max_dimension = 1600;
};

// Truncated number-basis components of |label> on one mode.
Eigen::VectorXcd coherent_vector(const ModeSpace& space, const Label& label, std::size_t mode, std::size_t n_trunc);
// 1 - ||truncated vector||^2, maximized over modes.
double truncation_norm_loss(const ModeSpace& space, const Label& label, std::size_t n_trunc);
// Smallest cutoff meeting the tolerance for every mode of the label.
std::size_t required_truncation(const ModeSpace& space, const Label& label, double tolerance);

// Exact number-basis elements of hbar-scaled A†^m A^n, with A = sqrt(hbar / 2) a.
Eigen::MatrixXcd ladder_matrix(std::size_t n_trunc, unsigned m, unsigned n, double hbar);
// Truncated matrix of a one-mode operator, or of op on the Kronecker product of all modes.
Eigen::MatrixXcd fock_matrix(const PolynomialOperator& op, const ModeSpace& space, std::size_t n_trunc);

struct OracleResult {
    Complex amplitude;
    // sqrt norm loss of both endpoints; bounds the state-truncation part of the error.
    double error_estimate = 0.0;
    std::size_t n_trunc = 0;
};

/**
 * <final| exp(-i op T / hbar) |initial> in the truncated number basis.
 * Separable operators are exponentiated mode by mode; others on the Kronecker product.
 * Throws RefusalError when a label needs a larger cutoff or the product space is too big.
 */
OracleResult fock_propagator(const ModeSpace& space, const PolynomialOperator& op, const Label& initial,
                             const Label& final_label, double T, const FockTruncation& trunc = {});

// <bra|op|ket> term by term in the truncated number basis.
Complex fock_matrix_element(const ModeSpace& space, const PolynomialOperator& op, const Label& bra, const Label& ket,
                            const FockTruncation& trunc = {});
inline Complex fock_expectation(const ModeSpace& space, const PolynomialOperator& op, const Label& label,
                                const FockTruncation& trunc = {}) {
    return fock_matrix_element(space, op, label, label, trunc);
}

// Centered Gaussian moment E[x^power] for variance sigma2: (power-1)!! sigma2^{power/2}, 0 for odd powers.
double gaussian_moment(unsigned power, double sigma2);
// Product of independent centered moments.
double gaussian_moment(std::span<const unsigned> powers, std::span<const double> variances);

struct BruteQuadrature {
    Complex value;
    // sum of |f| w over nodes with at least one coordinate on an axis end.
    double boundary_mass = 0.0;
    std::size_t evaluations = 0;
};

inline constexpr std::size_t kMaxQuadratureAxes = 8;

// Tensor trapezoid over up to 8 axes, visited in lexicographic order.
BruteQuadrature brute_quadrature(const std::function<Complex(std::span<const double>)>& f,
                                 std::span<const QuadratureAxis> axes);

}  // namespace cspath
