#pragma once

#include <map>
#include <vector>

#include "cspath/polynomial_operator.hpp"
#include "cspath/states.hpp"

namespace cspath {

// hbar^hbar_order * prod_modes p^{p_power} q^{q_power}.
struct PqMonomial {
    struct Powers {
        unsigned p = 0;
        unsigned q = 0;
        auto operator<=>(const Powers&) const = default;
    };
    unsigned hbar_order = 0;
    std::vector<Powers> modes;
    auto operator<=>(const PqMonomial&) const = default;
};

// A phase-space polynomial in the (p, q) label coordinates with explicit hbar powers.
class PqPolynomial {
public:
    using Terms = std::map<PqMonomial, Complex>;

    explicit PqPolynomial(std::size_t modes) : modes_(modes) {}

    std::size_t modes() const { return modes_; }
    const Terms& terms() const { return terms_; }
    void add_term(const PqMonomial& monomial, Complex c);
    Complex evaluate(const ModeSpace& space, const Label& label) const;
    // Coefficient of a monomial; zero when absent.
    Complex coefficient(const PqMonomial& monomial) const;

private:
    std::size_t modes_;
    Terms terms_;
};

enum class SymbolKind { upper, lower, difference };

/**
 * Phase-space function sum c * hbar^k * prod_modes conj(zeta)^m zeta^n with
 * zeta = (q / w + i w p) / 2. Monomial keys reuse the operator layout: raise -> conj(zeta),
 * lower -> zeta.
 */
class SymbolFn {
public:
    SymbolFn(SymbolKind kind, std::vector<double> widths) : kind_(kind), widths_(std::move(widths)) {}

    SymbolKind kind() const { return kind_; }
    const std::vector<double>& widths() const { return widths_; }
    std::size_t modes() const { return widths_.size(); }
    const PolynomialOperator::Terms& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    void add_term(const Monomial& monomial, Complex c);
    Complex evaluate(const ModeSpace& space, const Label& label) const;
    PqPolynomial expand() const;
    // Smallest explicit hbar power over all terms; 0 for the zero function.
    unsigned min_hbar_order() const;

private:
    SymbolKind kind_;
    std::vector<double> widths_;
    PolynomialOperator::Terms terms_;
};

// H(x) = <x|op|x>, exact.
SymbolFn upper_symbol(const PolynomialOperator& op);
Complex upper_symbol(const PolynomialOperator& op, const ModeSpace& space, const Label& label);

// h(x) with op = \int h(x)|x><x| dmu(x), via anti-normal reordering.
// Refuses operators whose degree exceeds max_degree.
SymbolFn lower_symbol(const PolynomialOperator& op, unsigned max_degree = 64);

// H - h. Every coefficient carries hbar^k with k >= 1.
SymbolFn symbol_gap(const PolynomialOperator& op);

struct QuadratureValue {
    Complex value;
    double boundary_mass = 0.0;
    bool grid_covers_support = true;
};

/**
 * \int h(x') |<l|x'>|^2 dmu(x') by trapezoid quadrature. Each mode integrates over
 * x' = l + (u, v) with u, v on `offsets`, so the grid is centered on the label.
 * The integrand is evaluated term by term as a product of one-mode integrals.
 */
QuadratureValue upper_from_lower(const SymbolFn& h, const ModeSpace& space, const Label& label,
                                 const QuadratureAxis& offsets = QuadratureAxis::standard(),
                                 double boundary_tolerance = 1e-9);

}  // namespace cspath
