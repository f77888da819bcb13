#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <vector>

#include "cspath/states.hpp"

namespace cspath {

// A†^raise A^lower on one mode, normal ordered.
struct LadderPowers {
    unsigned raise = 0;
    unsigned lower = 0;

    unsigned degree() const { return raise + lower; }
    auto operator<=>(const LadderPowers&) const = default;
};

// hbar^hbar_order * prod_modes A†^m A^n.
struct Monomial {
    unsigned hbar_order = 0;
    std::vector<LadderPowers> modes;

    unsigned degree() const;
    bool is_constant() const { return degree() == 0; }
    // Index of the single mode this monomial touches; nullopt when it touches none or several.
    std::optional<std::size_t> single_mode() const;
    auto operator<=>(const Monomial&) const = default;
};

/**
 * Normal-ordered polynomial in the scaled ladder operators
 * A_j = (Q_j / w_j + i w_j P_j) / 2, with [A_j, A_j†] = hbar / 2.
 *
 * hbar stays symbolic: every coefficient multiplies an explicit hbar power, so the
 * same operator can be evaluated at several hbar values. Widths are fixed at
 * construction because Q and P depend on them.
 */
class PolynomialOperator {
public:
    using Terms = std::map<Monomial, Complex>;

    explicit PolynomialOperator(std::vector<double> widths);
    explicit PolynomialOperator(const ModeSpace& space) : PolynomialOperator(space.widths()) {}

    static PolynomialOperator identity(const ModeSpace& space, Complex c = 1.0);
    static PolynomialOperator position(const ModeSpace& space, std::size_t mode);
    static PolynomialOperator momentum(const ModeSpace& space, std::size_t mode);
    static PolynomialOperator lowering(const ModeSpace& space, std::size_t mode);
    static PolynomialOperator raising(const ModeSpace& space, std::size_t mode);
    // c * hbar^hbar_order * A†^m A^n on `mode`.
    static PolynomialOperator ladder(const ModeSpace& space, std::size_t mode, unsigned m, unsigned n,
                                     Complex c = 1.0, unsigned hbar_order = 0);
    // (P^2 + Q^2) / 2 on `mode`.
    static PolynomialOperator oscillator(const ModeSpace& space, std::size_t mode);

    std::size_t modes() const { return widths_.size(); }
    const std::vector<double>& widths() const { return widths_; }
    const Terms& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    // Throws ContractError unless the widths match the space.
    void check_space(const ModeSpace& space) const;

    void add_term(const Monomial& monomial, Complex c);

    PolynomialOperator& operator+=(const PolynomialOperator& rhs);
    PolynomialOperator& operator-=(const PolynomialOperator& rhs);
    PolynomialOperator& operator*=(Complex c);
    PolynomialOperator& operator*=(const PolynomialOperator& rhs);
    friend PolynomialOperator operator+(PolynomialOperator a, const PolynomialOperator& b) { return a += b; }
    friend PolynomialOperator operator-(PolynomialOperator a, const PolynomialOperator& b) { return a -= b; }
    friend PolynomialOperator operator*(const PolynomialOperator& a, const PolynomialOperator& b);
    friend PolynomialOperator operator*(PolynomialOperator a, Complex c) { return a *= c; }
    friend PolynomialOperator operator*(Complex c, PolynomialOperator a) { return a *= c; }
    PolynomialOperator operator-() const { return *this * Complex(-1.0); }
    PolynomialOperator pow(unsigned k) const;

    PolynomialOperator adjoint() const;
    bool is_hermitian(double tol = 1e-12) const;

    // Highest total ladder degree over all terms (0 for constants and the zero operator).
    unsigned degree() const;
    unsigned mode_degree(std::size_t mode) const;
    bool acts_on(std::size_t mode) const;
    // Every term touches at most one mode.
    bool is_separable() const;

    // The terms touching no mode, as hbar_order -> coefficient.
    std::map<unsigned, Complex> constant_part() const;
    // The terms touching only `mode` (constants excluded), as a single-mode operator.
    PolynomialOperator single_mode_part(std::size_t mode) const;
    // Terms that touch none of the first n modes, re-indexed onto the remaining modes.
    PolynomialOperator drop_leading_modes(std::size_t n) const;
    // Terms that touch only the first n modes or none, restricted to those modes.
    PolynomialOperator keep_leading_modes(std::size_t n) const;

    void prune(double tol = 0.0);

private:
    std::vector<double> widths_;
    Terms terms_;

    Monomial unit_monomial() const;
};

}  // namespace cspath
