#pragma once

#include <vector>

#include "cspath/gaussian_form.hpp"
#include "cspath/lattice.hpp"
#include "cspath/polynomial_operator.hpp"

namespace cspath::detail {

// conj(zeta) or zeta of one mode of the bra or ket label.
struct KernelFactor {
    bool on_bra;
    std::size_t mode;
    bool conjugate;
};

struct KernelTerm {
    Complex coeff;
    std::vector<KernelFactor> factors;

    bool has_bra() const;
    bool has_ket() const;
};

// Symbol terms of one kernel factor. Modes flagged in `diagonal` take both
// conj(zeta) and zeta from the bra in the upper route.
std::vector<KernelTerm> kernel_terms(const PolynomialOperator& op, const ModeSpace& space, SymbolRoute route,
                                     const std::vector<bool>& diagonal = {});

// Variables of a label block: p_j at base + 2j, q_j at base + 2j + 1.
LinearForm zeta_form(const ModeSpace& space, std::size_t base, std::size_t mode, bool conjugate);
LinearForm variable_form(std::size_t index, Complex c = 1.0);

// log <bra|ket> for label blocks at the given offsets.
void add_log_overlap(GaussianExponent& g, const ModeSpace& space, std::size_t bra, std::size_t ket);
// arg <bra|ket> = sum_j (p_bra + p_ket)(q_bra - q_ket) / (2 hbar), times i.
void add_overlap_phase(GaussianExponent& g, const ModeSpace& space, std::size_t bra, std::size_t ket);
// -(i epsilon / hbar) * sum_terms, for terms of total degree <= 2.
void add_symbol_terms(GaussianExponent& g, const ModeSpace& space, const std::vector<KernelTerm>& terms,
                      double epsilon, std::size_t bra, std::size_t ket);
// log K(bra; ket) = log <bra|ket> - (i epsilon / hbar) S(bra, ket).
void add_kernel(GaussianExponent& g, const ModeSpace& space, const std::vector<KernelTerm>& terms, double epsilon,
                std::size_t bra, std::size_t ket);

}  // namespace cspath::detail
