#include "kernel_terms.hpp"

#include <algorithm>

#include "cspath/combinatorics.hpp"
#include "cspath/errors.hpp"
#include "cspath/symbols.hpp"

namespace cspath::detail {

bool KernelTerm::has_bra() const {
    return std::any_of(factors.begin(), factors.end(), [](const KernelFactor& f) { return f.on_bra; });
}

bool KernelTerm::has_ket() const {
    return std::any_of(factors.begin(), factors.end(), [](const KernelFactor& f) { return !f.on_bra; });
}

std::vector<KernelTerm> kernel_terms(const PolynomialOperator& op, const ModeSpace& space, SymbolRoute route,
                                     const std::vector<bool>& diagonal) {
    SymbolFn lower(SymbolKind::lower, op.widths());
    if (route == SymbolRoute::lower) lower = lower_symbol(op);
    const auto& terms = route == SymbolRoute::lower ? lower.terms() : op.terms();

    std::vector<KernelTerm> out;
    for (const auto& [mono, c] : terms) {
        KernelTerm t{c * ipow(space.hbar(), mono.hbar_order), {}};
        for (std::size_t j = 0; j < mono.modes.size(); ++j) {
            const bool diag = !diagonal.empty() && diagonal[j];
            const bool conj_on_bra = route != SymbolRoute::lower;
            const bool plain_on_bra = route == SymbolRoute::upper_diagonal || (route == SymbolRoute::upper && diag);
            for (unsigned r = 0; r < mono.modes[j].raise; ++r) t.factors.push_back({conj_on_bra, j, true});
            for (unsigned r = 0; r < mono.modes[j].lower; ++r) t.factors.push_back({plain_on_bra, j, false});
        }
        out.push_back(std::move(t));
    }
    return out;
}

LinearForm zeta_form(const ModeSpace& space, std::size_t base, std::size_t mode, bool conjugate) {
    const double w = space.width(mode);
    LinearForm f;
    f.add(base + 2 * mode, Complex(0.0, conjugate ? -0.5 * w : 0.5 * w));
    f.add(base + 2 * mode + 1, Complex(0.5 / w, 0.0));
    return f;
}

LinearForm variable_form(std::size_t index, Complex c) {
    LinearForm f;
    f.add(index, c);
    return f;
}

void add_log_overlap(GaussianExponent& g, const ModeSpace& space, std::size_t bra, std::size_t ket) {
    const double hbar = space.hbar();
    for (std::size_t j = 0; j < space.modes(); ++j) {
        const LinearForm zb = zeta_form(space, bra, j, false);
        const LinearForm zbc = zeta_form(space, bra, j, true);
        const LinearForm zk = zeta_form(space, ket, j, false);
        const LinearForm zkc = zeta_form(space, ket, j, true);
        g.add_product(zbc, zk, 2.0 / hbar);
        g.add_product(zbc, zb, -1.0 / hbar);
        g.add_product(zkc, zk, -1.0 / hbar);
        g.add_product(variable_form(bra + 2 * j), variable_form(bra + 2 * j + 1), Complex(0.0, 0.5 / hbar));
        g.add_product(variable_form(ket + 2 * j), variable_form(ket + 2 * j + 1), Complex(0.0, -0.5 / hbar));
    }
}

void add_overlap_phase(GaussianExponent& g, const ModeSpace& space, std::size_t bra, std::size_t ket) {
    const double hbar = space.hbar();
    for (std::size_t j = 0; j < space.modes(); ++j) {
        const LinearForm psum = variable_form(bra + 2 * j) + variable_form(ket + 2 * j);
        const LinearForm qdiff = variable_form(bra + 2 * j + 1) + variable_form(ket + 2 * j + 1, -1.0);
        g.add_product(psum, qdiff, Complex(0.0, 0.5 / hbar));
    }
}

void add_symbol_terms(GaussianExponent& g, const ModeSpace& space, const std::vector<KernelTerm>& terms,
                      double epsilon, std::size_t bra, std::size_t ket) {
    const Complex scale(0.0, -epsilon / space.hbar());
    for (const auto& t : terms) {
        std::vector<LinearForm> forms;
        for (const auto& f : t.factors) forms.push_back(zeta_form(space, f.on_bra ? bra : ket, f.mode, f.conjugate));
        switch (forms.size()) {
            case 0: g.add_constant(scale * t.coeff); break;
            case 1: g.add_form(forms[0], scale * t.coeff); break;
            case 2: g.add_product(forms[0], forms[1], scale * t.coeff); break;
            default: throw RefusalError("closed-form Gaussian evaluation needs symbols of total degree <= 2");
        }
    }
}

void add_kernel(GaussianExponent& g, const ModeSpace& space, const std::vector<KernelTerm>& terms, double epsilon,
                std::size_t bra, std::size_t ket) {
    add_log_overlap(g, space, bra, ket);
    add_symbol_terms(g, space, terms, epsilon, bra, ket);
}

}  // namespace cspath::detail
