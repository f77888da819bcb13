#include "cspath/symbols.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <tuple>

#include "cspath/combinatorics.hpp"
#include "cspath/errors.hpp"

namespace cspath {

void PqPolynomial::add_term(const PqMonomial& monomial, Complex c) {
    if (monomial.modes.size() != modes_) throw ContractError("monomial", "mode count mismatch");
    if (c == Complex(0.0)) return;
    auto [it, inserted] = terms_.try_emplace(monomial, c);
    if (!inserted) {
        it->second += c;
        if (it->second == Complex(0.0)) terms_.erase(it);
    }
}

Complex PqPolynomial::evaluate(const ModeSpace& space, const Label& label) const {
    if (space.modes() != modes_) throw ContractError("space", "mode count mismatch");
    validate_label(space, label, "label");
    Complex total(0.0);
    for (const auto& [mono, c] : terms_) {
        double v = ipow(space.hbar(), mono.hbar_order);
        for (std::size_t j = 0; j < modes_; ++j) v *= ipow(label[j].p, mono.modes[j].p) * ipow(label[j].q, mono.modes[j].q);
        total += c * v;
    }
    return total;
}

Complex PqPolynomial::coefficient(const PqMonomial& monomial) const {
    const auto it = terms_.find(monomial);
    return it == terms_.end() ? Complex(0.0) : it->second;
}

void SymbolFn::add_term(const Monomial& monomial, Complex c) {
    if (monomial.modes.size() != modes()) throw ContractError("monomial", "mode count mismatch");
    if (c == Complex(0.0)) return;
    auto [it, inserted] = terms_.try_emplace(monomial, c);
    if (!inserted) {
        it->second += c;
        if (it->second == Complex(0.0)) terms_.erase(it);
    }
}

Complex SymbolFn::evaluate(const ModeSpace& space, const Label& label) const {
    if (space.widths() != widths_) throw ContractError("space", "symbol widths do not match the mode space");
    validate_label(space, label, "label");
    std::vector<Complex> zeta(modes());
    for (std::size_t j = 0; j < modes(); ++j) zeta[j] = scaled_amplitude(space, label, j);
    Complex total(0.0);
    for (const auto& [mono, c] : terms_) {
        Complex v = c * ipow(space.hbar(), mono.hbar_order);
        for (std::size_t j = 0; j < modes(); ++j)
            v *= ipow(std::conj(zeta[j]), mono.modes[j].raise) * ipow(zeta[j], mono.modes[j].lower);
        total += v;
    }
    return total;
}

PqPolynomial SymbolFn::expand() const {
    PqPolynomial out(modes());
    for (const auto& [mono, c] : terms_) {
        // Per mode: conj(zeta)^m zeta^n = 2^{-(m+n)} sum_{r,s} C(m,r) C(n,s) (q/w)^{m+n-r-s} (-iwp)^r (iwp)^s.
        std::vector<std::pair<PqMonomial, Complex>> partial{{PqMonomial{mono.hbar_order, {}}, c}};
        for (std::size_t j = 0; j < modes(); ++j) {
            const unsigned m = mono.modes[j].raise;
            const unsigned n = mono.modes[j].lower;
            const double w = widths_[j];
            std::vector<std::pair<PqMonomial, Complex>> next;
            for (const auto& [pm, pc] : partial) {
                for (unsigned r = 0; r <= m; ++r) {
                    for (unsigned s = 0; s <= n; ++s) {
                        const unsigned qp = m + n - r - s;
                        const Complex f = binomial(m, r) * binomial(n, s) * ipow(Complex(0.0, -w), r) *
                                          ipow(Complex(0.0, w), s) * ipow(1.0 / w, qp) *
                                          std::ldexp(1.0, -static_cast<int>(m + n));
                        PqMonomial nm = pm;
                        nm.modes.push_back({r + s, qp});
                        next.emplace_back(std::move(nm), pc * f);
                    }
                }
            }
            partial = std::move(next);
        }
        for (const auto& [pm, pc] : partial) out.add_term(pm, pc);
    }
    return out;
}

unsigned SymbolFn::min_hbar_order() const {
    if (terms_.empty()) return 0;
    unsigned k = std::numeric_limits<unsigned>::max();
    for (const auto& [mono, c] : terms_) k = std::min(k, mono.hbar_order);
    return k;
}

SymbolFn upper_symbol(const PolynomialOperator& op) {
    SymbolFn out(SymbolKind::upper, op.widths());
    for (const auto& [mono, c] : op.terms()) out.add_term(mono, c);
    return out;
}

Complex upper_symbol(const PolynomialOperator& op, const ModeSpace& space, const Label& label) {
    op.check_space(space);
    return upper_symbol(op).evaluate(space, label);
}

SymbolFn lower_symbol(const PolynomialOperator& op, unsigned max_degree) {
    if (op.degree() > max_degree)
        throw RefusalError("lower symbol requested up to degree " + std::to_string(max_degree) +
                           " but the operator has degree " + std::to_string(op.degree()));
    SymbolFn out(SymbolKind::lower, op.widths());
    for (const auto& [mono, c] : op.terms()) {
        // A†^m A^n = sum_j (-1)^j j! C(m,j) C(n,j) (hbar/2)^j A^{n-j} A†^{m-j}; anti-normal words map to conj(zeta)^{m-j} zeta^{n-j}.
        std::vector<std::pair<Monomial, Complex>> partial{{Monomial{mono.hbar_order, {}}, c}};
        for (const auto& lp : mono.modes) {
            std::vector<std::pair<Monomial, Complex>> next;
            for (const auto& [pm, pc] : partial) {
                for (unsigned j = 0; j <= std::min(lp.raise, lp.lower); ++j) {
                    const double f = (j % 2 ? -1.0 : 1.0) * factorial(j) * binomial(lp.raise, j) *
                                     binomial(lp.lower, j) * std::ldexp(1.0, -static_cast<int>(j));
                    Monomial nm = pm;
                    nm.hbar_order += j;
                    nm.modes.push_back({lp.raise - j, lp.lower - j});
                    next.emplace_back(std::move(nm), pc * f);
                }
            }
            partial = std::move(next);
        }
        for (const auto& [pm, pc] : partial) out.add_term(pm, pc);
    }
    return out;
}

SymbolFn symbol_gap(const PolynomialOperator& op) {
    SymbolFn out(SymbolKind::difference, op.widths());
    const SymbolFn upper = upper_symbol(op);
    const SymbolFn lower = lower_symbol(op);
    for (const auto& [mono, c] : upper.terms()) out.add_term(mono, c);
    for (const auto& [mono, c] : lower.terms()) out.add_term(mono, -c);
    return out;
}

QuadratureValue upper_from_lower(const SymbolFn& h, const ModeSpace& space, const Label& label,
                                 const QuadratureAxis& offsets, double boundary_tolerance) {
    if (space.widths() != h.widths()) throw ContractError("space", "symbol widths do not match the mode space");
    validate_label(space, label, "label");
    const double measure = 1.0 / (2.0 * std::numbers::pi * space.hbar());

    struct ModeMoment {
        Complex value;
        double boundary;
        double mass;
    };
    std::map<std::tuple<std::size_t, unsigned, unsigned>, ModeMoment> cache;
    auto moment = [&](std::size_t j, unsigned m, unsigned n) -> const ModeMoment& {
        const auto key = std::make_tuple(j, m, n);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
        const ModeSpace single = space.single_mode(j);
        const Label center = label.mode_part(j);
        ModeMoment acc{Complex(0.0), 0.0, 0.0};
        Label x{std::vector<PhasePoint>(1)};
        for (std::size_t ip = 0; ip < offsets.nodes(); ++ip) {
            for (std::size_t iq = 0; iq < offsets.nodes(); ++iq) {
                x[0] = PhasePoint{center[0].p + offsets.node(ip), center[0].q + offsets.node(iq)};
                const double weight =
                    std::exp(2.0 * log_overlap(single, center, x).real()) * offsets.weight(ip) * offsets.weight(iq) * measure;
                const Complex z = scaled_amplitude(single, x, 0);
                const Complex f = ipow(std::conj(z), m) * ipow(z, n) * weight;
                acc.value += f;
                acc.mass += std::abs(f);
                if (offsets.is_boundary(ip) || offsets.is_boundary(iq)) acc.boundary += std::abs(f);
            }
        }
        return cache.emplace(key, acc).first->second;
    };

    QuadratureValue out{Complex(0.0), 0.0, true};
    for (const auto& [mono, c] : h.terms()) {
        Complex term = c * ipow(space.hbar(), mono.hbar_order);
        double boundary = 0.0;
        double mass = std::abs(term);
        for (std::size_t j = 0; j < h.modes(); ++j) {
            const ModeMoment& mm = moment(j, mono.modes[j].raise, mono.modes[j].lower);
            boundary = boundary * mm.mass + mass * mm.boundary;
            mass *= mm.mass;
            term *= mm.value;
        }
        out.value += term;
        out.boundary_mass += boundary;
    }
    out.grid_covers_support = out.boundary_mass <= boundary_tolerance;
    return out;
}

}  // namespace cspath
