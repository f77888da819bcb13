#include "cspath/polynomial_operator.hpp"

#include <cmath>
#include <string>

#include "cspath/combinatorics.hpp"
#include "cspath/errors.hpp"

namespace cspath {

namespace {

struct ModeProductTerm {
    LadderPowers powers;
    unsigned hbar_order;
    double coefficient;
};

// A†^{m1} A^{n1} A†^{m2} A^{n2} = sum_j j! C(n1,j) C(m2,j) (hbar/2)^j A†^{m1+m2-j} A^{n1+n2-j}.
std::vector<ModeProductTerm> reorder(const LadderPowers& left, const LadderPowers& right) {
    std::vector<ModeProductTerm> out;
    const unsigned jmax = std::min(left.lower, right.raise);
    for (unsigned j = 0; j <= jmax; ++j) {
        const double c = factorial(j) * binomial(left.lower, j) * binomial(right.raise, j) * std::ldexp(1.0, -static_cast<int>(j));
        out.push_back({{left.raise + right.raise - j, left.lower + right.lower - j}, j, c});
    }
    return out;
}

}  // namespace

unsigned Monomial::degree() const {
    unsigned d = 0;
    for (const auto& m : modes) d += m.degree();
    return d;
}

std::optional<std::size_t> Monomial::single_mode() const {
    std::optional<std::size_t> found;
    for (std::size_t j = 0; j < modes.size(); ++j) {
        if (modes[j].degree() == 0) continue;
        if (found) return std::nullopt;
        found = j;
    }
    return found;
}

PolynomialOperator::PolynomialOperator(std::vector<double> widths) : widths_(std::move(widths)) {
    if (widths_.empty()) throw ContractError("widths", "an operator needs at least one mode");
}

Monomial PolynomialOperator::unit_monomial() const { return Monomial{0, std::vector<LadderPowers>(modes())}; }

void PolynomialOperator::check_space(const ModeSpace& space) const {
    if (space.widths() != widths_)
        throw ContractError("op", "operator modes/widths do not match the mode space");
}

PolynomialOperator PolynomialOperator::identity(const ModeSpace& space, Complex c) {
    PolynomialOperator op(space);
    op.add_term(op.unit_monomial(), c);
    return op;
}

PolynomialOperator PolynomialOperator::ladder(const ModeSpace& space, std::size_t mode, unsigned m, unsigned n,
                                              Complex c, unsigned hbar_order) {
    if (mode >= space.modes()) throw ContractError("mode", "index " + std::to_string(mode) + " out of range");
    PolynomialOperator op(space);
    Monomial mono = op.unit_monomial();
    mono.hbar_order = hbar_order;
    mono.modes[mode] = {m, n};
    op.add_term(mono, c);
    return op;
}

PolynomialOperator PolynomialOperator::lowering(const ModeSpace& space, std::size_t mode) {
    return ladder(space, mode, 0, 1);
}

PolynomialOperator PolynomialOperator::raising(const ModeSpace& space, std::size_t mode) {
    return ladder(space, mode, 1, 0);
}

PolynomialOperator PolynomialOperator::position(const ModeSpace& space, std::size_t mode) {
    const double w = space.width(mode);
    return (lowering(space, mode) + raising(space, mode)) * Complex(w);
}

PolynomialOperator PolynomialOperator::momentum(const ModeSpace& space, std::size_t mode) {
    const double w = space.width(mode);
    return (lowering(space, mode) - raising(space, mode)) * Complex(0.0, -1.0 / w);
}

PolynomialOperator PolynomialOperator::oscillator(const ModeSpace& space, std::size_t mode) {
    const auto p = momentum(space, mode);
    const auto q = position(space, mode);
    return (p * p + q * q) * Complex(0.5);
}

void PolynomialOperator::add_term(const Monomial& monomial, Complex c) {
    if (monomial.modes.size() != modes()) throw ContractError("monomial", "mode count mismatch");
    if (c == Complex(0.0)) return;
    auto [it, inserted] = terms_.try_emplace(monomial, c);
    if (!inserted) {
        it->second += c;
        if (it->second == Complex(0.0)) terms_.erase(it);
    }
}

PolynomialOperator& PolynomialOperator::operator+=(const PolynomialOperator& rhs) {
    if (rhs.widths_ != widths_) throw ContractError("op", "operands act on different mode spaces");
    for (const auto& [mono, c] : rhs.terms_) add_term(mono, c);
    return *this;
}

PolynomialOperator& PolynomialOperator::operator-=(const PolynomialOperator& rhs) {
    if (rhs.widths_ != widths_) throw ContractError("op", "operands act on different mode spaces");
    for (const auto& [mono, c] : rhs.terms_) add_term(mono, -c);
    return *this;
}

PolynomialOperator& PolynomialOperator::operator*=(Complex c) {
    if (c == Complex(0.0)) {
        terms_.clear();
        return *this;
    }
    for (auto& [mono, coef] : terms_) coef *= c;
    return *this;
}

PolynomialOperator& PolynomialOperator::operator*=(const PolynomialOperator& rhs) {
    *this = *this * rhs;
    return *this;
}

PolynomialOperator operator*(const PolynomialOperator& a, const PolynomialOperator& b) {
    if (a.widths_ != b.widths_) throw ContractError("op", "operands act on different mode spaces");
    PolynomialOperator out(a.widths_);
    const std::size_t modes = a.modes();
    for (const auto& [ma, ca] : a.terms_) {
        for (const auto& [mb, cb] : b.terms_) {
            // Expand mode by mode; modes commute with each other.
            std::vector<std::pair<Monomial, double>> partial{{Monomial{ma.hbar_order + mb.hbar_order, {}}, 1.0}};
            for (std::size_t j = 0; j < modes; ++j) {
                const auto pieces = reorder(ma.modes[j], mb.modes[j]);
                std::vector<std::pair<Monomial, double>> next;
                next.reserve(partial.size() * pieces.size());
                for (const auto& [mono, c] : partial) {
                    for (const auto& piece : pieces) {
                        Monomial m = mono;
                        m.hbar_order += piece.hbar_order;
                        m.modes.push_back(piece.powers);
                        next.emplace_back(std::move(m), c * piece.coefficient);
                    }
                }
                partial = std::move(next);
            }
            for (const auto& [mono, c] : partial) out.add_term(mono, ca * cb * c);
        }
    }
    return out;
}

PolynomialOperator PolynomialOperator::pow(unsigned k) const {
    PolynomialOperator out(widths_);
    out.add_term(unit_monomial(), 1.0);
    for (unsigned i = 0; i < k; ++i) out = out * *this;
    return out;
}

PolynomialOperator PolynomialOperator::adjoint() const {
    PolynomialOperator out(widths_);
    for (const auto& [mono, c] : terms_) {
        Monomial m = mono;
        for (auto& lp : m.modes) std::swap(lp.raise, lp.lower);
        out.add_term(m, std::conj(c));
    }
    return out;
}

bool PolynomialOperator::is_hermitian(double tol) const {
    const PolynomialOperator diff = *this - adjoint();
    for (const auto& [mono, c] : diff.terms_)
        if (std::abs(c) > tol) return false;
    return true;
}

unsigned PolynomialOperator::degree() const {
    unsigned d = 0;
    for (const auto& [mono, c] : terms_) d = std::max(d, mono.degree());
    return d;
}

unsigned PolynomialOperator::mode_degree(std::size_t mode) const {
    unsigned d = 0;
    for (const auto& [mono, c] : terms_) d = std::max(d, mono.modes.at(mode).degree());
    return d;
}

bool PolynomialOperator::acts_on(std::size_t mode) const { return mode_degree(mode) > 0; }

bool PolynomialOperator::is_separable() const {
    for (const auto& [mono, c] : terms_)
        if (!mono.is_constant() && !mono.single_mode()) return false;
    return true;
}

std::map<unsigned, Complex> PolynomialOperator::constant_part() const {
    std::map<unsigned, Complex> out;
    for (const auto& [mono, c] : terms_)
        if (mono.is_constant()) out[mono.hbar_order] += c;
    return out;
}

PolynomialOperator PolynomialOperator::single_mode_part(std::size_t mode) const {
    PolynomialOperator out(std::vector<double>{widths_.at(mode)});
    for (const auto& [mono, c] : terms_) {
        const auto only = mono.single_mode();
        if (only && *only == mode) out.add_term(Monomial{mono.hbar_order, {mono.modes[mode]}}, c);
    }
    return out;
}

PolynomialOperator PolynomialOperator::drop_leading_modes(std::size_t n) const {
    if (n >= modes()) throw ContractError("n", "must leave at least one mode");
    PolynomialOperator out(std::vector<double>(widths_.begin() + static_cast<std::ptrdiff_t>(n), widths_.end()));
    for (const auto& [mono, c] : terms_) {
        bool touches = false;
        for (std::size_t j = 0; j < n; ++j) touches = touches || mono.modes[j].degree() > 0;
        if (touches) continue;
        out.add_term(Monomial{mono.hbar_order, std::vector<LadderPowers>(mono.modes.begin() + static_cast<std::ptrdiff_t>(n),
                                                                          mono.modes.end())},
                     c);
    }
    return out;
}

PolynomialOperator PolynomialOperator::keep_leading_modes(std::size_t n) const {
    if (n == 0 || n > modes()) throw ContractError("n", "must keep between one and all modes");
    PolynomialOperator out(std::vector<double>(widths_.begin(), widths_.begin() + static_cast<std::ptrdiff_t>(n)));
    for (const auto& [mono, c] : terms_) {
        bool touches = false;
        for (std::size_t j = n; j < modes(); ++j) touches = touches || mono.modes[j].degree() > 0;
        if (touches) continue;
        out.add_term(Monomial{mono.hbar_order, std::vector<LadderPowers>(mono.modes.begin(),
                                                                          mono.modes.begin() + static_cast<std::ptrdiff_t>(n))},
                     c);
    }
    return out;
}

void PolynomialOperator::prune(double tol) {
    for (auto it = terms_.begin(); it != terms_.end();) {
        if (std::abs(it->second) <= tol)
            it = terms_.erase(it);
        else
            ++it;
    }
}

}  // namespace cspath
