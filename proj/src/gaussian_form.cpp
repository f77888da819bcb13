#include "cspath/gaussian_form.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "cspath/errors.hpp"

namespace cspath {

LinearForm LinearForm::operator*(Complex c) const {
    LinearForm out = *this;
    for (auto& [i, v] : out.coeffs) v *= c;
    out.constant *= c;
    return out;
}

LinearForm LinearForm::operator+(const LinearForm& rhs) const {
    LinearForm out = *this;
    out.coeffs.insert(out.coeffs.end(), rhs.coeffs.begin(), rhs.coeffs.end());
    out.constant += rhs.constant;
    return out;
}

GaussianExponent::GaussianExponent(std::size_t n)
    : s_(Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n))),
      l_(Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(n))),
      active_(n, true) {}

void GaussianExponent::require_active(std::size_t k) const {
    if (k >= size()) throw ContractError("variable", "index " + std::to_string(k) + " out of range");
    if (!active_[k]) throw ContractError("variable", "index " + std::to_string(k) + " already retired");
}

void GaussianExponent::add_linear(std::size_t i, Complex c) {
    require_active(i);
    l_(static_cast<Eigen::Index>(i)) += c;
}

void GaussianExponent::add_quadratic(std::size_t i, std::size_t j, Complex c) {
    require_active(i);
    require_active(j);
    const auto a = static_cast<Eigen::Index>(i);
    const auto b = static_cast<Eigen::Index>(j);
    if (a == b) {
        s_(a, a) += c;
    } else {
        s_(a, b) += 0.5 * c;
        s_(b, a) += 0.5 * c;
    }
}

void GaussianExponent::add_form(const LinearForm& f, Complex scale) {
    for (const auto& [i, v] : f.coeffs) add_linear(i, scale * v);
    c_ += scale * f.constant;
}

void GaussianExponent::add_product(const LinearForm& f, const LinearForm& g, Complex scale) {
    for (const auto& [i, a] : f.coeffs)
        for (const auto& [j, b] : g.coeffs) add_quadratic(i, j, scale * a * b);
    for (const auto& [i, a] : f.coeffs) add_linear(i, scale * a * g.constant);
    for (const auto& [j, b] : g.coeffs) add_linear(j, scale * b * f.constant);
    c_ += scale * f.constant * g.constant;
}

Complex GaussianExponent::evaluate(std::span<const double> v) const {
    if (v.size() != size()) throw ContractError("v", "size mismatch");
    Complex e = c_;
    for (std::size_t i = 0; i < size(); ++i) {
        if (!active_[i]) continue;
        const auto a = static_cast<Eigen::Index>(i);
        e += l_(a) * v[i];
        for (std::size_t j = 0; j < size(); ++j)
            if (active_[j]) e += s_(a, static_cast<Eigen::Index>(j)) * v[i] * v[j];
    }
    return e;
}

void GaussianExponent::fix(std::size_t k, double value) {
    require_active(k);
    const auto kk = static_cast<Eigen::Index>(k);
    c_ += s_(kk, kk) * value * value + l_(kk) * value;
    for (Eigen::Index i = 0; i < s_.rows(); ++i)
        if (i != kk && active_[static_cast<std::size_t>(i)]) l_(i) += 2.0 * s_(i, kk) * value;
    active_[k] = false;
}

void GaussianExponent::integrate(std::size_t k) {
    require_active(k);
    const auto kk = static_cast<Eigen::Index>(k);
    const Complex s = s_(kk, kk);
    if (!(-s.real() > 0.0))
        throw RefusalError("Gaussian integral over variable " + std::to_string(k) +
                           " diverges: Re(-s) = " + std::to_string(-s.real()));
    const Complex lk = l_(kk);
    c_ += -lk * lk / (4.0 * s) + 0.5 * std::log(std::numbers::pi / -s);
    active_[k] = false;
    const Eigen::VectorXcd col = s_.col(kk);
    for (Eigen::Index j = 0; j < s_.cols(); ++j) {
        if (!active_[static_cast<std::size_t>(j)]) continue;
        const Complex f = col(j) / s;
        l_(j) -= lk * f;
        for (Eigen::Index i = 0; i < s_.rows(); ++i)
            if (active_[static_cast<std::size_t>(i)]) s_(i, j) -= col(i) * f;
    }
}

void GaussianExponent::integrate_all() {
    for (std::size_t k = 0; k < size(); ++k)
        if (active_[k]) integrate(k);
}

GaussianExponent GaussianExponent::compacted() const {
    std::vector<Eigen::Index> keep;
    for (std::size_t k = 0; k < size(); ++k)
        if (active_[k]) keep.push_back(static_cast<Eigen::Index>(k));
    GaussianExponent out(keep.size());
    for (std::size_t a = 0; a < keep.size(); ++a) {
        out.l_(static_cast<Eigen::Index>(a)) = l_(keep[a]);
        for (std::size_t b = 0; b < keep.size(); ++b)
            out.s_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = s_(keep[a], keep[b]);
    }
    out.c_ = c_;
    return out;
}

void GaussianExponent::accumulate(const GaussianExponent& other, std::size_t offset) {
    const std::size_t m = other.size();
    if (offset + m > size()) throw ContractError("offset", "embedded exponent does not fit");
    for (std::size_t k = 0; k < m; ++k) {
        if (!other.active_[k]) throw ContractError("other", "embedded exponent must be compacted");
        require_active(offset + k);
    }
    const auto o = static_cast<Eigen::Index>(offset);
    const auto mm = static_cast<Eigen::Index>(m);
    s_.block(o, o, mm, mm) += other.s_;
    l_.segment(o, mm) += other.l_;
    c_ += other.c_;
}

}  // namespace cspath
