#pragma once

#include <Eigen/Dense>
#include <span>
#include <utility>
#include <vector>

#include "cspath/states.hpp"

namespace cspath {

// sum_k coeffs[k] * v[index_k] + constant, sparse in the variables.
struct LinearForm {
    std::vector<std::pair<std::size_t, Complex>> coeffs;
    Complex constant{0.0};

    LinearForm& add(std::size_t index, Complex c) {
        coeffs.emplace_back(index, c);
        return *this;
    }
    LinearForm operator*(Complex c) const;
    LinearForm operator+(const LinearForm& rhs) const;
};

/**
 * E(v) = v^T S v + l^T v + c over real variables v, with complex symmetric S.
 *
 * Variables are either integrated out over the real line or fixed at a value; both
 * retire the variable. Integration needs Re(-S_kk) > 0 and uses
 * \int exp(s x^2 + b x) dx = sqrt(pi / -s) exp(-b^2 / 4s) with the principal root.
 */
class GaussianExponent {
public:
    explicit GaussianExponent(std::size_t n);

    std::size_t size() const { return static_cast<std::size_t>(l_.size()); }
    bool active(std::size_t k) const { return active_.at(k); }
    Complex constant() const { return c_; }
    const Eigen::MatrixXcd& quadratic() const { return s_; }
    const Eigen::VectorXcd& linear() const { return l_; }

    void add_constant(Complex c) { c_ += c; }
    void add_linear(std::size_t i, Complex c);
    void add_quadratic(std::size_t i, std::size_t j, Complex c);
    void add_form(const LinearForm& f, Complex scale = 1.0);
    void add_product(const LinearForm& f, const LinearForm& g, Complex scale = 1.0);

    Complex evaluate(std::span<const double> v) const;

    void fix(std::size_t k, double value);
    void integrate(std::size_t k);
    // Integrates every active variable in index order.
    void integrate_all();

    // Active variables in index order, as a new exponent with the same constant.
    GaussianExponent compacted() const;
    // Re-embeds `other` (over m variables) at offset in this exponent.
    void accumulate(const GaussianExponent& other, std::size_t offset);

private:
    Eigen::MatrixXcd s_;
    Eigen::VectorXcd l_;
    Complex c_{0.0};
    std::vector<bool> active_;

    void require_active(std::size_t k) const;
};

}  // namespace cspath
