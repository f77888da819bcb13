#include <cmath>
#include <numbers>

#include "cspath/combinatorics.hpp"
#include "cspath/errors.hpp"
#include "cspath/operator_parser.hpp"
#include "cspath/oracle.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cspath;
namespace to = testing_oracles;

namespace {

// Label whose scaled amplitude (q / w + i w p) / 2 equals zeta.
Label label_of(Complex zeta, double w) { return Label({{2.0 * zeta.imag() / w, 2.0 * zeta.real() * w}}); }

}  // namespace

TEST_CASE("ladder matrix elements") {
    const double hbar = 0.5;
    const auto a = ladder_matrix(8, 0, 1, hbar);
    for (int n = 1; n < 8; ++n) CHECK(std::abs(a(n - 1, n) - std::sqrt(hbar / 2.0 * n)) < 1e-14);
    const auto num = ladder_matrix(8, 1, 1, hbar);
    for (int n = 0; n < 8; ++n) CHECK(std::abs(num(n, n) - hbar / 2.0 * n) < 1e-14);
}

TEST_CASE("coherent vector components") {
    ModeSpace s(0, 1, 0.5, {1.3});
    const Label l({{0.6, -0.4}});
    const auto v = coherent_vector(s, l, 0, 40);
    const Complex alpha = coherent_amplitude(s, l, 0);
    for (unsigned k = 0; k < 10; ++k) {
        const double mag = std::exp(-std::norm(alpha) / 2.0) * std::pow(std::abs(alpha), k) / std::sqrt(factorial(k));
        CHECK(std::abs(std::abs(v(k)) - mag) < 1e-14);
    }
    CHECK(std::abs(v.squaredNorm() - 1.0) < 1e-12);
    CHECK(truncation_norm_loss(s, l, 40) < 1e-12);
    CHECK(required_truncation(s, l, 1e-10) <= 40);
}

TEST_CASE("coherent vectors reproduce the closed-form overlap") {
    ModeSpace s(0, 1, 0.7, {0.9});
    const Label a({{0.5, 1.0}});
    const Label b({{-0.2, 0.3}});
    const Complex fock = coherent_vector(s, a, 0, 50).dot(coherent_vector(s, b, 0, 50));
    CHECK(std::abs(fock - overlap(s, a, b)) < 1e-12);
}

TEST_CASE("zero time gives the overlap") {
    ModeSpace s(0, 1);
    const Label a({{0.3, 0.4}});
    const Label b({{-0.1, 0.9}});
    const auto r = fock_propagator(s, PolynomialOperator::oscillator(s, 0), a, b, 0.0);
    CHECK(std::abs(r.amplitude - overlap(s, b, a)) < 1e-12);
}

TEST_CASE("oscillator carries coherent states along the classical flow") {
    for (double hbar : {1.0, 0.5}) {
        ModeSpace s(0, 1, hbar);
        const PhasePoint x0{0.8, -0.5};
        for (double T : {0.2, 1.0, 2.5}) {
            const PhasePoint xT = to::rotate(x0, T);
            const auto r = fock_propagator(s, PolynomialOperator::oscillator(s, 0), Label({x0}), Label({xT}), T);
            const double label_phase = (xT.p * xT.q - x0.p * x0.q) / (2.0 * hbar);
            const Complex expect = std::polar(1.0, -T / 2.0 + label_phase);
            CHECK(std::abs(r.amplitude - expect) < 1e-10);
        }
    }
}

TEST_CASE("constant operators contribute a phase") {
    ModeSpace s(0, 1, 0.5);
    const Label a({{0.3, 0.4}});
    const Label b({{0.1, 0.2}});
    const double T = 0.7;
    const auto r = fock_propagator(s, PolynomialOperator::identity(s, 1.5), a, b, T);
    CHECK(std::abs(r.amplitude - std::polar(1.0, -1.5 * T / 0.5) * overlap(s, b, a)) < 1e-12);
}

TEST_CASE("coupled modes take the Kronecker route") {
    ModeSpace s(0, 2, 1.0, {1.0, 1.0});
    const double g = 0.8;
    const double T = 0.9;
    const auto op = parse_operator("0.8*(Ad0*A1 + Ad1*A0)", s);
    const Complex z0(0.3, -0.2);
    const Complex z1(-0.1, 0.4);
    const double th = g * T / 2.0;
    const Complex w0 = std::cos(th) * z0 - Complex(0.0, std::sin(th)) * z1;
    const Complex w1 = std::cos(th) * z1 - Complex(0.0, std::sin(th)) * z0;
    const Label a({label_of(z0, 1.0)[0], label_of(z1, 1.0)[0]});
    const Label b({label_of(w0, 1.0)[0], label_of(w1, 1.0)[0]});
    const auto r = fock_propagator(s, op, a, b, T, {20, 1e-10, 1600});
    CHECK(std::abs(std::abs(r.amplitude) - 1.0) < 1e-10);
}

TEST_CASE("separable operators factor over modes") {
    ModeSpace s(0, 2, 1.0, {1.0, 1.5});
    const auto op = parse_operator("0.5*(P0^2+Q0^2) + Q1^2 + 0.3*P1", s);
    const Label a({{0.2, 0.1}, {-0.3, 0.5}});
    const Label b({{0.1, 0.3}, {0.0, 0.4}});
    const double T = 0.4;
    const auto full = fock_propagator(s, op, a, b, T);
    Complex constant = 0.0;
    for (const auto& [k, c] : op.constant_part()) constant += c * std::pow(s.hbar(), k);
    const Complex prod = std::exp(Complex(0.0, -T / s.hbar()) * constant) * fock_propagator(s.single_mode(0), op.single_mode_part(0), a.mode_part(0), b.mode_part(0), T).amplitude *
                         fock_propagator(s.single_mode(1), op.single_mode_part(1), a.mode_part(1), b.mode_part(1), T).amplitude;
    CHECK(std::abs(full.amplitude - prod) < 1e-12);
}

TEST_CASE("unitarity bound on random labels") {
    std::mt19937_64 rng(13);
    ModeSpace s(0, 1, 0.5);
    const auto op = parse_operator("0.5*(P0^2+Q0^2) + 0.1*Q0^4", s);
    for (int k = 0; k < 20; ++k) {
        const auto r = fock_propagator(s, op, to::random_label(rng, 1), to::random_label(rng, 1), 0.3);
        CHECK(std::abs(r.amplitude) <= 1.0 + 1e-8);
    }
}

TEST_CASE("refusals") {
    ModeSpace s(0, 1);
    const Label far({{9.0, 9.0}});
    CHECK_THROWS_AS(fock_propagator(s, PolynomialOperator::oscillator(s, 0), far, far, 0.1, {20, 1e-10, 1600}),
                    RefusalError);
    ModeSpace s3(0, 3);
    const auto coupled = parse_operator("Q0*Q1*Q2", s3);
    const Label o = Label::origin(s3);
    CHECK_THROWS_AS(fock_propagator(s3, coupled, o, o, 0.1, {60, 1e-10, 1600}), RefusalError);
    CHECK_THROWS_AS(fock_propagator(s, PolynomialOperator::oscillator(s, 0), o.mode_part(0), o.mode_part(0), 0.1,
                                    {2, 1e-10, 1600}),
                    ContractError);
}

TEST_CASE("Gaussian moments") {
    CHECK(gaussian_moment(0, 2.0) == 1.0);
    CHECK(gaussian_moment(3, 2.0) == 0.0);
    CHECK(gaussian_moment(2, 2.0) == doctest::Approx(2.0));
    CHECK(gaussian_moment(4, 2.0) == doctest::Approx(12.0));
    CHECK(gaussian_moment(6, 0.5) == doctest::Approx(15.0 * 0.125));
    const unsigned pw[2] = {2, 4};
    const double var[2] = {1.0, 0.5};
    CHECK(gaussian_moment(pw, var) == doctest::Approx(0.75));
    CHECK_THROWS_AS(gaussian_moment(2, -1.0), ContractError);
}

TEST_CASE("brute quadrature") {
    const auto axis = QuadratureAxis::span_step(-8.0, 8.0, 0.05);
    const QuadratureAxis one[1] = {axis};
    const auto unit = brute_quadrature(
        [](std::span<const double> x) { return std::exp(-x[0] * x[0] / 2.0) / std::sqrt(2.0 * std::numbers::pi); },
        one);
    CHECK(std::abs(unit.value - 1.0) < 1e-8);
    const auto zero = brute_quadrature([](std::span<const double>) { return Complex(0.0); }, one);
    CHECK(zero.value == Complex(0.0));
    const QuadratureAxis coarse = QuadratureAxis::span_step(-6.0, 6.0, 0.2);
    const QuadratureAxis two[2] = {coarse, coarse};
    const auto sep = brute_quadrature(
        [](std::span<const double> x) { return std::exp(-x[0] * x[0] - 2.0 * x[1] * x[1]); }, two);
    CHECK(std::abs(sep.value - std::numbers::pi / std::sqrt(2.0)) < 1e-8);
    CHECK(sep.evaluations == coarse.nodes() * coarse.nodes());
    std::vector<QuadratureAxis> nine(9, QuadratureAxis::span_nodes(-1.0, 1.0, 2));
    CHECK_THROWS_AS(brute_quadrature([](std::span<const double>) { return Complex(1.0); }, nine), RefusalError);
}
