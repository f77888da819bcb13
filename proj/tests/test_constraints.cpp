#include <cmath>
#include <numbers>
#include <random>

#include "cspath/constraints.hpp"
#include "cspath/errors.hpp"
#include "cspath/operator_parser.hpp"
#include "doctest.h"

using namespace cspath;

namespace {

constexpr double kT = 0.2;

Label split(const ModeSpace& s, PhasePoint c, PhasePoint z) {
    return Label::split(s, std::span(&c, 1), std::span(&z, 1));
}

// W = (2 pi nu T)^{1/2} \int prod_n rho(lambda_n -> lambda_{n+1}; eps) exp(-(i / hbar) sum_n lambda_n p_n) by a
// tensor trapezoid over lambda_1..lambda_3 on [-5, 5] with step 0.1.
Complex brute_lambda_weight(const double p[3], double l0, double l4, double nu, double T, double hbar) {
    const auto axis = QuadratureAxis::span_step(-5.0, 5.0, 0.1);
    const std::size_t n = axis.nodes();
    const double eps = T / 4.0;
    auto rho = [&](double a, double b) {
        return std::exp(-(b - a) * (b - a) / (2.0 * nu * eps)) / std::sqrt(2.0 * std::numbers::pi * nu * eps);
    };
    std::vector<double> first(n), last(n), w(n);
    std::vector<Complex> e1(n), e2(n), e3(n);
    std::vector<double> inner(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = axis.node(i);
        w[i] = axis.weight(i);
        first[i] = rho(l0, x);
        last[i] = rho(x, l4);
        e1[i] = std::polar(1.0, -x * p[0] / hbar);
        e2[i] = std::polar(1.0, -x * p[1] / hbar);
        e3[i] = std::polar(1.0, -x * p[2] / hbar);
        for (std::size_t j = 0; j < n; ++j) inner[i * n + j] = rho(x, axis.node(j));
    }
    Complex sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k)
                sum += w[i] * w[j] * w[k] * first[i] * e1[i] * inner[i * n + j] * e2[j] * inner[j * n + k] * e3[k] *
                       last[k];
    return std::sqrt(2.0 * std::numbers::pi * nu * T) * sum;
}

}  // namespace

TEST_CASE("constraint spec") {
    ModeSpace s(2, 1);
    const auto spec = ConstraintSpec::from_space(s);
    CHECK(spec.indices == std::vector<std::size_t>{0, 1});
    CHECK_NOTHROW(spec.validate(s));
    CHECK_THROWS_AS((ConstraintSpec{{1, 2}}.validate(s)), ContractError);
    CHECK_THROWS_AS((ConstraintSpec{{0}}.validate(s)), ContractError);
}

TEST_CASE("operator splits into reduced and constrained parts") {
    ModeSpace s(1, 1);
    const auto op = parse_operator("0.5*(P1^2 + Q1^2) + (1 + Q0^2)*P0^2 + Q0*Q1", s);
    const auto reduced = reduced_hamiltonian(s, op);
    const auto rest = constrained_sector_terms(s, op);
    CHECK(reduced.modes() == 1);
    PolynomialOperator back = op - rest;
    back.prune(1e-14);
    for (const auto& [m, c] : back.terms()) CHECK_FALSE(m.modes[0].degree() > 0);
    for (const auto& [m, c] : rest.terms()) CHECK(m.modes[0].degree() > 0);
}

TEST_CASE("endpoints must satisfy the constraint") {
    ModeSpace s(1, 1);
    CHECK_THROWS_AS(require_constraint_surface(s, split(s, {0.1, 0.0}, {0.0, 0.0}), "initial"), ContractError);
    CHECK_NOTHROW(require_constraint_surface(s, split(s, {0.0, 3.0}, {1.0, 0.0}), "initial"));
    const auto ho = PolynomialOperator::oscillator(s, 1);
    CHECK_THROWS_AS(projected_normalized(s, ho, split(s, {0.2, 0.0}, {0.0, 0.0}), split(s, {0.0, 0.0}, {0.0, 0.0}),
                                         {4, kT, SymbolRoute::upper}),
                    ContractError);
}

TEST_CASE("constrained moments are fuzzy but q-independent") {
    for (double hbar : {1.0, 0.5, 0.25}) {
        for (double w : {1.0, 1.3}) {
            ModeSpace s(1, 1, hbar, {w, 1.0});
            const Label z({{0.4, -0.2}});
            const double qs[3] = {0.0, 1.7, -7.0};
            const double m1 = constrained_state_moments(s, 0, std::span(qs, 1), z, 1);
            const double m2 = constrained_state_moments(s, 0, std::span(qs, 1), z, 2);
            CHECK(std::abs(m1) <= 1e-14);
            CHECK(std::abs(m2 - hbar / (2.0 * w * w)) <= 1e-12);
            for (int k = 1; k < 3; ++k) {
                CHECK(constrained_state_moments(s, 0, std::span(qs + k, 1), z, 1) == m1);
                CHECK(constrained_state_moments(s, 0, std::span(qs + k, 1), z, 2) == m2);
            }
            const Label l = split(s, {0.0, qs[1]}, z[0]);
            const auto p0 = PolynomialOperator::momentum(s, 0);
            CHECK(std::abs(fock_expectation(s, p0 * p0, l, {30, 1e-10, 1600}) - m2) < 1e-10);
        }
    }
}

TEST_CASE("lambda weight closed form matches brute force") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 100; ++k) {
        const double hbar = k % 2 ? 1.0 : 0.5;
        const double nu = 1.0;
        const double T = 1.0;
        const double p[3] = {u(rng), u(rng), u(rng)};
        const double l0 = 0.5 * u(rng);
        const double l4 = 0.5 * u(rng);
        std::vector<std::vector<double>> path{{p[0]}, {p[1]}, {p[2]}};
        const double li[1] = {l0};
        const double lf[1] = {l4};
        const Complex closed = lambda_effective_weight(path, li, lf, nu, T, hbar);
        CHECK(std::abs(closed - brute_lambda_weight(p, l0, l4, nu, T, hbar)) < 1e-10);
        CHECK(std::abs(std::exp(log_lambda_effective_weight(path, li, lf, nu, T, hbar)) - closed) < 1e-14);
    }
}

TEST_CASE("lambda weight limits") {
    std::vector<std::vector<double>> zero{{0.0}, {0.0}, {0.0}, {0.0}};
    const double l[1] = {0.7};
    CHECK(std::abs(lambda_effective_weight(zero, l, l, 3.0, 1.0, 1.0) - 1.0) < 1e-15);
    const double l1[1] = {-0.3};
    CHECK(std::abs(lambda_effective_weight(zero, l, l1, 3.0, 1.0, 1.0) - std::exp(-1.0 / 6.0)) < 1e-15);
    const auto k = lambda_covariance_kernel(3, 1.0);
    CHECK(k(0, 0) == doctest::Approx(0.75 * 0.25));
    CHECK(k(0, 2) == doctest::Approx(0.25 * 0.25));
    CHECK(k(1, 2) == k(2, 1));
}

TEST_CASE("saddle widths scale as nu^{-1/2}") {
    const auto rows = saddle_concentration_check({1.0, 4.0, 16.0, 1e6}, {7, 1.0, SymbolRoute::upper}, 1.0);
    REQUIRE(rows.size() == 4);
    CHECK(std::abs(rows[0].width_ratio - 1.0) < 1e-10);
    CHECK(std::abs(rows[1].width_ratio - 0.5) < 1e-10);
    CHECK(std::abs(rows[2].width_ratio - 0.25) < 1e-10);
    CHECK(std::abs(rows[1].width / rows[0].width - 0.5) < 1e-10);
    CHECK(rows[3].probe_weight < 1e-10);
    for (const auto& r : rows) CHECK(r.zero_path_weight == doctest::Approx(1.0));
    CHECK(rows[0].probe_weight > rows[1].probe_weight);
}

TEST_CASE("final amplitudes do not depend on the common multiplier value") {
    ModeSpace s(1, 1);
    const auto ho = PolynomialOperator::oscillator(s, 1);
    const Label a = split(s, {0.0, 0.3}, {1.0, 0.0});
    const Label b = split(s, {0.0, -0.2}, {std::cos(kT), std::sin(kT)});
    const LatticeConfig cfg{16, kT, SymbolRoute::upper};
    const Complex zz = overlap(s.reduced_space(), b.reduced_part(s), a.reduced_part(s));
    const auto projected = projected_normalized(s, ho, a, b, cfg, {}, false);
    for (double lam : {-1.0, 0.0, 1.0}) {
        const double l[1] = {lam};
        const auto e = extended_lattice_propagator(s, ho, a, b, cfg, 1e12, l, l);
        const auto e0 = extended_lattice_propagator(s, PolynomialOperator(s), a, b, cfg, 1e12, l, l);
        const Complex normalized = std::exp(e.log_amplitude - e0.log_amplitude) * zz;
        CHECK(std::abs(normalized - projected.normalized) < 1e-10);
    }
}

TEST_CASE("projected route matches the reduced oracle") {
    ModeSpace s(1, 1);
    const auto ho = PolynomialOperator::oscillator(s, 1);
    const Label a = split(s, {0.0, 0.3}, {1.0, 0.0});
    const Label b = split(s, {0.0, -0.2}, {std::cos(kT), std::sin(kT)});
    const auto ref = fock_propagator(s.reduced_space(), reduced_hamiltonian(s, ho), a.reduced_part(s),
                                     b.reduced_part(s), kT);
    const auto r = projected_normalized(s, ho, a, b, {2048, kT, SymbolRoute::upper});
    CHECK(std::abs(r.normalized - ref.amplitude) < 1e-5);
    CHECK(std::abs(r.normalized - ref.amplitude) <= 1.5 * r.error_estimate);
    CHECK(std::abs(r.extrapolated - ref.amplitude) < 1e-6);

    const auto zero = projected_normalized(s, PolynomialOperator(s), a, b, {64, kT, SymbolRoute::upper});
    CHECK(std::abs(zero.normalized - overlap(s.reduced_space(), b.reduced_part(s), a.reduced_part(s))) < 1e-14);
}

TEST_CASE("constrained kinetic term shifts the phase by hbar / 2") {
    for (double hbar : {1.0, 0.5}) {
        ModeSpace s(1, 1, hbar);
        const auto op = PolynomialOperator::oscillator(s, 1) + parse_operator("P0^2", s);
        const Label a = split(s, {0.0, 0.3}, {1.0, 0.0});
        const Label b = split(s, {0.0, -0.2}, {std::cos(kT), std::sin(kT)});
        const auto ref = fock_propagator(s.reduced_space(), PolynomialOperator::oscillator(s.reduced_space(), 0),
                                         a.reduced_part(s), b.reduced_part(s), kT);
        const auto r = projected_normalized(s, op, a, b, {2048, kT, SymbolRoute::upper});
        CHECK(std::abs(r.extrapolated - ref.amplitude * std::polar(1.0, -0.5 * kT)) < 1e-6);
    }
}

TEST_CASE("kinematic term of H_cr") {
    const double q[1] = {1.5};
    std::vector<double> residual;
    for (double hbar : {1.0, 0.5, 0.25}) {
        ModeSpace s(1, 1, hbar);
        const auto op = parse_operator("(1 + Q0^2)*P0^2", s);
        const Label z({{0.0, 0.0}});
        const auto v = reduced_symbol_Hcr(s, op, q, z);
        const Complex fock = fock_expectation(s, op, split(s, {0.0, q[0]}, z[0]), {40, 1e-10, 1600});
        CHECK(std::abs(v.total - fock) < 1e-10);
        CHECK(std::abs(v.total - (v.reduced + v.constrained)) < 1e-15);
        residual.push_back(std::abs(fock - hbar / 2.0 * (1.0 + q[0] * q[0])));
    }
    const double slope = log_log_slope({1.0, 0.5, 0.25}, residual);
    CHECK(std::abs(slope - 2.0) < 0.1);
    ModeSpace s(1, 1);
    CHECK(hcr_depends_on_q(s, parse_operator("(1 + Q0^2)*P0^2", s)));
    CHECK_FALSE(hcr_depends_on_q(s, parse_operator("P0^2 + 0.5*(P1^2 + Q1^2)", s)));
}

TEST_CASE("standard ordering of ladder words") {
    const double w = 1.3;
    const double hbar = 0.5;
    const auto n = standard_order_ladder(1, 1, w, hbar);
    auto coeff = [](const StandardOrdered& so, unsigned a, unsigned b) {
        const auto it = so.find({a, b});
        return it == so.end() ? Complex(0.0) : it->second;
    };
    CHECK(std::abs(coeff(n, 2, 0) - 1.0 / (4.0 * w * w)) < 1e-15);
    CHECK(std::abs(coeff(n, 0, 2) - w * w / 4.0) < 1e-15);
    CHECK(std::abs(coeff(n, 0, 0) + hbar / 4.0) < 1e-15);
    CHECK(std::abs(coeff(n, 1, 1)) < 1e-15);
    const auto up = standard_order_ladder(1, 0, w, hbar);
    CHECK(std::abs(coeff(up, 1, 0) - 1.0 / (2.0 * w)) < 1e-15);
    CHECK(std::abs(coeff(up, 0, 1) - Complex(0.0, -w / 2.0)) < 1e-15);
}

TEST_CASE("box basis matrices") {
    const BoxBasis box{10.0, 4};
    const auto x = box_position(box, 0.5);
    const auto k = box_momentum(box, 0.5);
    CHECK(x.rows() == 9);
    CHECK((x - x.adjoint()).norm() < 1e-14);
    CHECK(std::abs(x(box.zero_index(), box.zero_index())) == 0.0);
    for (int j = 0; j < 9; ++j) CHECK(std::abs(k(j, j) - 2.0 * std::numbers::pi * 0.5 * (j - 4) / 10.0) < 1e-14);
    CHECK((k - Eigen::MatrixXcd(k.diagonal().asDiagonal())).norm() == 0.0);
}

TEST_CASE("Dirac route for reduced-only Hamiltonians") {
    ModeSpace s(1, 1);
    const auto ho = PolynomialOperator::oscillator(s, 1);
    const Label z0({{1.0, 0.0}});
    const Label z1({{std::cos(kT), std::sin(kT)}});
    const auto ref = fock_propagator(s.reduced_space(), PolynomialOperator::oscillator(s.reduced_space(), 0), z0, z1, kT);
    Complex first;
    for (double L : {1.0, 10.0, 100.0}) {
        DiracConfig cfg;
        cfg.box.length = L;
        const auto d = dirac_physical_matrix_element(s, ho, z0, z1, kT, cfg);
        CHECK(std::abs(d.amplitude - ref.amplitude) < 1e-10);
        CHECK(d.factorizes);
        CHECK(d.box_variation < 1e-12);
        if (L == 1.0) first = d.amplitude;
        CHECK(std::abs(d.amplitude - first) < 1e-12);
    }
    const auto free = dirac_physical_matrix_element(s, PolynomialOperator(s), z0, z1, kT);
    CHECK(std::abs(free.amplitude - overlap(s.reduced_space(), z1, z0)) < 1e-12);
}

TEST_CASE("Dirac route detects bare constrained positions") {
    ModeSpace s(1, 1);
    const Label z0({{1.0, 0.0}});
    const Label z1({{0.9, 0.2}});
    const auto with_q = PolynomialOperator::oscillator(s, 1) + parse_operator("Q0^2", s);
    const auto d = dirac_physical_matrix_element(s, with_q, z0, z1, kT);
    CHECK(d.bare_constrained_position);
    CHECK_FALSE(d.factorizes);
    CHECK(d.box_variation > 1e-6);
    const auto kinetic = PolynomialOperator::oscillator(s, 1) + parse_operator("(1 + Q0^2)*P0^2", s);
    const auto k = dirac_physical_matrix_element(s, kinetic, z0, z1, kT);
    CHECK(k.bare_constrained_position);
    CHECK(k.factorizes);
}

TEST_CASE("extended Wiener route trends toward the oracle") {
    ModeSpace s(1, 1);
    const auto ho = PolynomialOperator::oscillator(s, 1);
    const Label a = split(s, {0.0, 0.3}, {1.0, 0.0});
    const Label b = split(s, {0.0, -0.2}, {std::cos(kT), std::sin(kT)});
    const auto ref = fock_propagator(s.reduced_space(), PolynomialOperator::oscillator(s.reduced_space(), 0),
                                     a.reduced_part(s), b.reduced_part(s), kT);
    double prev = 1e300;
    for (double nu : {5.0, 20.0, 80.0}) {
        ExtendedWienerConfig cfg;
        cfg.nu = nu;
        cfg.lattice = {64, kT, SymbolRoute::lower};
        cfg.lambda_initial = {0.0};
        cfg.lambda_final = {0.0};
        const auto r = extended_wiener_propagator(s, ho, a, b, cfg);
        const double d = std::abs(r.normalized - ref.amplitude);
        CHECK(d < prev);
        prev = d;
    }
    ExtendedWienerConfig cfg;
    cfg.lattice = {8, kT, SymbolRoute::lower};
    cfg.lambda_initial = {0.0};
    cfg.lambda_final = {0.0};
    CHECK_THROWS_AS(extended_wiener_propagator(s, ho + parse_operator("Q0^2*P0^2", s), a, b, cfg), RefusalError);
}

TEST_CASE("equivalence report on the separable oscillator") {
    ModeSpace s(1, 1);
    const auto ho = PolynomialOperator::oscillator(s, 1);
    const Label a = split(s, {0.0, 0.3}, {1.0, 0.0});
    const Label b = split(s, {0.0, -0.2}, {std::cos(kT), std::sin(kT)});
    const auto rep = equivalence_report(s, ho, a, b);
    REQUIRE(rep.routes.size() == 4);
    for (const auto& r : rep.routes) {
        CAPTURE(r.name);
        CHECK(r.ok);
    }
    CHECK(rep.core_agree);
    CHECK(rep.core_max_deviation < 1e-4);
    CHECK(rep.ladder_monotone);
    CHECK(rep.ladder_within_error);
    CHECK_FALSE(rep.constrained_sector_terms);
    CHECK_FALSE(rep.gauge_breaking);
    REQUIRE(rep.route("dirac") != nullptr);
    CHECK(std::abs(rep.route("dirac")->amplitude - rep.route("reduced_oracle")->amplitude) < 1e-10);
    CHECK(rep.route("nonexistent") == nullptr);
}

TEST_CASE("equivalence report flags gauge-breaking kinetic terms") {
    ModeSpace s(1, 1);
    const auto op = PolynomialOperator::oscillator(s, 1) + parse_operator("(1 + Q0^2)*P0^2", s);
    const Label a = split(s, {0.0, 0.3}, {1.0, 0.0});
    const Label b = split(s, {0.0, -0.2}, {std::cos(kT), std::sin(kT)});
    const auto rep = equivalence_report(s, op, a, b);
    CHECK(rep.constrained_sector_terms);
    CHECK(rep.gauge_breaking);
    CHECK(rep.bare_constrained_position);
    const auto* ext = rep.route("extended");
    REQUIRE(ext != nullptr);
    CHECK_FALSE(ext->ok);
    CHECK_FALSE(ext->error.empty());
    CHECK(rep.route("projected")->ok);
    CHECK(rep.route("reduced_oracle")->ok);
}
