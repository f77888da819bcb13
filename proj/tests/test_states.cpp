#include <cmath>
#include <limits>
#include <random>

#include "cspath/errors.hpp"
#include "cspath/states.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cspath;
namespace to = testing_oracles;

TEST_CASE("mode space rejects bad parameters") {
    CHECK_THROWS_AS(ModeSpace(0, 1, 0.0), ContractError);
    CHECK_THROWS_AS(ModeSpace(0, 1, -1.0), ContractError);
    CHECK_THROWS_AS(ModeSpace(0, 0, 1.0), ContractError);
    CHECK_THROWS_AS(ModeSpace(1, 1, 1.0, {1.0}), ContractError);
    CHECK_THROWS_AS(ModeSpace(0, 1, 1.0, {0.0}), ContractError);
    try {
        ModeSpace(0, 1, -2.0);
    } catch (const ContractError& e) {
        CHECK(e.parameter() == "hbar");
    }
}

TEST_CASE("mode space layout") {
    ModeSpace s(2, 1, 0.5, {1.0, 2.0, 0.5});
    CHECK(s.modes() == 3);
    CHECK(s.is_constrained(1));
    CHECK_FALSE(s.is_constrained(2));
    CHECK(s.reduced_space() == ModeSpace(0, 1, 0.5, {0.5}));
    CHECK(s.single_mode(1).width(0) == 2.0);

    const PhasePoint c[2] = {{0.0, 1.0}, {0.0, 2.0}};
    const PhasePoint z[1] = {{3.0, 4.0}};
    const Label l = Label::split(s, c, z);
    CHECK(l.size() == 3);
    CHECK(l.reduced_part(s) == Label({{3.0, 4.0}}));
}

TEST_CASE("labels are validated") {
    ModeSpace s(0, 2);
    CHECK_THROWS_AS(validate_label(s, Label({{0.0, 0.0}}), "x"), ContractError);
    CHECK_THROWS_AS(validate_label(s, Label({{0.0, 0.0}, {std::numeric_limits<double>::quiet_NaN(), 0.0}}), "x"),
                    ContractError);
    CHECK_NOTHROW(validate_label(s, Label({{0.0, 0.0}, {1.0, 2.0}}), "x"));
}

TEST_CASE("coherent amplitude") {
    ModeSpace s(0, 1, 0.5, {2.0});
    const Label l({{0.3, -0.8}});
    const Complex zeta = scaled_amplitude(s, l, 0);
    CHECK(zeta.real() == doctest::Approx(-0.8 / 2.0 / 2.0));
    CHECK(zeta.imag() == doctest::Approx(2.0 * 0.3 / 2.0));
    CHECK(std::abs(coherent_amplitude(s, l, 0) * std::sqrt(0.25) - zeta) < 1e-15);
}

TEST_CASE("overlap matches wavefunction quadrature") {
    std::mt19937_64 rng(7);
    for (double hbar : {1.0, 0.5}) {
        for (double w : {1.0, 1.7}) {
            ModeSpace s(0, 1, hbar, {w});
            for (int k = 0; k < 10; ++k) {
                const Label a = to::random_label(rng, 1, 2.0);
                const Label b = to::random_label(rng, 1, 2.0);
                const Complex ref = to::overlap_by_quadrature(a[0], b[0], w, hbar);
                CHECK(std::abs(overlap(s, a, b) - ref) < 1e-8);
            }
        }
    }
}

TEST_CASE("wavefunction matches direct formula") {
    ModeSpace s(0, 1, 0.5, {1.3});
    const Label l({{0.7, -0.4}});
    for (double x : {-2.0, -0.3, 0.0, 1.1}) {
        const double xs[1] = {x};
        CHECK(std::abs(coherent_wavefunction(s, l, xs) - to::wavefunction(0.7, -0.4, 1.3, 0.5, x)) < 1e-14);
    }
}

TEST_CASE("overlap properties on random labels") {
    std::mt19937_64 rng(11);
    ModeSpace s(1, 2, 0.7, {1.0, 0.6, 1.4});
    for (int k = 0; k < 100; ++k) {
        const Label a = to::random_label(rng, 3);
        const Label b = to::random_label(rng, 3);
        CHECK(std::abs(overlap(s, a, a) - 1.0) < 1e-14);
        CHECK(std::abs(overlap(s, a, b)) <= 1.0 + 1e-14);
        CHECK(std::abs(overlap(s, a, b) - std::conj(overlap(s, b, a))) < 1e-14);
        const Complex lo = log_overlap(s, a, b);
        CHECK(std::abs(std::exp(lo) - overlap(s, a, b)) < 1e-14);
        CHECK(std::abs(std::polar(1.0, overlap_phase(s, a, b)) - std::polar(1.0, lo.imag())) < 1e-12);
    }
}

TEST_CASE("overlap factorizes over modes") {
    ModeSpace s(0, 2, 1.0, {1.0, 2.0});
    const Label a({{0.1, 0.2}, {-0.5, 0.4}});
    const Label b({{0.3, -0.1}, {0.2, 0.9}});
    const Complex prod = overlap(s.single_mode(0), a.mode_part(0), b.mode_part(0)) *
                         overlap(s.single_mode(1), a.mode_part(1), b.mode_part(1));
    CHECK(std::abs(overlap(s, a, b) - prod) < 1e-15);
}

TEST_CASE("reproducing property on the standard grid") {
    for (double hbar : {1.0, 0.5}) {
        ModeSpace s(0, 1, hbar);
        std::vector<std::pair<Label, Label>> pairs{
            {Label({{0.0, 0.0}}), Label({{0.0, 0.0}})},
            {Label({{1.0, -0.5}}), Label({{0.2, 0.7}})},
            {Label({{-1.5, 2.0}}), Label({{-1.0, 1.0}})},
        };
        const auto r = resolution_residual(s, QuadratureAxis::standard(), pairs);
        CHECK(r.residual < 1e-6);
        CHECK(r.grid_covers_support);
    }
}

TEST_CASE("narrow grid is flagged") {
    ModeSpace s(0, 1);
    std::vector<std::pair<Label, Label>> pairs{{Label({{0.0, 0.0}}), Label({{0.0, 0.0}})}};
    const auto r = resolution_residual(s, QuadratureAxis::span_step(-1.0, 1.0, 0.05), pairs);
    CHECK_FALSE(r.grid_covers_support);
    CHECK(r.residual > 1e-3);
}

TEST_CASE("quadrature axis") {
    const auto a = QuadratureAxis::span_nodes(-1.0, 1.0, 5);
    CHECK(a.step() == doctest::Approx(0.5));
    CHECK(a.weight(0) == doctest::Approx(0.25));
    CHECK(a.weight(2) == doctest::Approx(0.5));
    CHECK(a.is_boundary(4));
    CHECK(QuadratureAxis::standard().nodes() == 321);
    CHECK(QuadratureAxis(0.0, 0.1, 1).weight(0) == doctest::Approx(0.1));
}

TEST_CASE("fiducial moments") {
    ModeSpace s(0, 1, 0.5, {1.5});
    const double vq = 0.5 * 1.5 * 1.5 / 2.0;
    const double vp = 0.5 / (2.0 * 1.5 * 1.5);
    CHECK(fiducial_moment(s, 0, 1, CanonicalAxis::position) == 0.0);
    CHECK(fiducial_moment(s, 0, 2, CanonicalAxis::position) == doctest::Approx(vq));
    CHECK(fiducial_moment(s, 0, 4, CanonicalAxis::position) == doctest::Approx(3 * vq * vq));
    CHECK(fiducial_moment(s, 0, 2, CanonicalAxis::momentum) == doctest::Approx(vp));
    CHECK(fiducial_moment(s, 0, 3, CanonicalAxis::momentum) == 0.0);
}
