#include "cspath/constraints.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "cspath/combinatorics.hpp"
#include "cspath/errors.hpp"
#include "cspath/symbols.hpp"
#include "kernel_terms.hpp"

namespace cspath {

namespace {

bool touches_constrained(const ModeSpace& space, const Monomial& mono) {
    for (std::size_t j = 0; j < space.n_constrained(); ++j)
        if (mono.modes[j].degree() > 0) return true;
    return false;
}

std::vector<double> uniform_times(std::size_t N, double T) {
    std::vector<double> t(N + 2);
    for (std::size_t n = 0; n < t.size(); ++n) t[n] = T * static_cast<double>(n) / static_cast<double>(N + 1);
    return t;
}

void check_lambda(std::span<const double> lambda_initial, std::span<const double> lambda_final, std::size_t nc) {
    if (lambda_initial.size() != nc) throw ContractError("lambda_initial", "expected one value per constraint");
    if (lambda_final.size() != nc) throw ContractError("lambda_final", "expected one value per constraint");
}

Complex reduced_overlap(const ModeSpace& space, const Label& initial, const Label& final_label) {
    return overlap(space.reduced_space(), final_label.reduced_part(space), initial.reduced_part(space));
}

StandardOrdered multiply(const StandardOrdered& x, const StandardOrdered& y, double hbar) {
    StandardOrdered out;
    for (const auto& [xa, xc] : x) {
        for (const auto& [ya, yc] : y) {
            const auto [a, b] = xa;
            const auto [c, d] = ya;
            // P^b Q^c = sum_k C(b,k) C(c,k) k! (-i hbar)^k Q^{c-k} P^{b-k}
            for (unsigned k = 0; k <= std::min(b, c); ++k) {
                const Complex coef = xc * yc * binomial(b, k) * binomial(c, k) * factorial(k) *
                                     ipow(Complex(0.0, -hbar), k);
                out[{a + c - k, b + d - k}] += coef;
            }
        }
    }
    std::erase_if(out, [](const auto& kv) { return kv.second == Complex(0.0); });
    return out;
}

// Key: (a_j, b_j) for constrained modes, then (raise, lower) for reduced modes.
using MixedKey = std::vector<unsigned>;

std::map<MixedKey, Complex> mixed_expansion(const ModeSpace& space, const PolynomialOperator& op) {
    const double hbar = space.hbar();
    const std::size_t nc = space.n_constrained();
    std::map<MixedKey, Complex> out;
    double scale = 0.0;
    for (const auto& [mono, c] : op.terms()) {
        std::vector<std::pair<MixedKey, Complex>> partial{{{}, c * ipow(hbar, mono.hbar_order)}};
        for (std::size_t j = 0; j < nc; ++j) {
            const auto so = standard_order_ladder(mono.modes[j].raise, mono.modes[j].lower, space.width(j), hbar);
            std::vector<std::pair<MixedKey, Complex>> next;
            for (const auto& [key, pc] : partial) {
                for (const auto& [ab, sc] : so) {
                    MixedKey k = key;
                    k.push_back(ab.first);
                    k.push_back(ab.second);
                    next.emplace_back(std::move(k), pc * sc);
                }
            }
            partial = std::move(next);
        }
        for (auto& [key, pc] : partial) {
            for (std::size_t j = nc; j < space.modes(); ++j) {
                key.push_back(mono.modes[j].raise);
                key.push_back(mono.modes[j].lower);
            }
            out[key] += pc;
            scale = std::max(scale, std::abs(pc));
        }
    }
    std::erase_if(out, [&](const auto& kv) { return std::abs(kv.second) <= 1e-13 * scale; });
    return out;
}

Eigen::MatrixXcd kron_all(const std::vector<Eigen::MatrixXcd>& factors) {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(1, 1);
    for (const auto& f : factors) m = Eigen::kroneckerProduct(m, f).eval();
    return m;
}

Eigen::VectorXcd kron_vectors(const std::vector<Eigen::VectorXcd>& factors) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Ones(1);
    for (const auto& f : factors) v = Eigen::kroneckerProduct(v, f).eval();
    return v;
}

Complex dirac_amplitude(const ModeSpace& space, const std::map<MixedKey, Complex>& expansion, const Label& z_initial,
                        const Label& z_final, double T, const DiracConfig& cfg, double length) {
    const double hbar = space.hbar();
    const std::size_t nc = space.n_constrained();
    const ModeSpace rs = space.reduced_space();
    BoxBasis box = cfg.box;
    box.length = length;
    const Eigen::MatrixXcd X = box_position(box, hbar);
    const Eigen::MatrixXcd K = box_momentum(box, hbar);
    const std::size_t bd = box.dimension();
    const std::size_t n = cfg.n_trunc;

    std::size_t dim = 1;
    for (std::size_t j = 0; j < nc; ++j) dim *= bd;
    for (std::size_t j = 0; j < space.n_reduced(); ++j) dim *= n;
    if (dim > cfg.max_dimension)
        throw RefusalError("Dirac representation needs dimension " + std::to_string(dim) + " > " +
                           std::to_string(cfg.max_dimension));

    std::map<unsigned, Eigen::MatrixXcd> xpow{{0u, Eigen::MatrixXcd::Identity(bd, bd)}};
    std::map<unsigned, Eigen::MatrixXcd> kpow{{0u, Eigen::MatrixXcd::Identity(bd, bd)}};
    auto power = [](std::map<unsigned, Eigen::MatrixXcd>& cache, const Eigen::MatrixXcd& base, unsigned e) {
        while (cache.rbegin()->first < e) {
            const unsigned top = cache.rbegin()->first;
            cache[top + 1] = cache[top] * base;
        }
        return cache.at(e);
    };

    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(dim, dim);
    for (const auto& [key, c] : expansion) {
        std::vector<Eigen::MatrixXcd> factors;
        for (std::size_t j = 0; j < nc; ++j)
            factors.push_back(power(xpow, X, key[2 * j]) * power(kpow, K, key[2 * j + 1]));
        for (std::size_t r = 0; r < space.n_reduced(); ++r)
            factors.push_back(ladder_matrix(n, key[2 * nc + 2 * r], key[2 * nc + 2 * r + 1], hbar));
        H += c * kron_all(factors);
    }
    const Eigen::MatrixXcd U = (Complex(0.0, -T / hbar) * H).exp();

    auto phys = [&](const Label& z) {
        std::vector<Eigen::VectorXcd> parts;
        for (std::size_t j = 0; j < nc; ++j) {
            Eigen::VectorXcd e = Eigen::VectorXcd::Zero(bd);
            e(box.zero_index()) = 1.0;
            parts.push_back(e);
        }
        for (std::size_t r = 0; r < space.n_reduced(); ++r) parts.push_back(coherent_vector(rs, z, r, n));
        return kron_vectors(parts);
    };
    const Eigen::VectorXcd a = phys(z_initial);
    const Eigen::VectorXcd b = phys(z_final);
    return b.dot(U * a);
}

Complex route_gap(const RouteOutcome& a, const RouteOutcome& b) { return a.amplitude - b.amplitude; }

}  // namespace

ConstraintSpec ConstraintSpec::from_space(const ModeSpace& space) {
    ConstraintSpec spec;
    for (std::size_t j = 0; j < space.n_constrained(); ++j) spec.indices.push_back(j);
    return spec;
}

void ConstraintSpec::validate(const ModeSpace& space) const {
    std::set<std::size_t> seen;
    for (std::size_t i : indices) {
        if (i >= space.modes()) throw ContractError("constrained_modes", "index " + std::to_string(i) + " out of range");
        if (!seen.insert(i).second) throw ContractError("constrained_modes", "indices must be distinct");
    }
    if (seen.size() != space.n_constrained() || (!seen.empty() && *seen.rbegin() + 1 != seen.size()))
        throw ContractError("constrained_modes", "constrained modes must be the leading n_constrained modes");
}

PolynomialOperator reduced_hamiltonian(const ModeSpace& space, const PolynomialOperator& op) {
    op.check_space(space);
    if (space.n_constrained() == 0) return op;
    return op.drop_leading_modes(space.n_constrained());
}

PolynomialOperator constrained_sector_terms(const ModeSpace& space, const PolynomialOperator& op) {
    op.check_space(space);
    PolynomialOperator out(space);
    for (const auto& [mono, c] : op.terms())
        if (touches_constrained(space, mono)) out.add_term(mono, c);
    return out;
}

void require_constraint_surface(const ModeSpace& space, const Label& label, const std::string& name) {
    validate_label(space, label, name);
    for (std::size_t j = 0; j < space.n_constrained(); ++j)
        if (label[j].p != 0.0)
            throw ContractError(name, "constrained momentum p_" + std::to_string(j) + " must be 0 on the constraint surface");
}

double constrained_state_moments(const ModeSpace& space, std::size_t constraint, std::span<const double> q,
                                 const Label& z, unsigned n) {
    if (constraint >= space.n_constrained()) throw ContractError("constraint", "not a constrained mode");
    if (q.size() != space.n_constrained()) throw ContractError("q", "expected one value per constraint");
    if (z.size() != space.n_reduced()) throw ContractError("z", "expected one pair per reduced mode");
    std::vector<PhasePoint> cpts(q.size());
    for (std::size_t j = 0; j < q.size(); ++j) cpts[j] = {0.0, q[j]};
    const Label label = Label::split(space, cpts, z.modes());
    validate_label(space, label, "label");

    const PolynomialOperator op = PolynomialOperator::momentum(space, constraint).pow(n);
    // Only monomials without p or q powers survive at p = 0 once the exact expansion has cancelled.
    const PqPolynomial poly = upper_symbol(op).expand();
    return poly.evaluate(space, label).real();
}

PropagatorResult projected_lattice_propagator(const ModeSpace& space, const PolynomialOperator& op,
                                              const Label& initial, const Label& final_label,
                                              const LatticeConfig& cfg, const LatticeGrid& grid) {
    require_constraint_surface(space, initial, "initial");
    require_constraint_surface(space, final_label, "final");
    if (cfg.route != SymbolRoute::upper)
        throw ContractError("route", "the projected lattice uses the upper-symbol route");
    PinnedModes pinned(space.modes(), false);
    for (std::size_t j = 0; j < space.n_constrained(); ++j) pinned[j] = true;
    return propagator(space, op, initial, final_label, cfg, grid, pinned);
}

ProjectedResult projected_normalized(const ModeSpace& space, const PolynomialOperator& op, const Label& initial,
                                     const Label& final_label, const LatticeConfig& cfg, const LatticeGrid& grid,
                                     bool with_error_estimate) {
    const PolynomialOperator zero(space);
    const Complex zz = reduced_overlap(space, initial, final_label);
    ProjectedResult out;
    out.raw = projected_lattice_propagator(space, op, initial, final_label, cfg, grid);
    out.anchor = projected_lattice_propagator(space, zero, initial, final_label, cfg, grid);
    out.normalized = std::exp(out.raw.log_amplitude - out.anchor.log_amplitude) * zz;
    if (with_error_estimate && cfg.N >= 2) {
        LatticeConfig half = cfg;
        half.N = (cfg.N + 1) / 2 - 1;
        const auto r = projected_lattice_propagator(space, op, initial, final_label, half, grid);
        const auto a = projected_lattice_propagator(space, zero, initial, final_label, half, grid);
        const Complex coarse = std::exp(r.log_amplitude - a.log_amplitude) * zz;
        out.error_estimate = std::abs(coarse - out.normalized);
        out.extrapolated = half.N == cfg.N ? out.normalized
                                           : richardson_first_order(half.epsilon(), coarse, cfg.epsilon(), out.normalized);
    } else {
        out.extrapolated = out.normalized;
    }
    out.raw.error_estimate = std::max(out.raw.error_estimate, out.error_estimate);
    return out;
}

Eigen::MatrixXd lambda_covariance_kernel(std::size_t N, double T) {
    const auto t = uniform_times(N, T);
    Eigen::MatrixXd k(N, N);
    for (std::size_t j = 0; j < N; ++j)
        for (std::size_t l = 0; l < N; ++l)
            k(j, l) = (T - std::max(t[j + 1], t[l + 1])) * std::min(t[j + 1], t[l + 1]);
    return k;
}

Complex log_lambda_effective_weight(std::span<const std::vector<double>> p_path,
                                    std::span<const double> lambda_initial, std::span<const double> lambda_final,
                                    double nu, double T, double hbar) {
    if (!(nu > 0.0) || !std::isfinite(nu)) throw ContractError("nu", "must be positive and finite");
    if (!(T > 0.0)) throw ContractError("T", "must be positive");
    if (!(hbar > 0.0)) throw ContractError("hbar", "must be positive");
    const std::size_t nc = lambda_initial.size();
    check_lambda(lambda_initial, lambda_final, nc);
    const std::size_t N = p_path.size();
    for (const auto& row : p_path)
        if (row.size() != nc) throw ContractError("p_path", "each slice needs one momentum per constraint");
    const auto t = uniform_times(N, T);
    const Eigen::MatrixXd K = lambda_covariance_kernel(N, T);

    Complex e(0.0);
    for (std::size_t i = 0; i < nc; ++i) {
        const double d = lambda_final[i] - lambda_initial[i];
        e += -d * d / (2.0 * nu * T);
        Eigen::VectorXd p(N);
        for (std::size_t n = 0; n < N; ++n) {
            p(n) = p_path[n][i];
            const double m = (lambda_initial[i] * (T - t[n + 1]) + lambda_final[i] * t[n + 1]) / T;
            e += Complex(0.0, -p(n) * m / hbar);
        }
        e += -nu / (2.0 * hbar * hbar * T) * p.dot(K * p);
    }
    return e;
}

Complex lambda_effective_weight(std::span<const std::vector<double>> p_path, std::span<const double> lambda_initial,
                                std::span<const double> lambda_final, double nu, double T, double hbar) {
    return std::exp(log_lambda_effective_weight(p_path, lambda_initial, lambda_final, nu, T, hbar));
}

PathExponentHook lambda_weight_hook(const ModeSpace& space, double nu, double T, std::span<const double> lambda_initial,
                                    std::span<const double> lambda_final) {
    const std::size_t nc = space.n_constrained();
    check_lambda(lambda_initial, lambda_final, nc);
    if (!(nu > 0.0) || !std::isfinite(nu)) throw ContractError("nu", "must be positive and finite");
    if (!(T > 0.0)) throw ContractError("T", "must be positive");
    const double hbar = space.hbar();
    std::vector<double> l0(lambda_initial.begin(), lambda_initial.end());
    std::vector<double> l1(lambda_final.begin(), lambda_final.end());
    return [=](GaussianExponent& g, const PathLayout& layout) {
        const std::size_t N = layout.N;
        const auto t = uniform_times(N, T);
        const Eigen::MatrixXd K = lambda_covariance_kernel(N, T);
        const double a = -nu / (2.0 * hbar * hbar * T);
        for (std::size_t i = 0; i < nc; ++i) {
            const double d = l1[i] - l0[i];
            g.add_constant(-d * d / (2.0 * nu * T));
            for (std::size_t n = 1; n <= N; ++n) {
                const double m = (l0[i] * (T - t[n]) + l1[i] * t[n]) / T;
                g.add_linear(layout.p(n, i), Complex(0.0, -m / hbar));
                for (std::size_t k = 1; k <= N; ++k) g.add_quadratic(layout.p(n, i), layout.p(k, i), a * K(n - 1, k - 1));
            }
        }
    };
}

std::vector<SaddleRow> saddle_concentration_check(const std::vector<double>& nu_ladder, const LatticeConfig& cfg,
                                                  double hbar) {
    cfg.validate();
    if (!(cfg.T > 0.0)) throw ContractError("T", "must be positive");
    if (nu_ladder.empty()) throw ContractError("nu_ladder", "at least one value is required");
    const Eigen::MatrixXd K = lambda_covariance_kernel(cfg.N, cfg.T);
    const double kappa = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(K, Eigen::EigenvaluesOnly).eigenvalues()(0);
    const std::vector<double> lam{0.0};
    std::vector<std::vector<double>> zero(cfg.N, std::vector<double>(1, 0.0));
    std::vector<std::vector<double>> probe = zero;
    probe[(cfg.N - 1) / 2][0] = 0.1;

    std::vector<SaddleRow> rows;
    for (double nu : nu_ladder) {
        if (!(nu > 0.0)) throw ContractError("nu_ladder", "values must be positive");
        SaddleRow r;
        r.nu = nu;
        r.width = hbar * std::sqrt(cfg.T / (nu * kappa));
        r.width_ratio = rows.empty() ? 1.0 : r.width / rows.front().width;
        const Complex w0 = lambda_effective_weight(zero, lam, lam, nu, cfg.T, hbar);
        r.zero_path_weight = std::abs(w0);
        r.probe_weight = std::abs(lambda_effective_weight(probe, lam, lam, nu, cfg.T, hbar)) / r.zero_path_weight;
        rows.push_back(r);
    }
    return rows;
}

HcrValue reduced_symbol_Hcr(const ModeSpace& space, const PolynomialOperator& op, std::span<const double> q,
                            const Label& z) {
    op.check_space(space);
    if (q.size() != space.n_constrained()) throw ContractError("q", "expected one value per constraint");
    if (z.size() != space.n_reduced()) throw ContractError("z", "expected one pair per reduced mode");
    std::vector<PhasePoint> cpts(q.size());
    for (std::size_t j = 0; j < q.size(); ++j) cpts[j] = {0.0, q[j]};
    const Label label = Label::split(space, cpts, z.modes());
    HcrValue v;
    v.total = upper_symbol(op).expand().evaluate(space, label);
    v.reduced = upper_symbol(reduced_hamiltonian(space, op)).expand().evaluate(space.reduced_space(), z);
    v.constrained = v.total - v.reduced;
    return v;
}

bool hcr_depends_on_q(const ModeSpace& space, const PolynomialOperator& op) {
    const PqPolynomial poly = upper_symbol(constrained_sector_terms(space, op)).expand();
    double scale = 0.0;
    for (const auto& [mono, c] : poly.terms()) scale = std::max(scale, std::abs(c));
    for (const auto& [mono, c] : poly.terms()) {
        if (std::abs(c) <= 1e-13 * scale) continue;
        bool on_surface = true;
        bool has_q = false;
        for (std::size_t j = 0; j < space.n_constrained(); ++j) {
            on_surface = on_surface && mono.modes[j].p == 0;
            has_q = has_q || mono.modes[j].q > 0;
        }
        if (on_surface && has_q) return true;
    }
    return false;
}

StandardOrdered standard_order_ladder(unsigned m, unsigned n, double w, double hbar) {
    const StandardOrdered raise{{{1u, 0u}, Complex(0.5 / w, 0.0)}, {{0u, 1u}, Complex(0.0, -0.5 * w)}};
    const StandardOrdered lower{{{1u, 0u}, Complex(0.5 / w, 0.0)}, {{0u, 1u}, Complex(0.0, 0.5 * w)}};
    StandardOrdered out{{{0u, 0u}, Complex(1.0)}};
    for (unsigned r = 0; r < m; ++r) out = multiply(out, raise, hbar);
    for (unsigned r = 0; r < n; ++r) out = multiply(out, lower, hbar);
    return out;
}

Eigen::MatrixXcd box_position(const BoxBasis& box, double hbar) {
    (void)hbar;
    if (!(box.length > 0.0) || !std::isfinite(box.length)) throw ContractError("box_length", "must be positive");
    const auto d = static_cast<Eigen::Index>(box.dimension());
    Eigen::MatrixXcd x = Eigen::MatrixXcd::Zero(d, d);
    for (Eigen::Index j = 0; j < d; ++j) {
        for (Eigen::Index l = 0; l < d; ++l) {
            if (j == l) continue;
            const auto m = static_cast<double>(l - j);
            const double sign = ((l - j) % 2 == 0) ? 1.0 : -1.0;
            x(j, l) = Complex(0.0, -sign * box.length / (2.0 * std::numbers::pi * m));
        }
    }
    return x;
}

Eigen::MatrixXcd box_momentum(const BoxBasis& box, double hbar) {
    if (!(box.length > 0.0) || !std::isfinite(box.length)) throw ContractError("box_length", "must be positive");
    const auto d = static_cast<Eigen::Index>(box.dimension());
    Eigen::MatrixXcd k = Eigen::MatrixXcd::Zero(d, d);
    for (Eigen::Index j = 0; j < d; ++j)
        k(j, j) = 2.0 * std::numbers::pi * hbar * static_cast<double>(j - static_cast<Eigen::Index>(box.J)) / box.length;
    return k;
}

DiracResult dirac_physical_matrix_element(const ModeSpace& space, const PolynomialOperator& op, const Label& z_initial,
                                          const Label& z_final, double T, const DiracConfig& cfg) {
    op.check_space(space);
    if (!(cfg.box.length > 0.0) || !std::isfinite(cfg.box.length)) throw ContractError("box_length", "must be positive");
    if (!std::isfinite(T)) throw ContractError("T", "must be finite");
    if (cfg.n_trunc < 4) throw ContractError("n_trunc", "must be at least 4");
    const ModeSpace rs = space.reduced_space();
    validate_label(rs, z_initial, "z_initial");
    validate_label(rs, z_final, "z_final");
    for (const Label* z : {&z_initial, &z_final}) {
        if (truncation_norm_loss(rs, *z, cfg.n_trunc) > cfg.norm_loss_tolerance)
            throw RefusalError("reduced label needs n_trunc >= " +
                               std::to_string(required_truncation(rs, *z, cfg.norm_loss_tolerance)));
    }

    const auto expansion = mixed_expansion(space, op);
    DiracResult out;
    for (const auto& [key, c] : expansion)
        for (std::size_t j = 0; j < space.n_constrained(); ++j)
            if (key[2 * j] > 0) out.bare_constrained_position = true;

    out.amplitude = dirac_amplitude(space, expansion, z_initial, z_final, T, cfg, cfg.box.length);
    if (space.n_constrained() > 0) {
        const Complex twice = dirac_amplitude(space, expansion, z_initial, z_final, T, cfg, 2.0 * cfg.box.length);
        out.box_variation = std::abs(out.amplitude - twice);
    }
    out.factorizes = out.box_variation <= cfg.factorization_tolerance;
    out.dimension = static_cast<std::size_t>(std::pow(cfg.box.dimension(), space.n_constrained()) *
                                             std::pow(cfg.n_trunc, space.n_reduced()));
    return out;
}

PropagatorResult extended_lattice_propagator(const ModeSpace& space, const PolynomialOperator& op,
                                             const Label& initial, const Label& final_label,
                                             const LatticeConfig& cfg, double nu,
                                             std::span<const double> lambda_initial,
                                             std::span<const double> lambda_final) {
    cfg.validate();
    if (!(cfg.T > 0.0)) throw ContractError("T", "the multiplier weight needs T > 0");
    if (cfg.route != SymbolRoute::upper)
        throw ContractError("route", "the extended lattice uses the upper-symbol route");
    op.check_space(space);
    require_constraint_surface(space, initial, "initial");
    require_constraint_surface(space, final_label, "final");
    const PathExponentHook hook = lambda_weight_hook(space, nu, cfg.T, lambda_initial, lambda_final);

    const std::size_t M = space.modes();
    const PathLayout layout{M, cfg.N};
    std::vector<bool> diagonal(M, false);
    for (std::size_t j = 0; j < space.n_constrained(); ++j) diagonal[j] = true;
    const auto terms = detail::kernel_terms(op, space, SymbolRoute::upper, diagonal);
    const double eps = cfg.epsilon();

    GaussianExponent g(layout.size());
    for (std::size_t n = 0; n <= cfg.N; ++n) detail::add_kernel(g, space, terms, eps, layout.label(n + 1), layout.label(n));
    g.add_constant(-static_cast<double>(M * cfg.N) * std::log(2.0 * std::numbers::pi * space.hbar()));
    hook(g, layout);
    for (std::size_t j = 0; j < M; ++j) {
        g.fix(layout.p(0, j), initial[j].p);
        g.fix(layout.q(0, j), initial[j].q);
        g.fix(layout.p(cfg.N + 1, j), final_label[j].p);
        g.fix(layout.q(cfg.N + 1, j), final_label[j].q);
    }
    for (std::size_t j = 0; j < space.n_constrained(); ++j)
        for (std::size_t n = 1; n <= cfg.N; ++n) g.integrate(layout.p(n, j));
    g.integrate_all();

    PropagatorResult out;
    out.amplitude = std::exp(g.constant());
    out.log_amplitude = g.constant();
    out.method = Method::gaussian_chain;
    out.N = cfg.N;
    out.T = cfg.T;
    out.epsilon = eps;
    out.route = SymbolRoute::upper;
    return out;
}

ExtendedWienerResult extended_wiener_propagator(const ModeSpace& space, const PolynomialOperator& op,
                                                const Label& initial, const Label& final_label,
                                                const ExtendedWienerConfig& cfg) {
    op.check_space(space);
    require_constraint_surface(space, initial, "initial");
    require_constraint_surface(space, final_label, "final");
    const std::size_t nr_axes = 2 * space.n_reduced();
    if (!cfg.reduced_metric.empty() && cfg.reduced_metric.size() != nr_axes)
        throw ContractError("reduced_metric", "expected " + std::to_string(nr_axes) + " weights");

    WienerConfig w;
    w.nu = cfg.nu;
    w.lattice = cfg.lattice;
    w.lattice.route = SymbolRoute::lower;
    w.metric.weights.assign(2 * space.n_constrained(), 1.0);
    if (cfg.reduced_metric.empty())
        w.metric.weights.insert(w.metric.weights.end(), nr_axes, 1.0);
    else
        w.metric.weights.insert(w.metric.weights.end(), cfg.reduced_metric.begin(), cfg.reduced_metric.end());
    w.validate();

    std::vector<double> l0 = cfg.lambda_initial;
    std::vector<double> l1 = cfg.lambda_final;
    if (l0.empty()) l0.assign(space.n_constrained(), 0.0);
    if (l1.empty()) l1 = l0;
    PathExponentHook hook;
    if (space.n_constrained() > 0) hook = lambda_weight_hook(space, cfg.nu, cfg.lattice.T, l0, l1);

    ExtendedWienerResult out;
    out.signal = regularized_propagator_gaussian(space, lower_symbol(op), initial, final_label, w, hook);
    out.anchor = regularized_propagator_gaussian(space, SymbolFn(SymbolKind::lower, space.widths()), initial,
                                                 final_label, w, hook);
    out.normalized = out.signal.ratio / out.anchor.ratio * reduced_overlap(space, initial, final_label);
    return out;
}

const RouteOutcome* EquivalenceReport::route(const std::string& name) const {
    for (const auto& r : routes)
        if (r.name == name) return &r;
    return nullptr;
}

EquivalenceReport equivalence_report(const ModeSpace& space, const PolynomialOperator& op, const Label& initial,
                                     const Label& final_label, const EquivalenceConfig& cfg) {
    return equivalence_report(space, op, reduced_hamiltonian(space, op), initial, final_label, cfg);
}

EquivalenceReport equivalence_report(const ModeSpace& space, const PolynomialOperator& op,
                                     const PolynomialOperator& reduced, const Label& initial,
                                     const Label& final_label, const EquivalenceConfig& cfg) {
    op.check_space(space);
    reduced.check_space(space.reduced_space());
    require_constraint_surface(space, initial, "initial");
    require_constraint_surface(space, final_label, "final");
    if (!(cfg.T > 0.0) || !std::isfinite(cfg.T)) throw ContractError("T", "must be positive and finite");
    if (cfg.nu_ladder.size() < 2) throw ContractError("nu_ladder", "at least two values are required");
    for (std::size_t i = 1; i < cfg.nu_ladder.size(); ++i)
        if (!(cfg.nu_ladder[i] > cfg.nu_ladder[i - 1]))
            throw ContractError("nu_ladder", "values must increase strictly");

    EquivalenceReport rep;
    const PolynomialOperator csec = constrained_sector_terms(space, op);
    rep.constrained_sector_terms = !csec.is_zero();
    rep.gauge_breaking = hcr_depends_on_q(space, op);

    auto attempt = [&](const std::string& name, const auto& body) {
        RouteOutcome r;
        r.name = name;
        try {
            body(r);
            r.ok = true;
        } catch (const std::exception& e) {
            r.ok = false;
            r.error = e.what();
        }
        rep.routes.push_back(r);
    };

    attempt("projected", [&](RouteOutcome& r) {
        bool small_degree = op.degree() <= 2;
        if (op.is_separable()) {
            small_degree = true;
            for (std::size_t j = 0; j < space.modes(); ++j)
                small_degree = small_degree && op.single_mode_part(j).degree() <= 2;
        }
        const std::size_t N = small_degree ? cfg.projected_N : cfg.projected_quadrature_N;
        const auto res = projected_normalized(space, op, initial, final_label, LatticeConfig{N, cfg.T, SymbolRoute::upper},
                                              cfg.grid, true);
        r.amplitude = res.normalized;
        r.error_estimate = res.error_estimate;
        r.normalized = true;
    });

    attempt("extended", [&](RouteOutcome& r) {
        for (double nu : cfg.nu_ladder) {
            ExtendedWienerConfig w;
            w.nu = nu;
            w.lattice = LatticeConfig{cfg.wiener_N, cfg.T, SymbolRoute::lower};
            w.reduced_metric = cfg.reduced_metric;
            w.lambda_initial.assign(space.n_constrained(), cfg.lambda_common);
            w.lambda_final = w.lambda_initial;
            rep.ladder.push_back({nu, extended_wiener_propagator(space, op, initial, final_label, w).normalized, 0.0});
        }
        const auto& top = rep.ladder.back();
        const auto& prev = rep.ladder[rep.ladder.size() - 2];
        r.amplitude = top.amplitude;
        r.error_estimate = std::abs(top.amplitude - prev.amplitude);
        r.normalized = true;
    });

    attempt("dirac", [&](RouteOutcome& r) {
        const auto d = dirac_physical_matrix_element(space, op, initial.reduced_part(space),
                                                     final_label.reduced_part(space), cfg.T, cfg.dirac);
        rep.bare_constrained_position = d.bare_constrained_position;
        r.amplitude = d.amplitude;
        r.error_estimate = d.box_variation;
        r.normalized = true;
        if (!d.factorizes)
            throw RefusalError("Dirac matrix element depends on the box length (variation " +
                               std::to_string(d.box_variation) + "); the constrained-sector terms are not first class");
    });

    attempt("reduced_oracle", [&](RouteOutcome& r) {
        const auto res = fock_propagator(space.reduced_space(), reduced,
                                         initial.reduced_part(space), final_label.reduced_part(space), cfg.T, cfg.oracle);
        r.amplitude = res.amplitude;
        r.error_estimate = res.error_estimate;
        r.normalized = false;
    });

    for (std::size_t i = 0; i < rep.routes.size(); ++i)
        for (std::size_t j = i + 1; j < rep.routes.size(); ++j)
            if (rep.routes[i].ok && rep.routes[j].ok)
                rep.deviations.push_back(
                    {rep.routes[i].name, rep.routes[j].name, std::abs(route_gap(rep.routes[i], rep.routes[j]))});

    const RouteOutcome* oracle = rep.route("reduced_oracle");
    if (oracle && oracle->ok) {
        for (auto& row : rep.ladder) row.distance = std::abs(row.amplitude - oracle->amplitude);
        if (!rep.ladder.empty()) {
            rep.ladder_monotone = true;
            for (std::size_t i = 1; i < rep.ladder.size(); ++i)
                rep.ladder_monotone = rep.ladder_monotone && rep.ladder[i].distance < rep.ladder[i - 1].distance;
            const RouteOutcome* ext = rep.route("extended");
            rep.ladder_within_error =
                ext && ext->ok && rep.ladder.back().distance <= cfg.ladder_factor * ext->error_estimate;
        }
    }

    rep.core_agree = true;
    const std::vector<std::string> core{"projected", "dirac", "reduced_oracle"};
    for (const auto& name : core) {
        const RouteOutcome* r = rep.route(name);
        rep.core_agree = rep.core_agree && r && r->ok;
    }
    for (const auto& d : rep.deviations) {
        const bool a_core = std::find(core.begin(), core.end(), d.a) != core.end();
        const bool b_core = std::find(core.begin(), core.end(), d.b) != core.end();
        if (a_core && b_core) rep.core_max_deviation = std::max(rep.core_max_deviation, d.value);
    }
    rep.core_agree = rep.core_agree && rep.core_max_deviation <= cfg.tolerance;
    return rep;
}

}  // namespace cspath
