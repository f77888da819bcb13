#include "cspath/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

#include "cspath/combinatorics.hpp"
#include "cspath/errors.hpp"
#include "cspath/gaussian_form.hpp"
#include "cspath/symbols.hpp"
#include "kernel_terms.hpp"

namespace cspath {

std::string to_string(SymbolRoute route) {
    switch (route) {
        case SymbolRoute::upper: return "upper";
        case SymbolRoute::lower: return "lower";
        case SymbolRoute::upper_diagonal: return "upper_diagonal";
    }
    return "unknown";
}

std::string to_string(Method method) {
    switch (method) {
        case Method::gaussian_chain: return "gaussian_chain";
        case Method::quadrature: return "quadrature";
        case Method::fock_oracle: return "fock_oracle";
        case Method::wiener_mc: return "wiener_mc";
        case Method::wiener_exact: return "wiener_exact";
    }
    return "unknown";
}

SymbolRoute parse_symbol_route(std::string_view text) {
    if (text == "upper") return SymbolRoute::upper;
    if (text == "lower") return SymbolRoute::lower;
    if (text == "upper_diagonal") return SymbolRoute::upper_diagonal;
    throw ContractError("route", "expected upper, lower or upper_diagonal, got '" + std::string(text) + "'");
}

void LatticeConfig::validate() const {
    if (N < 1) throw ContractError("N", "at least one interior slice is required");
    if (!std::isfinite(T)) throw ContractError("T", "must be finite");
}

QuadratureAxis default_lattice_axis() { return QuadratureAxis::span_nodes(-7.5, 7.5, 61); }

namespace {

using detail::KernelTerm;

void check_pinned(const ModeSpace& space, const PinnedModes& pinned) {
    if (!pinned.empty() && pinned.size() != space.modes())
        throw ContractError("pinned", "one flag per mode is required");
}

bool is_pinned(const PinnedModes& pinned, std::size_t mode) { return !pinned.empty() && pinned[mode]; }

struct NodeData {
    std::vector<Complex> bra_conj_zeta;  // (2 / hbar) conj(zeta_j)
    std::vector<Complex> ket_zeta;
    Complex bra_scalar;
    Complex ket_scalar;
    std::vector<Complex> bra_bilinear;
    std::vector<Complex> ket_bilinear;
    double weight = 1.0;
    bool boundary = false;
};

NodeData node_data(const ModeSpace& space, const Label& x, const std::vector<KernelTerm>& terms, double epsilon) {
    const double hbar = space.hbar();
    NodeData d;
    d.bra_scalar = 0.0;
    d.ket_scalar = 0.0;
    for (std::size_t j = 0; j < space.modes(); ++j) {
        const Complex z = scaled_amplitude(space, x, j);
        d.bra_conj_zeta.push_back(std::conj(z) * (2.0 / hbar));
        d.ket_zeta.push_back(z);
        d.bra_scalar += -std::norm(z) / hbar + Complex(0.0, x[j].p * x[j].q / (2.0 * hbar));
        d.ket_scalar += -std::norm(z) / hbar - Complex(0.0, x[j].p * x[j].q / (2.0 * hbar));
    }
    const Complex scale(0.0, -epsilon / hbar);
    for (const auto& t : terms) {
        Complex bv = t.coeff;
        Complex kv = 1.0;
        for (const auto& f : t.factors) {
            const Complex z = f.conjugate ? std::conj(d.ket_zeta[f.mode]) : d.ket_zeta[f.mode];
            (f.on_bra ? bv : kv) *= z;
        }
        if (t.has_bra() && t.has_ket()) {
            d.bra_bilinear.push_back(scale * bv);
            d.ket_bilinear.push_back(kv);
        } else if (t.has_ket()) {
            d.ket_scalar += scale * bv * kv;
        } else {
            d.bra_scalar += scale * bv * kv;
        }
    }
    return d;
}

Complex log_kernel(const NodeData& bra, const NodeData& ket) {
    Complex e = bra.bra_scalar + ket.ket_scalar;
    for (std::size_t j = 0; j < bra.bra_conj_zeta.size(); ++j) e += bra.bra_conj_zeta[j] * ket.ket_zeta[j];
    for (std::size_t b = 0; b < bra.bra_bilinear.size(); ++b) e += bra.bra_bilinear[b] * ket.ket_bilinear[b];
    return e;
}

std::size_t worker_count(std::size_t requested) {
    if (requested > 0) return requested;
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

template <class F>
void parallel_for(std::size_t n, std::size_t threads, F&& body) {
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
        const std::size_t lo = t * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        pool.emplace_back([lo, hi, &body] {
            for (std::size_t i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace

Complex log_short_time_kernel(const ModeSpace& space, const PolynomialOperator& op, const Label& bra,
                              const Label& ket, double epsilon, SymbolRoute route) {
    op.check_space(space);
    if (!std::isfinite(epsilon)) throw ContractError("epsilon", "must be finite");
    Complex e = log_overlap(space, bra, ket);
    Complex s(0.0);
    for (const auto& t : detail::kernel_terms(op, space, route)) {
        Complex v = t.coeff;
        for (const auto& f : t.factors) {
            const Complex z = scaled_amplitude(space, f.on_bra ? bra : ket, f.mode);
            v *= f.conjugate ? std::conj(z) : z;
        }
        s += v;
    }
    return e + Complex(0.0, -epsilon / space.hbar()) * s;
}

Complex short_time_kernel(const ModeSpace& space, const PolynomialOperator& op, const Label& bra, const Label& ket,
                          double epsilon, SymbolRoute route) {
    return std::exp(log_short_time_kernel(space, op, bra, ket, epsilon, route));
}

PropagatorResult propagator_gaussian_chain(const ModeSpace& space, const PolynomialOperator& op, const Label& initial,
                                           const Label& final_label, const LatticeConfig& cfg,
                                           const PinnedModes& pinned) {
    cfg.validate();
    op.check_space(space);
    validate_label(space, initial, "initial");
    validate_label(space, final_label, "final");
    check_pinned(space, pinned);
    if (op.degree() > 2) throw RefusalError("Gaussian chain needs an operator of total degree <= 2, got degree " +
                                            std::to_string(op.degree()));

    const auto terms = detail::kernel_terms(op, space, cfg.route, pinned);
    const double eps = cfg.epsilon();
    const std::size_t dim = 2 * space.modes();
    const Complex measure = -static_cast<double>(space.modes()) * std::log(2.0 * std::numbers::pi * space.hbar());

    GaussianExponent first(2 * dim);
    detail::add_kernel(first, space, terms, eps, dim, 0);
    for (std::size_t j = 0; j < space.modes(); ++j) {
        first.fix(2 * j, initial[j].p);
        first.fix(2 * j + 1, initial[j].q);
    }
    GaussianExponent state = first.compacted();

    Complex log_amp(0.0);
    for (std::size_t n = 1; n <= cfg.N; ++n) {
        GaussianExponent g(2 * dim);
        g.accumulate(state, 0);
        detail::add_kernel(g, space, terms, eps, dim, 0);
        for (std::size_t j = 0; j < space.modes(); ++j) {
            if (is_pinned(pinned, j))
                g.fix(2 * j, 0.0);
            else
                g.integrate(2 * j);
            g.integrate(2 * j + 1);
        }
        g.add_constant(measure);
        if (n < cfg.N) {
            state = g.compacted();
            continue;
        }
        for (std::size_t j = 0; j < space.modes(); ++j) {
            g.fix(dim + 2 * j, final_label[j].p);
            g.fix(dim + 2 * j + 1, final_label[j].q);
        }
        log_amp = g.constant();
    }

    PropagatorResult out;
    out.amplitude = std::exp(log_amp);
    out.log_amplitude = log_amp;
    out.method = Method::gaussian_chain;
    out.N = cfg.N;
    out.T = cfg.T;
    out.epsilon = eps;
    out.route = cfg.route;
    out.error_estimate = 0.0;
    return out;
}

PropagatorResult propagator_quadrature(const ModeSpace& space, const PolynomialOperator& op, const Label& initial,
                                       const Label& final_label, const LatticeConfig& cfg, const LatticeGrid& grid,
                                       const PinnedModes& pinned) {
    cfg.validate();
    op.check_space(space);
    validate_label(space, initial, "initial");
    validate_label(space, final_label, "final");
    check_pinned(space, pinned);

    const std::size_t modes = space.modes();
    const QuadratureAxis& axis = grid.axis;
    if (modes * cfg.N > kMaxLatticeAxes)
        throw RefusalError("quadrature budget exceeded: modes * N = " + std::to_string(modes * cfg.N) + " > " +
                           std::to_string(kMaxLatticeAxes));
    if (axis.nodes() > kMaxNodesPerAxis)
        throw RefusalError("quadrature budget exceeded: " + std::to_string(axis.nodes()) + " nodes per axis > " +
                           std::to_string(kMaxNodesPerAxis));

    // Axes per label: (p_j, q_j) per mode, with pinned momenta reduced to the single node p = 0.
    std::vector<std::size_t> extent;
    for (std::size_t j = 0; j < modes; ++j) {
        extent.push_back(is_pinned(pinned, j) ? 1 : axis.nodes());
        extent.push_back(axis.nodes());
    }
    std::size_t count = 1;
    for (std::size_t e : extent) {
        count *= e;
        if (count > kMaxNodesPerLabel)
            throw RefusalError("quadrature budget exceeded: more than " + std::to_string(kMaxNodesPerLabel) +
                               " nodes per label grid");
    }

    const auto terms = detail::kernel_terms(op, space, cfg.route, pinned);
    const double eps = cfg.epsilon();
    const double measure = std::pow(2.0 * std::numbers::pi * space.hbar(), -static_cast<double>(modes));

    std::vector<NodeData> nodes(count);
    std::vector<std::size_t> idx(extent.size(), 0);
    for (std::size_t g = 0; g < count; ++g) {
        Label x{std::vector<PhasePoint>(modes)};
        double w = measure;
        bool boundary = false;
        for (std::size_t j = 0; j < modes; ++j) {
            const std::size_t ip = idx[2 * j];
            const std::size_t iq = idx[2 * j + 1];
            if (is_pinned(pinned, j)) {
                x[j].p = 0.0;
            } else {
                x[j].p = axis.node(ip);
                w *= axis.weight(ip);
                boundary = boundary || axis.is_boundary(ip);
            }
            x[j].q = axis.node(iq);
            w *= axis.weight(iq);
            boundary = boundary || axis.is_boundary(iq);
        }
        nodes[g] = node_data(space, x, terms, eps);
        nodes[g].weight = w;
        nodes[g].boundary = boundary;
        for (std::size_t k = extent.size(); k-- > 0;) {
            if (++idx[k] < extent[k]) break;
            idx[k] = 0;
        }
    }
    const NodeData start = node_data(space, initial, terms, eps);
    const NodeData finish = node_data(space, final_label, terms, eps);

    double boundary_mass = 0.0;
    auto track_boundary = [&](const std::vector<Complex>& v) {
        double b = 0.0;
        for (std::size_t g = 0; g < count; ++g)
            if (nodes[g].boundary) b += std::abs(v[g]);
        boundary_mass = std::max(boundary_mass, b);
    };

    const std::size_t threads = worker_count(grid.threads);
    std::vector<Complex> v(count);
    for (std::size_t g = 0; g < count; ++g) v[g] = std::exp(log_kernel(nodes[g], start)) * nodes[g].weight;
    track_boundary(v);
    for (std::size_t n = 2; n <= cfg.N; ++n) {
        std::vector<Complex> next(count);
        parallel_for(count, threads, [&](std::size_t y) {
            Complex acc(0.0);
            for (std::size_t x = 0; x < count; ++x) acc += std::exp(log_kernel(nodes[y], nodes[x])) * v[x];
            next[y] = acc * nodes[y].weight;
        });
        v = std::move(next);
        track_boundary(v);
    }
    Complex amp(0.0);
    for (std::size_t x = 0; x < count; ++x) amp += std::exp(log_kernel(finish, nodes[x])) * v[x];

    PropagatorResult out;
    out.amplitude = amp;
    out.log_amplitude = std::log(amp);
    out.method = Method::quadrature;
    out.N = cfg.N;
    out.T = cfg.T;
    out.epsilon = eps;
    out.route = cfg.route;
    out.error_estimate = boundary_mass;
    return out;
}

PropagatorResult propagator(const ModeSpace& space, const PolynomialOperator& op, const Label& initial,
                            const Label& final_label, const LatticeConfig& cfg, const LatticeGrid& grid,
                            const PinnedModes& pinned) {
    cfg.validate();
    op.check_space(space);
    validate_label(space, initial, "initial");
    validate_label(space, final_label, "final");
    check_pinned(space, pinned);

    if (space.modes() == 1 || !op.is_separable()) {
        if (op.degree() <= 2) return propagator_gaussian_chain(space, op, initial, final_label, cfg, pinned);
        return propagator_quadrature(space, op, initial, final_label, cfg, grid, pinned);
    }

    PropagatorResult out;
    out.N = cfg.N;
    out.T = cfg.T;
    out.epsilon = cfg.epsilon();
    out.route = cfg.route;
    out.method = Method::gaussian_chain;
    Complex log_amp(0.0);
    for (const auto& [k, c] : op.constant_part())
        log_amp += Complex(0.0, -cfg.T / space.hbar()) * c * ipow(space.hbar(), k);
    for (std::size_t j = 0; j < space.modes(); ++j) {
        const ModeSpace single = space.single_mode(j);
        const PinnedModes pin{is_pinned(pinned, j)};
        const PropagatorResult r = propagator(single, op.single_mode_part(j), initial.mode_part(j),
                                              final_label.mode_part(j), cfg, grid, pin);
        if (r.method == Method::quadrature) out.method = Method::quadrature;
        out.error_estimate += r.error_estimate;
        log_amp += r.log_amplitude;
    }
    out.amplitude = std::exp(log_amp);
    out.log_amplitude = log_amp;
    return out;
}

Complex richardson_first_order(double eps_coarse, Complex coarse, double eps_fine, Complex fine) {
    if (eps_coarse == eps_fine) throw ContractError("epsilon", "extrapolation needs two distinct step sizes");
    return (eps_coarse * fine - eps_fine * coarse) / (eps_coarse - eps_fine);
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw ContractError("x", "size mismatch");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (y[i] > 0.0 && x[i] > 0.0) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    }
    if (lx.size() < 2) return 0.0;
    const double n = static_cast<double>(lx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    const double den = n * sxx - sx * sx;
    return den == 0.0 ? 0.0 : (n * sxy - sx * sy) / den;
}

ConvergenceStudy convergence_study(const ModeSpace& space, const PolynomialOperator& op, const Label& initial,
                                   const Label& final_label, double T, const std::vector<std::size_t>& N_list,
                                   SymbolRoute route, Complex reference, const LatticeGrid& grid) {
    if (N_list.empty()) throw ContractError("N_list", "at least one lattice size is required");
    ConvergenceStudy study;
    study.reference = reference;
    std::vector<double> eps, err;
    for (std::size_t N : N_list) {
        const LatticeConfig cfg{N, T, route};
        const PropagatorResult r = propagator(space, op, initial, final_label, cfg, grid);
        study.rows.push_back({N, cfg.epsilon(), r.amplitude, std::abs(r.amplitude - reference)});
        eps.push_back(cfg.epsilon());
        err.push_back(study.rows.back().error);
    }
    study.slope = log_log_slope(eps, err);
    if (study.rows.size() >= 2) {
        const auto& a = study.rows[study.rows.size() - 2];
        const auto& b = study.rows.back();
        study.richardson = richardson_first_order(a.epsilon, a.amplitude, b.epsilon, b.amplitude);
    } else {
        study.richardson = study.rows.back().amplitude;
    }
    study.richardson_error = std::abs(study.richardson - reference);
    return study;
}

}  // namespace cspath
