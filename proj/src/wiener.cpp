#include "cspath/wiener.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <string>
#include <thread>

#include "cspath/combinatorics.hpp"
#include "cspath/errors.hpp"
#include "kernel_terms.hpp"

namespace cspath {

namespace {

constexpr std::size_t kChunk = 4096;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::vector<double> times_of(const LatticeConfig& lat) {
    std::vector<double> t(lat.N + 2);
    const double eps = lat.epsilon();
    for (std::size_t n = 0; n < t.size(); ++n) t[n] = eps * static_cast<double>(n);
    t.back() = lat.T;
    return t;
}

// Zero-pinned bridge noise, [N + 2][axes].
std::vector<std::vector<double>> bridge_noise(const WienerConfig& cfg, const std::vector<double>& times,
                                              std::uint64_t index) {
    const std::size_t axes = cfg.metric.axes();
    std::vector<std::vector<double>> v(times.size(), std::vector<double>(axes, 0.0));
    std::mt19937_64 gen(sample_seed(cfg.seed, index));
    std::normal_distribution<double> normal(0.0, 1.0);
    // Explicit stack keeps the draw order fixed: midpoint, then left half, then right half.
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, times.size() - 1}};
    while (!stack.empty()) {
        const auto [l, r] = stack.back();
        stack.pop_back();
        if (r - l < 2) continue;
        const std::size_t m = (l + r) / 2;
        const double tl = times[l], tm = times[m], tr = times[r];
        const double frac = (tm - tl) / (tr - tl);
        const double var_unit = (tm - tl) * (tr - tm) / (tr - tl);
        for (std::size_t a = 0; a < axes; ++a) {
            const double mean = v[l][a] + (v[r][a] - v[l][a]) * frac;
            v[m][a] = mean + std::sqrt(cfg.nu * var_unit / cfg.metric.weights[a]) * normal(gen);
        }
        stack.emplace_back(m, r);
        stack.emplace_back(l, m);
    }
    return v;
}

std::vector<std::vector<double>> shifted(const std::vector<std::vector<double>>& noise, const std::vector<double>& times,
                                         std::span<const double> start, std::span<const double> end) {
    auto v = noise;
    const double T = times.back();
    for (std::size_t n = 0; n < v.size(); ++n) {
        const double s = times[n] / T;
        for (std::size_t a = 0; a < v[n].size(); ++a) v[n][a] += start[a] + (end[a] - start[a]) * s;
    }
    for (std::size_t a = 0; a < start.size(); ++a) {
        v.front()[a] = start[a];
        v.back()[a] = end[a];
    }
    return v;
}

Complex log_functional(const ModeSpace& space, const SymbolFn& h, const std::vector<std::vector<double>>& path,
                       double epsilon) {
    const double hbar = space.hbar();
    Complex e(0.0);
    std::vector<Label> labels;
    labels.reserve(path.size());
    for (const auto& x : path) labels.push_back(axes_label(x));
    for (std::size_t n = 0; n + 1 < labels.size(); ++n) {
        e += Complex(0.0, overlap_phase(space, labels[n + 1], labels[n]));
        if (!h.is_zero()) e += Complex(0.0, -epsilon / hbar) * h.evaluate(space, labels[n]);
    }
    return e;
}

struct ChunkSums {
    Complex sx{0.0}, sy{0.0}, sxy{0.0};
    double sxx = 0.0, syy = 0.0;
};

std::size_t worker_count(std::size_t requested) {
    if (requested > 0) return requested;
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

void check_endpoints(const ModeSpace& space, const WienerConfig& cfg, const Label& a, const Label& b) {
    validate_label(space, a, "initial");
    validate_label(space, b, "final");
    if (cfg.metric.axes() != 2 * space.modes())
        throw ContractError("metric", "expected " + std::to_string(2 * space.modes()) + " axes (p, q per mode)");
}

std::vector<detail::KernelTerm> point_terms(const SymbolFn& h, const ModeSpace& space) {
    std::vector<detail::KernelTerm> out;
    for (const auto& [mono, c] : h.terms()) {
        detail::KernelTerm t{c * ipow(space.hbar(), mono.hbar_order), {}};
        for (std::size_t j = 0; j < mono.modes.size(); ++j) {
            for (unsigned r = 0; r < mono.modes[j].raise; ++r) t.factors.push_back({false, j, true});
            for (unsigned r = 0; r < mono.modes[j].lower; ++r) t.factors.push_back({false, j, false});
        }
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace

void MetricSpec::validate() const {
    if (weights.empty()) throw ContractError("metric", "at least one axis is required");
    for (double w : weights)
        if (!(w > 0.0) || !std::isfinite(w)) throw ContractError("metric", "weights must be positive and finite");
}

void WienerConfig::validate() const {
    if (!(nu > 0.0) || !std::isfinite(nu)) throw ContractError("nu", "must be positive and finite");
    lattice.validate();
    if (!(lattice.T > 0.0)) throw ContractError("T", "the pinned Wiener measure needs T > 0");
    metric.validate();
    if (n_samples < 1) throw ContractError("n_samples", "at least one sample is required");
}

double log_heat_kernel(std::span<const double> a, std::span<const double> b, double t, double nu,
                       const MetricSpec& metric) {
    if (!(t > 0.0)) throw ContractError("t", "must be positive");
    if (!(nu > 0.0)) throw ContractError("nu", "must be positive");
    metric.validate();
    if (a.size() != metric.axes() || b.size() != metric.axes()) throw ContractError("a", "axis count mismatch");
    double e = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double w = metric.weights[k];
        const double d = b[k] - a[k];
        e += -0.5 * std::log(2.0 * std::numbers::pi * nu * t / w) - w * d * d / (2.0 * nu * t);
    }
    return e;
}

double heat_kernel(std::span<const double> a, std::span<const double> b, double t, double nu, const MetricSpec& metric) {
    return std::exp(log_heat_kernel(a, b, t, nu, metric));
}

ChapmanKolmogorov chapman_kolmogorov_residual(std::span<const double> a, std::span<const double> c, double t1,
                                              double t2, double nu, const MetricSpec& metric,
                                              const QuadratureAxis& axis) {
    if (!(t1 > 0.0) || !(t2 > 0.0)) throw ContractError("t", "t1 and t2 must be positive");
    metric.validate();
    if (a.size() != metric.axes() || c.size() != metric.axes()) throw ContractError("a", "axis count mismatch");
    ChapmanKolmogorov out;
    double exact = 1.0;
    double product = 1.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const MetricSpec one{{metric.weights[k]}};
        const double ak[1] = {a[k]};
        const double ck[1] = {c[k]};
        exact *= heat_kernel(ak, ck, t1 + t2, nu, one);
        double sum = 0.0;
        double boundary = 0.0;
        for (std::size_t i = 0; i < axis.nodes(); ++i) {
            const double x[1] = {axis.node(i)};
            const double f = heat_kernel(ak, x, t1, nu, one) * heat_kernel(x, ck, t2, nu, one) * axis.weight(i);
            sum += f;
            if (axis.is_boundary(i)) boundary += f;
        }
        product *= sum;
        out.boundary_mass = std::max(out.boundary_mass, boundary);
        const double sd = std::sqrt(nu * std::min(t1, t2) / metric.weights[k]);
        out.grid_resolves_kernel = out.grid_resolves_kernel && axis.step() <= 0.5 * sd;
    }
    out.residual = std::abs(exact - product);
    return out;
}

std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

BridgePath sample_pinned_bridge(std::span<const double> start, std::span<const double> end, const WienerConfig& cfg,
                                std::uint64_t sample_index) {
    cfg.validate();
    if (start.size() != cfg.metric.axes() || end.size() != cfg.metric.axes())
        throw ContractError("endpoints", "axis count does not match the metric");
    BridgePath path;
    path.times = times_of(cfg.lattice);
    path.values = shifted(bridge_noise(cfg, path.times, sample_index), path.times, start, end);
    return path;
}

void write_bridge_csv(std::ostream& out, const std::vector<BridgePath>& paths, std::uint64_t first_sample_id) {
    out << "sample_id,time_index,axis,value\n";
    char buf[64];
    for (std::size_t s = 0; s < paths.size(); ++s) {
        for (std::size_t n = 0; n < paths[s].values.size(); ++n) {
            for (std::size_t a = 0; a < paths[s].values[n].size(); ++a) {
                std::snprintf(buf, sizeof buf, "%.17g", paths[s].values[n][a]);
                out << (first_sample_id + s) << ',' << n << ',' << a << ',' << buf << '\n';
            }
        }
    }
}

std::vector<double> label_axes(const Label& label) {
    std::vector<double> v;
    v.reserve(2 * label.size());
    for (const auto& pt : label.modes()) {
        v.push_back(pt.p);
        v.push_back(pt.q);
    }
    return v;
}

Label axes_label(std::span<const double> values) {
    if (values.size() % 2 != 0) throw ContractError("values", "expected (p, q) pairs");
    std::vector<PhasePoint> pts(values.size() / 2);
    for (std::size_t j = 0; j < pts.size(); ++j) pts[j] = {values[2 * j], values[2 * j + 1]};
    return Label(std::move(pts));
}

WienerEstimate regularized_propagator_mc(const ModeSpace& space, const SymbolFn& h, const Label& initial,
                                         const Label& final_label, const WienerConfig& cfg,
                                         const PathLogWeight& extra) {
    cfg.validate();
    check_endpoints(space, cfg, initial, final_label);
    if (h.widths() != space.widths()) throw ContractError("h", "symbol widths do not match the mode space");

    const auto times = times_of(cfg.lattice);
    const auto a = label_axes(initial);
    const auto b = label_axes(final_label);
    const double eps = cfg.lattice.epsilon();
    const double log_rho_ratio =
        log_heat_kernel(a, b, cfg.lattice.T, cfg.nu, cfg.metric) - log_heat_kernel(a, a, cfg.lattice.T, cfg.nu, cfg.metric);
    const SymbolFn zero(SymbolKind::lower, space.widths());

    const std::size_t n = cfg.n_samples;
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    std::vector<ChunkSums> sums(chunks);
    auto run_chunk = [&](std::size_t c) {
        ChunkSums s;
        const std::size_t lo = c * kChunk;
        const std::size_t hi = std::min(n, lo + kChunk);
        BridgePath path;
        path.times = times;
        for (std::size_t i = lo; i < hi; ++i) {
            const auto noise = bridge_noise(cfg, times, i);
            path.values = shifted(noise, times, a, b);
            Complex lx = log_functional(space, h, path.values, eps);
            if (extra) lx += extra(path);
            path.values = shifted(noise, times, a, a);
            Complex ly = log_functional(space, zero, path.values, eps);
            if (extra) ly += extra(path);
            const Complex x = std::exp(lx);
            const Complex y = std::exp(ly);
            s.sx += x;
            s.sy += y;
            s.sxx += std::norm(x);
            s.syy += std::norm(y);
            s.sxy += x * std::conj(y);
        }
        sums[c] = s;
    };

    const std::size_t threads = std::min(worker_count(cfg.threads), chunks);
    if (threads <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t)
            pool.emplace_back([&, t] {
                for (std::size_t c = t; c < chunks; c += threads) run_chunk(c);
            });
        for (auto& th : pool) th.join();
    }

    ChunkSums total;
    for (const auto& s : sums) {
        total.sx += s.sx;
        total.sy += s.sy;
        total.sxx += s.sxx;
        total.syy += s.syy;
        total.sxy += s.sxy;
    }
    const double nd = static_cast<double>(n);
    WienerEstimate est;
    est.mean_signal = total.sx / nd;
    est.mean_anchor = total.sy / nd;
    est.anchor_magnitude = std::abs(est.mean_anchor);
    const double rho_ratio = std::exp(log_rho_ratio);
    const Complex r = est.mean_signal / est.mean_anchor;
    est.ratio = r * rho_ratio;
    if (n > 1) {
        // Delta method: R - R0 ~ mean(X - R Y) / mean(Y).
        const double ss = total.sxx + std::norm(r) * total.syy - 2.0 * (std::conj(r) * total.sxy).real();
        const double var = std::max(0.0, ss) / (nd - 1.0) / std::norm(est.mean_anchor);
        est.standard_error = rho_ratio * std::sqrt(var / nd);
        const double var_signal = std::max(0.0, total.sxx / nd - std::norm(est.mean_signal)) * nd / (nd - 1.0);
        est.signal_standard_error = std::sqrt(var_signal / nd);
    } else {
        est.standard_error = std::numeric_limits<double>::infinity();
        est.signal_standard_error = std::numeric_limits<double>::infinity();
    }
    est.result.amplitude = est.ratio;
    est.result.log_amplitude = std::log(est.ratio);
    est.result.method = Method::wiener_mc;
    est.result.N = cfg.lattice.N;
    est.result.T = cfg.lattice.T;
    est.result.epsilon = eps;
    est.result.route = SymbolRoute::lower;
    est.result.error_estimate = est.standard_error;
    return est;
}

Complex log_wiener_functional(const ModeSpace& space, const SymbolFn& h, const Label& initial,
                              const Label& final_label, const WienerConfig& cfg, const PathExponentHook& extra) {
    cfg.validate();
    check_endpoints(space, cfg, initial, final_label);
    if (h.widths() != space.widths()) throw ContractError("h", "symbol widths do not match the mode space");

    const PathLayout layout{space.modes(), cfg.lattice.N};
    const double eps = cfg.lattice.epsilon();
    const auto terms = point_terms(h, space);
    GaussianExponent g(layout.size());
    const std::size_t axes = 2 * space.modes();
    for (std::size_t n = 0; n <= cfg.lattice.N; ++n) {
        const std::size_t ket = layout.label(n);
        const std::size_t bra = layout.label(n + 1);
        for (std::size_t a = 0; a < axes; ++a) {
            const double w = cfg.metric.weights[a];
            const LinearForm d = detail::variable_form(bra + a) + detail::variable_form(ket + a, -1.0);
            g.add_product(d, d, -w / (2.0 * cfg.nu * eps));
            g.add_constant(-0.5 * std::log(2.0 * std::numbers::pi * cfg.nu * eps / w));
        }
        detail::add_overlap_phase(g, space, bra, ket);
        detail::add_symbol_terms(g, space, terms, eps, ket, ket);
    }
    if (extra) extra(g, layout);
    for (std::size_t j = 0; j < space.modes(); ++j) {
        g.fix(layout.p(0, j), initial[j].p);
        g.fix(layout.q(0, j), initial[j].q);
        g.fix(layout.p(cfg.lattice.N + 1, j), final_label[j].p);
        g.fix(layout.q(cfg.lattice.N + 1, j), final_label[j].q);
    }
    g.integrate_all();
    return g.constant();
}

WienerEstimate regularized_propagator_gaussian(const ModeSpace& space, const SymbolFn& h, const Label& initial,
                                               const Label& final_label, const WienerConfig& cfg,
                                               const PathExponentHook& extra) {
    const SymbolFn zero(SymbolKind::lower, space.widths());
    const Complex signal = log_wiener_functional(space, h, initial, final_label, cfg, extra);
    const Complex anchor = log_wiener_functional(space, zero, initial, initial, cfg, extra);
    const double log_rho = log_heat_kernel(label_axes(initial), label_axes(final_label), cfg.lattice.T, cfg.nu, cfg.metric);
    const double log_rho0 = log_heat_kernel(label_axes(initial), label_axes(initial), cfg.lattice.T, cfg.nu, cfg.metric);

    WienerEstimate est;
    est.mean_signal = std::exp(signal - log_rho);
    est.mean_anchor = std::exp(anchor - log_rho0);
    est.anchor_magnitude = std::abs(est.mean_anchor);
    est.ratio = std::exp(signal - anchor);
    est.result.log_amplitude = signal - anchor;
    est.result.amplitude = est.ratio;
    est.result.method = Method::wiener_exact;
    est.result.N = cfg.lattice.N;
    est.result.T = cfg.lattice.T;
    est.result.epsilon = cfg.lattice.epsilon();
    est.result.route = SymbolRoute::lower;
    est.result.error_estimate = 0.0;
    return est;
}

}  // namespace cspath
