#include "cspath/states.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "cspath/errors.hpp"

namespace cspath {

ModeSpace::ModeSpace(std::size_t n_constrained, std::size_t n_reduced, double hbar,
                     std::vector<double> widths)
    : n_constrained_(n_constrained), n_reduced_(n_reduced), hbar_(hbar), widths_(std::move(widths)) {
    if (n_reduced_ < 1) throw ContractError("n_reduced", "at least one reduced mode is required");
    if (!(hbar_ > 0.0) || !std::isfinite(hbar_)) throw ContractError("hbar", "must be positive and finite");
    if (widths_.empty()) widths_.assign(modes(), 1.0);
    if (widths_.size() != modes())
        throw ContractError("widths", "expected one width per mode (" + std::to_string(modes()) + ")");
    for (double w : widths_)
        if (!(w > 0.0) || !std::isfinite(w)) throw ContractError("widths", "must be positive and finite");
}

ModeSpace ModeSpace::single_mode(std::size_t mode) const {
    return ModeSpace(0, 1, hbar_, {widths_.at(mode)});
}

ModeSpace ModeSpace::reduced_space() const {
    return ModeSpace(0, n_reduced_, hbar_,
                     std::vector<double>(widths_.begin() + static_cast<std::ptrdiff_t>(n_constrained_),
                                         widths_.end()));
}

Label Label::origin(const ModeSpace& space) { return Label(std::vector<PhasePoint>(space.modes())); }

Label Label::split(const ModeSpace& space, std::span<const PhasePoint> constrained,
                   std::span<const PhasePoint> reduced) {
    if (constrained.size() != space.n_constrained())
        throw ContractError("constrained", "size does not match n_constrained");
    if (reduced.size() != space.n_reduced()) throw ContractError("reduced", "size does not match n_reduced");
    std::vector<PhasePoint> modes(constrained.begin(), constrained.end());
    modes.insert(modes.end(), reduced.begin(), reduced.end());
    return Label(std::move(modes));
}

Label Label::reduced_part(const ModeSpace& space) const {
    return Label(std::vector<PhasePoint>(modes_.begin() + static_cast<std::ptrdiff_t>(space.n_constrained()),
                                         modes_.end()));
}

void validate_label(const ModeSpace& space, const Label& label, std::string_view name) {
    if (label.size() != space.modes())
        throw ContractError(std::string(name), "label has " + std::to_string(label.size()) +
                                                   " modes, space has " + std::to_string(space.modes()));
    for (const auto& pt : label.modes())
        if (!std::isfinite(pt.p) || !std::isfinite(pt.q))
            throw ContractError(std::string(name), "label entries must be finite");
}

Complex coherent_amplitude(const ModeSpace& space, const Label& label, std::size_t mode) {
    const double w = space.width(mode);
    const auto& pt = label[mode];
    return Complex(pt.q / w, w * pt.p) / std::sqrt(2.0 * space.hbar());
}

Complex scaled_amplitude(const ModeSpace& space, const Label& label, std::size_t mode) {
    const double w = space.width(mode);
    const auto& pt = label[mode];
    return Complex(pt.q / w, w * pt.p) * 0.5;
}

Complex coherent_wavefunction(const ModeSpace& space, const Label& label, std::span<const double> x) {
    validate_label(space, label, "label");
    if (x.size() != space.modes()) throw ContractError("x", "one coordinate per mode is required");
    const double hbar = space.hbar();
    Complex value(1.0, 0.0);
    for (std::size_t j = 0; j < space.modes(); ++j) {
        if (!std::isfinite(x[j])) throw ContractError("x", "coordinates must be finite");
        const double w = space.width(j);
        const double s = x[j] - label[j].q;
        const double norm = std::pow(std::numbers::pi * hbar * w * w, -0.25);
        value *= norm * std::exp(Complex(-s * s / (2.0 * hbar * w * w), label[j].p * s / hbar));
    }
    return value;
}

Complex log_overlap(const ModeSpace& space, const Label& a, const Label& b) {
    validate_label(space, a, "a");
    validate_label(space, b, "b");
    Complex total(0.0, 0.0);
    for (std::size_t j = 0; j < space.modes(); ++j) {
        const Complex alpha = coherent_amplitude(space, a, j);
        const Complex beta = coherent_amplitude(space, b, j);
        total += std::conj(alpha) * beta - 0.5 * std::norm(alpha) - 0.5 * std::norm(beta);
        total += Complex(0.0, (a[j].p * a[j].q - b[j].p * b[j].q) / (2.0 * space.hbar()));
    }
    return total;
}

Complex overlap(const ModeSpace& space, const Label& a, const Label& b) {
    return std::exp(log_overlap(space, a, b));
}

double overlap_phase(const ModeSpace& space, const Label& a, const Label& b) {
    double phase = 0.0;
    for (std::size_t j = 0; j < space.modes(); ++j) phase += (a[j].p + b[j].p) * (a[j].q - b[j].q);
    return phase / (2.0 * space.hbar());
}

QuadratureAxis::QuadratureAxis(double lo, double step, std::size_t nodes) : lo_(lo), step_(step), nodes_(nodes) {
    if (nodes_ == 0) throw ContractError("nodes", "at least one node is required");
    if (!(step_ > 0.0) || !std::isfinite(step_) || !std::isfinite(lo_))
        throw ContractError("step", "must be positive and finite");
}

QuadratureAxis QuadratureAxis::span_nodes(double lo, double hi, std::size_t nodes) {
    if (!(hi > lo)) throw ContractError("grid", "hi must exceed lo");
    if (nodes < 2) throw ContractError("nodes", "a span needs at least two nodes");
    return QuadratureAxis(lo, (hi - lo) / static_cast<double>(nodes - 1), nodes);
}

QuadratureAxis QuadratureAxis::span_step(double lo, double hi, double step) {
    if (!(hi > lo)) throw ContractError("grid", "hi must exceed lo");
    if (!(step > 0.0)) throw ContractError("step", "must be positive");
    const auto intervals = static_cast<std::size_t>(std::llround((hi - lo) / step));
    return QuadratureAxis(lo, step, intervals + 1);
}

double QuadratureAxis::weight(std::size_t i) const {
    if (nodes_ == 1) return step_;
    return is_boundary(i) ? 0.5 * step_ : step_;
}

namespace {

struct ModeIntegral {
    Complex value;
    double boundary_mass;
    double abs_mass;
};

// \int K_j(a;x) K_j(x;b) dp dq / (2 pi hbar) for one mode.
ModeIntegral mode_reproduction(const ModeSpace& single, const Label& a, const Label& b, const QuadratureAxis& axis) {
    const double measure = 1.0 / (2.0 * std::numbers::pi * single.hbar());
    Complex sum(0.0, 0.0);
    double boundary = 0.0;
    double abs_mass = 0.0;
    Label x{std::vector<PhasePoint>(1)};
    for (std::size_t ip = 0; ip < axis.nodes(); ++ip) {
        for (std::size_t iq = 0; iq < axis.nodes(); ++iq) {
            x[0] = PhasePoint{axis.node(ip), axis.node(iq)};
            const double w = axis.weight(ip) * axis.weight(iq) * measure;
            const Complex f = std::exp(log_overlap(single, a, x) + log_overlap(single, x, b)) * w;
            sum += f;
            abs_mass += std::abs(f);
            if (axis.is_boundary(ip) || axis.is_boundary(iq)) boundary += std::abs(f);
        }
    }
    return {sum, boundary, abs_mass};
}

}  // namespace

ResolutionResidual resolution_residual(const ModeSpace& space, const QuadratureAxis& axis,
                                       std::span<const std::pair<Label, Label>> pairs,
                                       double boundary_tolerance) {
    ResolutionResidual out;
    for (const auto& [a, b] : pairs) {
        validate_label(space, a, "a");
        validate_label(space, b, "b");
        Complex product(1.0, 0.0);
        std::vector<ModeIntegral> parts;
        for (std::size_t j = 0; j < space.modes(); ++j) {
            const ModeSpace single = space.single_mode(j);
            parts.push_back(mode_reproduction(single, a.mode_part(j), b.mode_part(j), axis));
            product *= parts.back().value;
        }
        // Boundary mass of the product integrand: one mode on its boundary, the rest anywhere.
        double boundary = 0.0;
        for (std::size_t j = 0; j < parts.size(); ++j) {
            double others = 1.0;
            for (std::size_t k = 0; k < parts.size(); ++k)
                if (k != j) others *= parts[k].abs_mass;
            boundary += parts[j].boundary_mass * others;
        }
        out.residual = std::max(out.residual, std::abs(overlap(space, a, b) - product));
        out.boundary_mass = std::max(out.boundary_mass, boundary);
    }
    out.grid_covers_support = out.boundary_mass <= boundary_tolerance;
    return out;
}

double fiducial_moment(const ModeSpace& space, std::size_t mode, unsigned n, CanonicalAxis which) {
    if (mode >= space.modes()) throw ContractError("mode", "out of range");
    if (n % 2 == 1) return 0.0;
    const double w = space.width(mode);
    const double variance =
        which == CanonicalAxis::momentum ? space.hbar() / (2.0 * w * w) : space.hbar() * w * w / 2.0;
    double value = 1.0;
    for (unsigned k = 1; k < n; k += 2) value *= static_cast<double>(k) * variance;
    return value;
}

}  // namespace cspath
