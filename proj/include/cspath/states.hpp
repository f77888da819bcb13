#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace cspath {

using Complex = std::complex<double>;

/**
 * Mode layout of a split phase space.
 *
 * Modes [0, n_constrained) carry the Abelianized constraint pairs (p_i, q^i);
 * modes [n_constrained, modes()) are the reduced canonical pairs z. Every mode
 * has its own fiducial width w: the fiducial is the Gaussian ground state with
 * <Q^2> = hbar w^2 / 2 and <P^2> = hbar / (2 w^2).
 */
class ModeSpace {
public:
    ModeSpace(std::size_t n_constrained, std::size_t n_reduced, double hbar = 1.0,
              std::vector<double> widths = {});

    std::size_t n_constrained() const { return n_constrained_; }
    std::size_t n_reduced() const { return n_reduced_; }
    std::size_t modes() const { return n_constrained_ + n_reduced_; }
    double hbar() const { return hbar_; }
    double width(std::size_t mode) const { return widths_.at(mode); }
    const std::vector<double>& widths() const { return widths_; }
    bool is_constrained(std::size_t mode) const { return mode < n_constrained_; }

    // Single-mode space carrying the width of `mode`.
    ModeSpace single_mode(std::size_t mode) const;
    // The reduced modes only, as a space with no constraints.
    ModeSpace reduced_space() const;

    friend bool operator==(const ModeSpace&, const ModeSpace&) = default;

private:
    std::size_t n_constrained_;
    std::size_t n_reduced_;
    double hbar_;
    std::vector<double> widths_;
};

struct PhasePoint {
    double p = 0.0;
    double q = 0.0;

    friend bool operator==(const PhasePoint&, const PhasePoint&) = default;
};

/// Phase-space label of a coherent state, one (p, q) pair per mode.
class Label {
public:
    Label() = default;
    explicit Label(std::vector<PhasePoint> modes) : modes_(std::move(modes)) {}

    static Label origin(const ModeSpace& space);
    // Concatenates the constrained pairs and the reduced pairs z.
    static Label split(const ModeSpace& space, std::span<const PhasePoint> constrained,
                       std::span<const PhasePoint> reduced);

    std::size_t size() const { return modes_.size(); }
    const PhasePoint& operator[](std::size_t mode) const { return modes_[mode]; }
    PhasePoint& operator[](std::size_t mode) { return modes_[mode]; }
    const std::vector<PhasePoint>& modes() const { return modes_; }

    Label reduced_part(const ModeSpace& space) const;
    Label mode_part(std::size_t mode) const { return Label({modes_.at(mode)}); }

    friend bool operator==(const Label&, const Label&) = default;

private:
    std::vector<PhasePoint> modes_;
};

// Throws ContractError when the label does not fit the space or has non-finite entries.
void validate_label(const ModeSpace& space, const Label& label, std::string_view name);

// alpha = (q / w + i w p) / sqrt(2 hbar): eigenvalue of the mode's annihilation operator.
Complex coherent_amplitude(const ModeSpace& space, const Label& label, std::size_t mode);

// zeta = sqrt(hbar / 2) alpha = (q / w + i w p) / 2: eigenvalue of A = (Q / w + i w P) / 2.
Complex scaled_amplitude(const ModeSpace& space, const Label& label, std::size_t mode);

/// psi(x) = prod_modes exp(i p (x - q) / hbar) eta(x - q) for |p,q> = e^{-iqP/hbar} e^{ipQ/hbar}|eta>.
Complex coherent_wavefunction(const ModeSpace& space, const Label& label, std::span<const double> x);

// log <a|b>, closed form. The imaginary part is defined modulo 2 pi.
Complex log_overlap(const ModeSpace& space, const Label& a, const Label& b);
Complex overlap(const ModeSpace& space, const Label& a, const Label& b);
// arg <a|b> = sum_modes (p_a + p_b)(q_a - q_b) / (2 hbar), unreduced.
double overlap_phase(const ModeSpace& space, const Label& a, const Label& b);

/**
 * Uniform trapezoid rule along one axis: nodes lo + i*step, i < nodes.
 * End nodes get half weight; a single node carries weight `step`.
 */
class QuadratureAxis {
public:
    QuadratureAxis(double lo, double step, std::size_t nodes);

    static QuadratureAxis span_nodes(double lo, double hi, std::size_t nodes);
    static QuadratureAxis span_step(double lo, double hi, double step);
    // [-8, 8] with step 0.05.
    static QuadratureAxis standard() { return span_step(-8.0, 8.0, 0.05); }

    double lo() const { return lo_; }
    double hi() const { return lo_ + step_ * static_cast<double>(nodes_ - 1); }
    double step() const { return step_; }
    std::size_t nodes() const { return nodes_; }
    double node(std::size_t i) const { return lo_ + step_ * static_cast<double>(i); }
    double weight(std::size_t i) const;
    bool is_boundary(std::size_t i) const { return i == 0 || i + 1 == nodes_; }

private:
    double lo_;
    double step_;
    std::size_t nodes_;
};

struct ResolutionResidual {
    double residual = 0.0;
    // Trapezoid mass carried by boundary nodes; large values mean the grid clips the integrand.
    double boundary_mass = 0.0;
    bool grid_covers_support = true;
};

/**
 * max over pairs of |K(a;b) - \int K(a;x) K(x;b) dmu(x)|, with dmu = prod dp dq / (2 pi hbar)
 * and the same axis grid on every p and q coordinate. The integrand is a product over
 * modes, so the quadrature is evaluated mode by mode.
 */
ResolutionResidual resolution_residual(const ModeSpace& space, const QuadratureAxis& axis,
                                       std::span<const std::pair<Label, Label>> pairs,
                                       double boundary_tolerance = 1e-6);

enum class CanonicalAxis { momentum, position };

// <eta|O^n|eta> for the fiducial of `mode` with O = P or Q.
double fiducial_moment(const ModeSpace& space, std::size_t mode, unsigned n, CanonicalAxis which);

}  // namespace cspath
