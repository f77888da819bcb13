#include "cspath/oracle.hpp"

#include <cmath>
#include <string>
#include <unsupported/Eigen/MatrixFunctions>

#include "cspath/errors.hpp"

namespace cspath {

namespace {

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Eigen::VectorXcd kron(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
    Eigen::VectorXcd out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
    return out;
}

void check_truncation(const ModeSpace& space, const Label& label, const FockTruncation& trunc, const char* name) {
    if (trunc.n_trunc < 4) throw ContractError("n_trunc", "must be at least 4");
    const double loss = truncation_norm_loss(space, label, trunc.n_trunc);
    if (loss > trunc.norm_loss_tolerance) {
        throw RefusalError(std::string("Fock truncation n_trunc=") + std::to_string(trunc.n_trunc) + " loses norm " +
                           std::to_string(loss) + " on label '" + name + "'; required n_trunc >= " +
                           std::to_string(required_truncation(space, label, trunc.norm_loss_tolerance)));
    }
}

}  // namespace

Eigen::VectorXcd coherent_vector(const ModeSpace& space, const Label& label, std::size_t mode, std::size_t n_trunc) {
    validate_label(space, label, "label");
    const Complex alpha = coherent_amplitude(space, label, mode);
    const double hbar = space.hbar();
    const PhasePoint& pt = label[mode];
    Eigen::VectorXcd v(static_cast<Eigen::Index>(n_trunc));
    Complex c = std::exp(Complex(-0.5 * std::norm(alpha), -pt.p * pt.q / (2.0 * hbar)));
    for (std::size_t n = 0; n < n_trunc; ++n) {
        v(static_cast<Eigen::Index>(n)) = c;
        c *= alpha / std::sqrt(static_cast<double>(n + 1));
    }
    return v;
}

double truncation_norm_loss(const ModeSpace& space, const Label& label, std::size_t n_trunc) {
    double worst = 0.0;
    for (std::size_t j = 0; j < space.modes(); ++j) {
        // Poisson tail sum_{n >= n_trunc} e^{-x} x^n / n!, summed directly to avoid cancellation.
        const double x = std::norm(coherent_amplitude(space, label, j));
        const double nt = static_cast<double>(n_trunc);
        double term = x > 0.0 ? std::exp(-x + nt * std::log(x) - std::lgamma(nt + 1.0)) : 0.0;
        double tail = 0.0;
        for (std::size_t n = n_trunc; n < n_trunc + 2000; ++n) {
            tail += term;
            term *= x / static_cast<double>(n + 1);
            if (term < 1e-300 || (static_cast<double>(n) > x && term < tail * 1e-17)) break;
        }
        worst = std::max(worst, tail);
    }
    return worst;
}

std::size_t required_truncation(const ModeSpace& space, const Label& label, double tolerance) {
    std::size_t n = 4;
    while (truncation_norm_loss(space, label, n) > tolerance) n += 4;
    return n;
}

Eigen::MatrixXcd ladder_matrix(std::size_t n_trunc, unsigned m, unsigned n, double hbar) {
    const auto dim = static_cast<Eigen::Index>(n_trunc);
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim, dim);
    const double scale = std::pow(hbar / 2.0, 0.5 * (m + n));
    // <i| a†^m a^n |j> = sqrt(j! / (j-n)!) sqrt(i! / (i-m)!) with i - m = j - n.
    for (Eigen::Index j = n; j < dim; ++j) {
        const Eigen::Index k = j - static_cast<Eigen::Index>(n);
        const Eigen::Index i = k + static_cast<Eigen::Index>(m);
        if (i >= dim) continue;
        double v = scale;
        for (Eigen::Index r = k + 1; r <= j; ++r) v *= std::sqrt(static_cast<double>(r));
        for (Eigen::Index r = k + 1; r <= i; ++r) v *= std::sqrt(static_cast<double>(r));
        out(i, j) = v;
    }
    return out;
}

Eigen::MatrixXcd fock_matrix(const PolynomialOperator& op, const ModeSpace& space, std::size_t n_trunc) {
    op.check_space(space);
    std::size_t dim = 1;
    for (std::size_t j = 0; j < space.modes(); ++j) dim *= n_trunc;
    const auto d = static_cast<Eigen::Index>(dim);
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(d, d);
    for (const auto& [mono, c] : op.terms()) {
        Eigen::MatrixXcd term = ladder_matrix(n_trunc, mono.modes[0].raise, mono.modes[0].lower, space.hbar());
        for (std::size_t j = 1; j < space.modes(); ++j)
            term = kron(term, ladder_matrix(n_trunc, mono.modes[j].raise, mono.modes[j].lower, space.hbar()));
        out += c * std::pow(space.hbar(), mono.hbar_order) * term;
    }
    return out;
}

OracleResult fock_propagator(const ModeSpace& space, const PolynomialOperator& op, const Label& initial,
                             const Label& final_label, double T, const FockTruncation& trunc) {
    op.check_space(space);
    validate_label(space, initial, "initial");
    validate_label(space, final_label, "final");
    if (!std::isfinite(T)) throw ContractError("T", "must be finite");
    check_truncation(space, initial, trunc, "initial");
    check_truncation(space, final_label, trunc, "final");

    const double hbar = space.hbar();
    const std::size_t n = trunc.n_trunc;
    OracleResult out;
    out.n_trunc = n;
    out.error_estimate = std::sqrt(truncation_norm_loss(space, initial, n)) + std::sqrt(truncation_norm_loss(space, final_label, n));

    if (op.is_separable()) {
        Complex amp(1.0);
        for (const auto& [k, c] : op.constant_part()) amp *= std::exp(Complex(0.0, -T / hbar) * c * std::pow(hbar, k));
        for (std::size_t j = 0; j < space.modes(); ++j) {
            const ModeSpace single = space.single_mode(j);
            const Eigen::VectorXcd vi = coherent_vector(space, initial, j, n);
            const Eigen::VectorXcd vf = coherent_vector(space, final_label, j, n);
            const PolynomialOperator part = op.single_mode_part(j);
            if (part.is_zero()) {
                amp *= vf.dot(vi);
                continue;
            }
            const Eigen::MatrixXcd h = fock_matrix(part, single, n);
            const Eigen::MatrixXcd u = (Complex(0.0, -T / hbar) * h).exp();
            amp *= vf.dot(u * vi);
        }
        out.amplitude = amp;
        return out;
    }

    std::size_t dim = 1;
    for (std::size_t j = 0; j < space.modes(); ++j) dim *= n;
    if (dim > trunc.max_dimension)
        throw RefusalError("non-separable Fock oracle needs dimension " + std::to_string(dim) + " > max_dimension " +
                           std::to_string(trunc.max_dimension));
    Eigen::VectorXcd vi = coherent_vector(space, initial, 0, n);
    Eigen::VectorXcd vf = coherent_vector(space, final_label, 0, n);
    for (std::size_t j = 1; j < space.modes(); ++j) {
        vi = kron(vi, coherent_vector(space, initial, j, n));
        vf = kron(vf, coherent_vector(space, final_label, j, n));
    }
    const Eigen::MatrixXcd h = fock_matrix(op, space, n);
    const Eigen::MatrixXcd u = (Complex(0.0, -T / hbar) * h).exp();
    out.amplitude = vf.dot(u * vi);
    return out;
}

Complex fock_matrix_element(const ModeSpace& space, const PolynomialOperator& op, const Label& bra, const Label& ket,
                            const FockTruncation& trunc) {
    op.check_space(space);
    check_truncation(space, bra, trunc, "bra");
    check_truncation(space, ket, trunc, "ket");
    const std::size_t n = trunc.n_trunc;
    std::vector<Eigen::VectorXcd> vb, vk;
    for (std::size_t j = 0; j < space.modes(); ++j) {
        vb.push_back(coherent_vector(space, bra, j, n));
        vk.push_back(coherent_vector(space, ket, j, n));
    }
    Complex total(0.0);
    for (const auto& [mono, c] : op.terms()) {
        Complex term = c * std::pow(space.hbar(), mono.hbar_order);
        for (std::size_t j = 0; j < space.modes(); ++j)
            term *= vb[j].dot(ladder_matrix(n, mono.modes[j].raise, mono.modes[j].lower, space.hbar()) * vk[j]);
        total += term;
    }
    return total;
}

double gaussian_moment(unsigned power, double sigma2) {
    if (!(sigma2 >= 0.0)) throw ContractError("sigma2", "variance must be nonnegative");
    if (power % 2 == 1) return 0.0;
    double v = 1.0;
    for (unsigned k = 1; k < power; k += 2) v *= static_cast<double>(k) * sigma2;
    return v;
}

double gaussian_moment(std::span<const unsigned> powers, std::span<const double> variances) {
    if (powers.size() != variances.size()) throw ContractError("powers", "one variance per power is required");
    double v = 1.0;
    for (std::size_t i = 0; i < powers.size(); ++i) v *= gaussian_moment(powers[i], variances[i]);
    return v;
}

BruteQuadrature brute_quadrature(const std::function<Complex(std::span<const double>)>& f,
                                 std::span<const QuadratureAxis> axes) {
    if (axes.empty()) throw ContractError("axes", "at least one axis is required");
    if (axes.size() > kMaxQuadratureAxes)
        throw RefusalError("brute quadrature budget is " + std::to_string(kMaxQuadratureAxes) + " axes, got " +
                           std::to_string(axes.size()));
    const std::size_t d = axes.size();
    std::vector<std::size_t> idx(d, 0);
    std::vector<double> x(d);
    BruteQuadrature out{Complex(0.0), 0.0, 0};
    for (;;) {
        double w = 1.0;
        bool boundary = false;
        for (std::size_t k = 0; k < d; ++k) {
            x[k] = axes[k].node(idx[k]);
            w *= axes[k].weight(idx[k]);
            boundary = boundary || axes[k].is_boundary(idx[k]);
        }
        const Complex v = f(x) * w;
        out.value += v;
        if (boundary) out.boundary_mass += std::abs(v);
        ++out.evaluations;
        std::size_t k = d;
        while (k > 0) {
            --k;
            if (++idx[k] < axes[k].nodes()) break;
            idx[k] = 0;
            if (k == 0) return out;
        }
    }
}

}  // namespace cspath
