#include "qecho/oracle.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>

namespace qecho::oracle {

namespace {

// Number of eigenvalues of `a` strictly below x, by Sylvester's law of
// inertia: count negative pivots of the unpivoted LDL^T of a - xI.
int count_below(const Eigen::MatrixXd& a, double x) {
    const Eigen::Index n = a.rows();
    Eigen::MatrixXd w = a;
    w.diagonal().array() -= x;
    int negatives = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
        double pivot = w(k, k);
        if (pivot == 0.0) {
            pivot = -1e-300;   // zero pivot counts as an eigenvalue at x
        }
        if (pivot < 0.0) ++negatives;
        for (Eigen::Index i = k + 1; i < n; ++i) {
            const double f = w(i, k) / pivot;
            for (Eigen::Index j = k + 1; j < n; ++j) {
                w(i, j) -= f * w(k, j);
            }
        }
    }
    return negatives;
}

Eigen::VectorXd inverse_iteration(const Eigen::MatrixXd& a, double lambda) {
    const Eigen::Index n = a.rows();
    Eigen::MatrixXd shifted = a;
    const double scale = std::max(a.cwiseAbs().maxCoeff(), 1.0);
    shifted.diagonal().array() -= lambda + 1e-12 * scale;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(shifted);
    Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
    for (int it = 0; it < 8; ++it) {
        v = lu.solve(v);
        const double norm = v.norm();
        if (!(norm > 0.0) || !std::isfinite(norm)) {
            throw spectral::NumericFailure("inverse_iteration: breakdown");
        }
        v /= norm;
    }
    return v;
}

}  // namespace

std::vector<double> bisection_eigenvalues(const Eigen::MatrixXd& a, double tol) {
    const Eigen::Index n = a.rows();
    if (n != a.cols()) {
        throw std::invalid_argument("bisection_eigenvalues: matrix must be square");
    }
    if (n > 12) {
        throw dynamics::OracleScopeError("bisection_eigenvalues: n > 12 out of scope");
    }
    double lo = a(0, 0);
    double hi = a(0, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double radius = a.row(i).cwiseAbs().sum() - std::abs(a(i, i));
        lo = std::min(lo, a(i, i) - radius);
        hi = std::max(hi, a(i, i) + radius);
    }
    lo -= 1.0;
    hi += 1.0;
    const double width = hi - lo;
    std::vector<double> out(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) {
        double l = lo;
        double h = hi;
        // k-th eigenvalue: smallest x with count_below(x) > k
        while (h - l > tol * std::max(width, 1.0)) {
            const double mid = 0.5 * (l + h);
            if (count_below(a, mid) > k) {
                h = mid;
            } else {
                l = mid;
            }
        }
        out[static_cast<std::size_t>(k)] = 0.5 * (l + h);
    }
    return out;
}

VerifyReport verify_ldos_small(const model::ParametricModel& m, double dx,
                               std::size_t ref, double tol) {
    if (m.dim() > 12) {
        throw dynamics::OracleScopeError("verify_ldos_small: n > 12 out of scope");
    }
    const Eigen::MatrixXd h = m.hamiltonian(dx);
    const std::vector<double> lambdas = bisection_eigenvalues(h);
    const double e0 = m.levels.energies[ref];
    const std::size_t n = m.dim();
    std::vector<double> offsets(n);
    std::vector<double> weights(n);
    for (std::size_t j = 0; j < n; ++j) {
        const Eigen::VectorXd v = inverse_iteration(h, lambdas[j]);
        offsets[j] = lambdas[j] - e0;
        weights[j] = v[static_cast<Eigen::Index>(ref)] * v[static_cast<Eigen::Index>(ref)];
    }
    const auto d = spectral::diagonalize(m, dx);
    const auto ldos = spectral::eigenstate_ldos(m, d, ref);
    VerifyReport report;
    for (std::size_t j = 0; j < n; ++j) {
        report.max_deviation = std::max(report.max_deviation,
                                        std::abs(offsets[j] - ldos.offsets[j]));
        report.max_deviation = std::max(report.max_deviation,
                                        std::abs(weights[j] - ldos.weights[j]));
    }
    report.pass = report.max_deviation < tol;
    return report;
}

VerifyReport verify_fidelity_small(const model::ParametricModel& m, double dx,
                                   const Eigen::VectorXcd& preparation,
                                   const std::vector<double>& grid, double tol) {
    if (m.dim() > 64) {
        throw dynamics::OracleScopeError("verify_fidelity_small: n > 64 out of scope");
    }
    const Eigen::MatrixXd h = m.hamiltonian(dx);
    const Eigen::MatrixXd h0 = m.hamiltonian(0.0);
    const auto d = spectral::diagonalize(m, dx);
    dynamics::Wavepacket prep;
    prep.amplitudes = preparation;
    for (Eigen::Index i = 0; i < preparation.size(); ++i) {
        prep.mean_energy += std::norm(preparation[i]) * m.levels.energies[static_cast<std::size_t>(i)];
    }
    const dynamics::FidelityPropagator spectral_path(m, d, prep);
    VerifyReport report;
    for (double t : grid) {
        const Eigen::VectorXcd under_h =
            dynamics::oracle_evolve_state(h, t, m.meta.hbar, preparation);
        const Eigen::VectorXcd under_h0 =
            dynamics::oracle_evolve_state(h0, t, m.meta.hbar, preparation);
        const dynamics::Complex brute = (under_h.adjoint() * under_h0)(0);
        const dynamics::Complex fast = spectral_path.amplitude(t);
        report.max_deviation = std::max(report.max_deviation, std::abs(brute - fast));
    }
    report.pass = report.max_deviation < tol;
    return report;
}

}  // namespace qecho::oracle
