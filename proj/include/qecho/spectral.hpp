// spectral.hpp — dense symmetric eigensolves of H(dx), the LDOS
// distributions built from them, and the 70% core width.

#pragma once

#include "qecho/model.hpp"

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <vector>

namespace qecho::spectral {

struct NumericFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EdgeEffectError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct SpectralDecomposition {
    double dx{0.0};
    Eigen::VectorXd eigenvalues;   // ascending
    Eigen::MatrixXd transform;     // column j = eigenvector j in the H0 basis
};

// Exact dense symmetric eigensolve of H(dx) = E + dx*B.
SpectralDecomposition diagonalize(const model::ParametricModel& m, double dx);

enum class LdosKind { eigenstate, wavepacket, averaged };

struct LdosDistribution {
    std::vector<double> offsets;   // omega, sorted ascending (energy units)
    std::vector<double> weights;   // nonnegative, sum to 1
    double center{0.0};            // E0
    LdosKind kind{LdosKind::eigenstate};
};

// References in the outer `edge_guard` fraction of the spectrum are
// rejected (truncation artifacts of the finite matrix).
inline constexpr double kEdgeGuardFraction = 0.10;

// LDOS of the unperturbed eigenstate `ref` over the eigenstates of H(dx):
// weights |<n(x)|E_ref>|^2 at omega = E_n(x) - E_ref.
LdosDistribution eigenstate_ldos(const model::ParametricModel& m,
                                 const SpectralDecomposition& d,
                                 std::size_t ref);

// LDOS of a wavepacket with coefficients `amplitudes` over the H0 basis:
// weights |a_n|^2 at omega = E_n - E0, E0 the wavepacket mean energy.
LdosDistribution wavepacket_ldos(const model::LevelSequence& levels,
                                 const Eigen::VectorXcd& amplitudes);

// Reference-averaged LDOS: per-reference eigenstate LDOS aligned at its own
// E0, accumulated onto a shared grid of bin width Delta/2, renormalized.
// [ref_begin, ref_end) must contain at least 10 references inside the
// central 80% window.
LdosDistribution averaged_ldos(const model::ParametricModel& m,
                               const SpectralDecomposition& d,
                               std::size_t ref_begin, std::size_t ref_end);

struct CoreWidth {
    double gamma{0.0};
    bool degenerate{false};   // single support point
};

// Width of the central region holding 70% of the weight:
// q(0.85) - q(0.15) with q interpolated linearly within the cumulative
// weight staircase.
CoreWidth core_width(const LdosDistribution& dist);

// 1 / sum of squared weights.
double participation_ratio(const LdosDistribution& dist);

// CSV export: `omega,weight` with metadata header comments.
void write_ldos_csv(std::ostream& os, const LdosDistribution& dist, double dx);

}  // namespace qecho::spectral
