// model.hpp — parametric Hamiltonian families H(dx) = E + dx*B:
// level sequences, band profiles, Gaussian banded perturbation matrices,
// and the cutoff / sign-randomization transforms.

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace qecho::model {

// Hard cap on dense matrix dimension (keeps eigensolves at desk scale).
inline constexpr std::size_t kMaxDimension = 4096;

struct ResourceLimitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ------------------------------- levels --------------------------------

struct LevelSequence {
    std::vector<double> energies;   // strictly nondecreasing
    double mean_spacing{0.0};       // Delta

    std::size_t size() const noexcept { return energies.size(); }
};

// Picket-fence levels E_n = e_base + n*Delta + jitter*Delta*u_n,
// u_n uniform in (-1/2, 1/2). jitter = 0 gives the exact picket fence.
LevelSequence build_levels(std::size_t n, double delta, double e_base = 0.0,
                           double jitter = 0.0, std::uint64_t seed = 0);

// ----------------------------- band profile ----------------------------

// Variance profile of the off-diagonal B entries as a function of the
// level frequency distance omega = (E_n - E_m)/hbar:
//   variance(omega) = (Delta / 2 pi hbar) * c_norm * k^{3+g} / max(|omega|, omega_min)^g
// g = 0 is the flat (strong chaos) profile, 0 < g <= 1 adds a power-law
// singularity regularized at omega_min.
struct BandProfile {
    double k{0.0};
    double g{0.0};
    double hbar{1.0};
    double delta{0.0};
    double c_norm{1.0};
    double omega_min{0.0};

    double variance(double omega) const;
};

BandProfile build_bandprofile(double k, double g, double hbar, double delta,
                              double c_norm, double omega_min);

// --------------------------- perturbation matrix -----------------------

enum class Provenance { synthetic, cutoff, sign_randomized, ingested };

enum class DiagPolicy { gaussian, zeros };

struct PerturbationMatrix {
    Eigen::MatrixXd entries;        // real symmetric
    Provenance provenance{Provenance::synthetic};
    std::uint64_t seed{0};

    std::size_t dim() const noexcept { return static_cast<std::size_t>(entries.rows()); }
};

// Off-diagonal B_nm ~ Normal(0, variance((E_n - E_m)/hbar)) for n < m,
// mirrored exactly; diagonal Gaussian with variance(omega_min) or zero.
PerturbationMatrix sample_perturbation(const LevelSequence& levels,
                                       const BandProfile& profile,
                                       DiagPolicy diag_policy,
                                       std::uint64_t seed);

// B_nm -> exp(-(n-m)^2 / (2 bandwidth^2)) * B_nm, bandwidth in level indices.
PerturbationMatrix gaussian_cutoff(const PerturbationMatrix& b, double bandwidth);

// B_nm -> s_nm * B_nm with s_nm = +-1 equiprobable, s_nm = s_mn,
// diagonal untouched. Magnitudes are preserved exactly.
PerturbationMatrix sign_randomize(const PerturbationMatrix& b, std::uint64_t seed);

struct TransformSpec {
    bool apply_cutoff{false};
    double bandwidth{0.0};
    bool apply_sign_randomize{false};
    std::uint64_t seed{0};
};

PerturbationMatrix transform_perturbation(const PerturbationMatrix& b,
                                          const TransformSpec& spec);

// ------------------------------- model ---------------------------------

struct ModelMeta {
    double hbar{1.0};
    double k{1.0};
    double g{0.0};
    double delta{1.0};
    double gamma_cl{1.0};
};

struct ParametricModel {
    LevelSequence levels;
    PerturbationMatrix b;
    ModelMeta meta;

    std::size_t dim() const noexcept { return levels.size(); }
    Eigen::MatrixXd hamiltonian(double dx) const;
};

ParametricModel assemble(LevelSequence levels, PerturbationMatrix b, ModelMeta meta);

}  // namespace qecho::model
