#include "qecho/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace qecho::model {

LevelSequence build_levels(std::size_t n, double delta, double e_base,
                           double jitter, std::uint64_t seed) {
    if (n < 2) {
        throw std::invalid_argument("build_levels: need at least 2 levels");
    }
    if (!(delta > 0.0)) {
        throw std::invalid_argument("build_levels: mean spacing must be positive");
    }
    if (jitter < 0.0 || jitter >= 1.0) {
        throw std::invalid_argument("build_levels: jitter must be in [0, 1)");
    }
    if (n > kMaxDimension) {
        throw ResourceLimitError("build_levels: dimension exceeds cap");
    }
    LevelSequence out;
    out.mean_spacing = delta;
    out.energies.resize(n);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-0.5, 0.5);
    for (std::size_t i = 0; i < n; ++i) {
        double u = (jitter > 0.0) ? uni(rng) : 0.0;
        out.energies[i] = e_base + static_cast<double>(i) * delta + jitter * delta * u;
    }
    std::sort(out.energies.begin(), out.energies.end());
    return out;
}

double BandProfile::variance(double omega) const {
    const double w = std::max(std::abs(omega), omega_min);
    return delta / (2.0 * std::numbers::pi * hbar) * c_norm *
           std::pow(k, 3.0 + g) / std::pow(w, g);
}

BandProfile build_bandprofile(double k, double g, double hbar, double delta,
                              double c_norm, double omega_min) {
    if (g < 0.0 || g > 1.0) {
        throw std::invalid_argument("build_bandprofile: g must be in [0, 1]");
    }
    if (!(k > 0.0) || !(hbar > 0.0) || !(delta > 0.0) || !(c_norm > 0.0) ||
        !(omega_min > 0.0)) {
        throw std::invalid_argument("build_bandprofile: parameters must be positive");
    }
    return BandProfile{k, g, hbar, delta, c_norm, omega_min};
}

PerturbationMatrix sample_perturbation(const LevelSequence& levels,
                                       const BandProfile& profile,
                                       DiagPolicy diag_policy,
                                       std::uint64_t seed) {
    const std::size_t n = levels.size();
    if (n > kMaxDimension) {
        throw ResourceLimitError("sample_perturbation: dimension exceeds cap");
    }
    PerturbationMatrix out;
    out.provenance = Provenance::synthetic;
    out.seed = seed;
    out.entries = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                        static_cast<Eigen::Index>(n));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double omega = (levels.energies[j] - levels.energies[i]) / profile.hbar;
            const double sd = std::sqrt(profile.variance(omega));
            const double v = sd * gauss(rng);
            out.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
            out.entries(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
        }
    }
    if (diag_policy == DiagPolicy::gaussian) {
        const double sd = std::sqrt(profile.variance(profile.omega_min));
        for (std::size_t i = 0; i < n; ++i) {
            out.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) =
                sd * gauss(rng);
        }
    }
    return out;
}

PerturbationMatrix gaussian_cutoff(const PerturbationMatrix& b, double bandwidth) {
    if (!(bandwidth > 0.0)) {
        throw std::invalid_argument("gaussian_cutoff: bandwidth must be positive");
    }
    PerturbationMatrix out = b;
    out.provenance = Provenance::cutoff;
    const Eigen::Index n = b.entries.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double d = static_cast<double>(i - j);
            out.entries(i, j) = b.entries(i, j) * std::exp(-d * d / (2.0 * bandwidth * bandwidth));
        }
    }
    return out;
}

PerturbationMatrix sign_randomize(const PerturbationMatrix& b, std::uint64_t seed) {
    PerturbationMatrix out = b;
    out.provenance = Provenance::sign_randomized;
    out.seed = seed;
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.5);
    const Eigen::Index n = b.entries.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            if (coin(rng)) {
                out.entries(i, j) = -out.entries(i, j);
                out.entries(j, i) = out.entries(i, j);
            }
        }
    }
    return out;
}

PerturbationMatrix transform_perturbation(const PerturbationMatrix& b,
                                          const TransformSpec& spec) {
    PerturbationMatrix out = b;
    if (spec.apply_cutoff) {
        out = gaussian_cutoff(out, spec.bandwidth);
    }
    if (spec.apply_sign_randomize) {
        out = sign_randomize(out, spec.seed);
    }
    return out;
}

Eigen::MatrixXd ParametricModel::hamiltonian(double dx) const {
    const Eigen::Index n = static_cast<Eigen::Index>(dim());
    Eigen::MatrixXd h = dx * b.entries;
    for (Eigen::Index i = 0; i < n; ++i) {
        h(i, i) += levels.energies[static_cast<std::size_t>(i)];
    }
    return h;
}

ParametricModel assemble(LevelSequence levels, PerturbationMatrix b, ModelMeta meta) {
    if (levels.size() != b.dim()) {
        throw std::invalid_argument("assemble: level/matrix dimension mismatch");
    }
    if (!(meta.gamma_cl > 0.0)) {
        throw std::invalid_argument("assemble: gamma_cl must be positive");
    }
    if (!(meta.hbar > 0.0) || !(meta.delta > 0.0)) {
        throw std::invalid_argument("assemble: hbar and delta must be positive");
    }
    return ParametricModel{std::move(levels), std::move(b), meta};
}

}  // namespace qecho::model
