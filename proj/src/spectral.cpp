#include "qecho/spectral.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>

namespace qecho::spectral {

namespace {

void check_normalized(const LdosDistribution& dist) {
    double s = std::accumulate(dist.weights.begin(), dist.weights.end(), 0.0);
    if (std::abs(s - 1.0) > 1e-8) {
        throw std::invalid_argument("LDOS weights are not normalized");
    }
}

LdosDistribution sorted_distribution(std::vector<double> offsets,
                                     std::vector<double> weights,
                                     double center, LdosKind kind) {
    std::vector<std::size_t> order(offsets.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return offsets[a] < offsets[b]; });
    LdosDistribution out;
    out.offsets.reserve(offsets.size());
    out.weights.reserve(weights.size());
    for (std::size_t i : order) {
        out.offsets.push_back(offsets[i]);
        out.weights.push_back(weights[i]);
    }
    out.center = center;
    out.kind = kind;
    return out;
}

void require_central(std::size_t ref, std::size_t n) {
    const auto guard = static_cast<std::size_t>(std::floor(kEdgeGuardFraction * static_cast<double>(n)));
    if (ref < guard || ref >= n - guard) {
        throw EdgeEffectError("reference index lies in the spectral edge guard band");
    }
}

}  // namespace

SpectralDecomposition diagonalize(const model::ParametricModel& m, double dx) {
    const auto n = static_cast<lapack_int>(m.dim());
    SpectralDecomposition out;
    out.dx = dx;
    out.transform = m.hamiltonian(dx);
    out.eigenvalues.resize(n);
    const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n,
                                           out.transform.data(), n,
                                           out.eigenvalues.data());
    if (info != 0) {
        throw NumericFailure("dsyevd failed at dx=" + std::to_string(dx) +
                             ", n=" + std::to_string(n) +
                             ", info=" + std::to_string(info));
    }
    return out;
}

LdosDistribution eigenstate_ldos(const model::ParametricModel& m,
                                 const SpectralDecomposition& d,
                                 std::size_t ref) {
    const std::size_t n = m.dim();
    require_central(ref, n);
    const double e0 = m.levels.energies[ref];
    std::vector<double> offsets(n);
    std::vector<double> weights(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double overlap = d.transform(static_cast<Eigen::Index>(ref),
                                           static_cast<Eigen::Index>(j));
        offsets[j] = d.eigenvalues[static_cast<Eigen::Index>(j)] - e0;
        weights[j] = overlap * overlap;
    }
    return sorted_distribution(std::move(offsets), std::move(weights), e0,
                               LdosKind::eigenstate);
}

LdosDistribution wavepacket_ldos(const model::LevelSequence& levels,
                                 const Eigen::VectorXcd& amplitudes) {
    const std::size_t n = levels.size();
    if (static_cast<std::size_t>(amplitudes.size()) != n) {
        throw std::invalid_argument("wavepacket_ldos: dimension mismatch");
    }
    std::vector<double> weights(n);
    double e0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        weights[i] = std::norm(amplitudes[static_cast<Eigen::Index>(i)]);
        e0 += weights[i] * levels.energies[i];
    }
    std::vector<double> offsets(n);
    for (std::size_t i = 0; i < n; ++i) {
        offsets[i] = levels.energies[i] - e0;
    }
    return sorted_distribution(std::move(offsets), std::move(weights), e0,
                               LdosKind::wavepacket);
}

LdosDistribution averaged_ldos(const model::ParametricModel& m,
                               const SpectralDecomposition& d,
                               std::size_t ref_begin, std::size_t ref_end) {
    if (ref_end <= ref_begin || ref_end - ref_begin < 10) {
        throw std::invalid_argument("averaged_ldos: need a window of >= 10 references");
    }
    const std::size_t n = m.dim();
    require_central(ref_begin, n);
    require_central(ref_end - 1, n);
    const double bin = m.meta.delta / 2.0;
    std::map<long long, double> acc;
    for (std::size_t ref = ref_begin; ref < ref_end; ++ref) {
        const double e0 = m.levels.energies[ref];
        for (std::size_t j = 0; j < n; ++j) {
            const double overlap = d.transform(static_cast<Eigen::Index>(ref),
                                               static_cast<Eigen::Index>(j));
            const double omega = d.eigenvalues[static_cast<Eigen::Index>(j)] - e0;
            acc[std::llround(omega / bin)] += overlap * overlap;
        }
    }
    LdosDistribution out;
    out.kind = LdosKind::averaged;
    out.center = 0.0;
    double total = 0.0;
    for (const auto& [idx, w] : acc) total += w;
    out.offsets.reserve(acc.size());
    out.weights.reserve(acc.size());
    for (const auto& [idx, w] : acc) {
        out.offsets.push_back(static_cast<double>(idx) * bin);
        out.weights.push_back(w / total);
    }
    return out;
}

CoreWidth core_width(const LdosDistribution& dist) {
    check_normalized(dist);
    std::size_t support = 0;
    for (double w : dist.weights) {
        if (w > 0.0) ++support;
    }
    if (support < 2) {
        return CoreWidth{0.0, true};
    }
    // cumulative staircase (C_k, omega_k), anchored at (0, omega_first)
    std::vector<double> cum;
    std::vector<double> pos;
    cum.reserve(dist.weights.size() + 1);
    pos.reserve(dist.offsets.size() + 1);
    cum.push_back(0.0);
    pos.push_back(dist.offsets.front());
    double c = 0.0;
    for (std::size_t i = 0; i < dist.weights.size(); ++i) {
        c += dist.weights[i];
        cum.push_back(c);
        pos.push_back(dist.offsets[i]);
    }
    auto quantile = [&](double p) {
        auto it = std::lower_bound(cum.begin(), cum.end(), p);
        if (it == cum.begin()) return pos.front();
        if (it == cum.end()) return pos.back();
        const std::size_t hi = static_cast<std::size_t>(it - cum.begin());
        const std::size_t lo = hi - 1;
        const double dc = cum[hi] - cum[lo];
        if (dc <= 0.0) return pos[hi];
        const double f = (p - cum[lo]) / dc;
        return pos[lo] + f * (pos[hi] - pos[lo]);
    };
    const double gamma = quantile(0.85) - quantile(0.15);
    return CoreWidth{std::max(gamma, 0.0), false};
}

double participation_ratio(const LdosDistribution& dist) {
    check_normalized(dist);
    double s2 = 0.0;
    for (double w : dist.weights) s2 += w * w;
    return 1.0 / s2;
}

void write_ldos_csv(std::ostream& os, const LdosDistribution& dist, double dx) {
    const char* kind = dist.kind == LdosKind::eigenstate  ? "eigenstate"
                       : dist.kind == LdosKind::wavepacket ? "wavepacket"
                                                           : "averaged";
    const CoreWidth cw = core_width(dist);
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "# dx=%.17g mode=%s E0=%.17g core_width=%.17g participation=%.17g\n",
                  dx, kind, dist.center, cw.gamma, participation_ratio(dist));
    os << buf << "omega,weight\n";
    for (std::size_t i = 0; i < dist.offsets.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", dist.offsets[i], dist.weights[i]);
        os << buf;
    }
}

}  // namespace qecho::spectral
