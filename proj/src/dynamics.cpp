#include "qecho/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>

namespace qecho::dynamics {

namespace {

constexpr Complex kI{0.0, 1.0};

void check_time_grid(const std::vector<double>& times) {
    if (times.empty() || times.front() != 0.0) {
        throw std::invalid_argument("time grid must start at 0");
    }
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (!(times[i] > times[i - 1])) {
            throw std::invalid_argument("time grid must be strictly increasing");
        }
    }
}

DecayCurve fill_curve(const std::vector<double>& times, CurveLabel label, double dx,
                      const std::function<Complex(double)>& amp) {
    check_time_grid(times);
    DecayCurve out;
    out.times = times;
    out.label = label;
    out.dx = dx;
    out.amplitudes.reserve(times.size());
    out.probabilities.reserve(times.size());
    for (double t : times) {
        const Complex a = amp(t);
        out.amplitudes.push_back(a);
        out.probabilities.push_back(std::norm(a));
    }
    return out;
}

}  // namespace

Wavepacket make_wavepacket(const model::LevelSequence& levels, double e0_target,
                           double sigma_e, PhaseMode mode, std::uint64_t seed) {
    if (!(sigma_e > 0.0)) {
        throw std::invalid_argument("make_wavepacket: sigma_e must be positive");
    }
    const std::size_t n = levels.size();
    {
        const double lo = levels.energies[static_cast<std::size_t>(
            std::floor(spectral::kEdgeGuardFraction * static_cast<double>(n)))];
        const double hi = levels.energies[n - 1 - static_cast<std::size_t>(std::floor(
            spectral::kEdgeGuardFraction * static_cast<double>(n)))];
        if (e0_target < lo || e0_target > hi) {
            throw spectral::EdgeEffectError(
                "make_wavepacket: target energy outside the central window");
        }
    }
    Eigen::VectorXcd a(static_cast<Eigen::Index>(n));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    double norm2 = 0.0;
    std::size_t support = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double de = levels.energies[i] - e0_target;
        const double mag = std::exp(-de * de / (4.0 * sigma_e * sigma_e));
        Complex phase{1.0, 0.0};
        switch (mode) {
            case PhaseMode::real_positive: break;
            case PhaseMode::random_sign: phase = (uni(rng) < 0.5) ? -1.0 : 1.0; break;
            case PhaseMode::random_phase:
                phase = std::exp(kI * (2.0 * std::numbers::pi * uni(rng)));
                break;
        }
        a[static_cast<Eigen::Index>(i)] = mag * phase;
        norm2 += mag * mag;
    }
    a /= std::sqrt(norm2);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (std::norm(a[i]) > 1e-12) ++support;
    }
    if (support == 1) {
        // stationary-state limit: collapse onto the nearest level exactly
        Eigen::Index best = 0;
        double wmax = 0.0;
        for (Eigen::Index i = 0; i < a.size(); ++i) {
            if (std::norm(a[i]) > wmax) { wmax = std::norm(a[i]); best = i; }
        }
        a.setZero();
        a[best] = 1.0;
    } else if (support < 8) {
        throw TooNarrowError("make_wavepacket: fewer than 8 levels in support");
    }
    Wavepacket out;
    out.amplitudes = std::move(a);
    out.sigma_e = sigma_e;
    out.mean_energy = 0.0;
    for (Eigen::Index i = 0; i < out.amplitudes.size(); ++i) {
        out.mean_energy += std::norm(out.amplitudes[i]) * levels.energies[static_cast<std::size_t>(i)];
    }
    return out;
}

std::vector<double> linear_time_grid(double t_max, std::size_t points) {
    if (!(t_max > 0.0) || points < 2) {
        throw std::invalid_argument("linear_time_grid: bad parameters");
    }
    std::vector<double> t(points);
    for (std::size_t i = 0; i < points; ++i) {
        t[i] = t_max * static_cast<double>(i) / static_cast<double>(points - 1);
    }
    return t;
}

double default_time_span(double gamma, double hbar) {
    if (!(gamma > 0.0)) {
        throw std::invalid_argument("default_time_span: gamma must be positive");
    }
    return 8.0 * hbar / gamma;
}

FidelityPropagator::FidelityPropagator(const model::ParametricModel& m,
                                       const spectral::SpectralDecomposition& d,
                                       const Wavepacket& prep)
    : hbar_(m.meta.hbar),
      levels_(Eigen::Map<const Eigen::VectorXd>(m.levels.energies.data(),
                                                static_cast<Eigen::Index>(m.dim()))),
      eigvals_(d.eigenvalues),
      u_(d.transform),
      prep_(prep.amplitudes) {
    if (prep_.size() != static_cast<Eigen::Index>(m.dim())) {
        throw std::invalid_argument("FidelityPropagator: dimension mismatch");
    }
    proj_ = u_.transpose() * prep_.conjugate();
}

FidelityPropagator::FidelityPropagator(const model::ParametricModel& m,
                                       const spectral::SpectralDecomposition& d,
                                       std::size_t eigenstate_ref)
    : hbar_(m.meta.hbar),
      levels_(Eigen::Map<const Eigen::VectorXd>(m.levels.energies.data(),
                                                static_cast<Eigen::Index>(m.dim()))),
      eigvals_(d.eigenvalues),
      u_(d.transform) {
    if (eigenstate_ref >= m.dim()) {
        throw std::invalid_argument("FidelityPropagator: reference out of range");
    }
    prep_ = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(m.dim()));
    prep_[static_cast<Eigen::Index>(eigenstate_ref)] = 1.0;
    proj_ = u_.transpose() * prep_.conjugate();
}

Complex FidelityPropagator::amplitude(double t) const {
    const Eigen::Index n = prep_.size();
    Eigen::VectorXcd v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        v[i] = prep_[i] * std::exp(-kI * (levels_[i] * t / hbar_));
    }
    const Eigen::VectorXcd w = u_.transpose() * v;
    Complex m{0.0, 0.0};
    for (Eigen::Index j = 0; j < n; ++j) {
        m += proj_[j] * std::exp(kI * (eigvals_[j] * t / hbar_)) * w[j];
    }
    return m;
}

SurvivalPropagator::SurvivalPropagator(const model::ParametricModel& m,
                                       const spectral::SpectralDecomposition& d,
                                       std::size_t ref)
    : hbar_(m.meta.hbar) {
    if (ref >= m.dim()) {
        throw std::invalid_argument("SurvivalPropagator: reference out of range");
    }
    const double e0 = m.levels.energies[ref];
    const Eigen::Index n = d.eigenvalues.size();
    offsets_.resize(static_cast<std::size_t>(n));
    weights_.resize(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j) {
        const double o = d.transform(static_cast<Eigen::Index>(ref), j);
        offsets_[static_cast<std::size_t>(j)] = d.eigenvalues[j] - e0;
        weights_[static_cast<std::size_t>(j)] = o * o;
    }
}

SurvivalPropagator::SurvivalPropagator(const model::ParametricModel& m,
                                       const Wavepacket& prep)
    : hbar_(m.meta.hbar) {
    const std::size_t n = m.dim();
    offsets_.resize(n);
    weights_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        offsets_[i] = m.levels.energies[i] - prep.mean_energy;
        weights_[i] = std::norm(prep.amplitudes[static_cast<Eigen::Index>(i)]);
    }
}

Complex SurvivalPropagator::amplitude(double t) const {
    Complex c{0.0, 0.0};
    for (std::size_t i = 0; i < offsets_.size(); ++i) {
        c += weights_[i] * std::exp(-kI * (offsets_[i] * t / hbar_));
    }
    return c;
}

DecayCurve evolve_fidelity(const model::ParametricModel& m,
                           const spectral::SpectralDecomposition& d,
                           const Wavepacket& prep,
                           const std::vector<double>& times) {
    FidelityPropagator p(m, d, prep);
    return fill_curve(times, CurveLabel::fidelity, d.dx,
                      [&](double t) { return p.amplitude(t); });
}

DecayCurve evolve_fidelity(const model::ParametricModel& m,
                           const spectral::SpectralDecomposition& d,
                           std::size_t eigenstate_ref,
                           const std::vector<double>& times) {
    FidelityPropagator p(m, d, eigenstate_ref);
    return fill_curve(times, CurveLabel::fidelity, d.dx,
                      [&](double t) { return p.amplitude(t); });
}

DecayCurve evolve_survival(const model::ParametricModel& m,
                           const spectral::SpectralDecomposition& d,
                           std::size_t ref,
                           const std::vector<double>& times) {
    SurvivalPropagator p(m, d, ref);
    return fill_curve(times, CurveLabel::survival_eigenstate, d.dx,
                      [&](double t) { return p.amplitude(t); });
}

DecayCurve evolve_survival_wavepacket(const model::ParametricModel& m,
                                      const Wavepacket& prep,
                                      const std::vector<double>& times) {
    SurvivalPropagator p(m, prep);
    return fill_curve(times, CurveLabel::survival_wavepacket, 0.0,
                      [&](double t) { return p.amplitude(t); });
}

DecayCurve averaged_fidelity(const model::ParametricModel& m,
                             const spectral::SpectralDecomposition& d,
                             std::size_t ref_begin, std::size_t ref_end,
                             const std::vector<double>& times) {
    if (ref_end <= ref_begin) {
        throw std::invalid_argument("averaged_fidelity: empty reference window");
    }
    check_time_grid(times);
    std::vector<SurvivalPropagator> props;
    props.reserve(ref_end - ref_begin);
    for (std::size_t r = ref_begin; r < ref_end; ++r) {
        props.emplace_back(m, d, r);
    }
    DecayCurve out;
    out.times = times;
    out.label = CurveLabel::fidelity;
    out.dx = d.dx;
    const double inv = 1.0 / static_cast<double>(props.size());
    for (double t : times) {
        Complex acc{0.0, 0.0};
        for (const auto& p : props) acc += p.amplitude(t);
        acc *= inv;
        out.amplitudes.push_back(acc);
        out.probabilities.push_back(std::norm(acc));
    }
    return out;
}

SpectralAmplitudeSet effective_ldos(const model::ParametricModel& m,
                                    const spectral::SpectralDecomposition& d,
                                    const Wavepacket& prep,
                                    double prune_floor) {
    const Eigen::Index n = static_cast<Eigen::Index>(m.dim());
    if (prep.amplitudes.size() != n) {
        throw std::invalid_argument("effective_ldos: dimension mismatch");
    }
    // <Psi0|n(x)> over n
    const Eigen::VectorXcd psi_n = d.transform.transpose() * prep.amplitudes.conjugate();
    SpectralAmplitudeSet out;
    Complex sum{0.0, 0.0};
    for (Eigen::Index j = 0; j < n; ++j) {          // eigenstates of H(dx)
        for (Eigen::Index i = 0; i < n; ++i) {      // H0 basis states
            const Complex f = psi_n[j] * d.transform(i, j) * prep.amplitudes[i];
            sum += f;
            if (std::abs(f) >= prune_floor) {
                out.frequencies.push_back(d.eigenvalues[j] -
                                          m.levels.energies[static_cast<std::size_t>(i)]);
                out.weights.push_back(f);
            }
        }
    }
    if (std::abs(sum - Complex{1.0, 0.0}) > 1e-8) {
        throw spectral::NumericFailure("effective_ldos: sum rule violated");
    }
    return out;
}

Complex reconstruct_amplitude(const SpectralAmplitudeSet& set, double t, double hbar) {
    Complex m{0.0, 0.0};
    for (std::size_t i = 0; i < set.frequencies.size(); ++i) {
        m += set.weights[i] * std::exp(kI * (set.frequencies[i] * t / hbar));
    }
    return m;
}

Eigen::VectorXcd oracle_evolve_state(const Eigen::MatrixXd& h, double t,
                                     double hbar, const Eigen::VectorXcd& state) {
    if (h.rows() != h.cols() || h.rows() != state.size()) {
        throw std::invalid_argument("oracle_evolve_state: dimension mismatch");
    }
    if (h.rows() > 64) {
        throw OracleScopeError("oracle_evolve_state: n > 64 is out of oracle scope");
    }
    auto expm_apply = [&](int extra_scale) {
        const Eigen::MatrixXcd a = -kI * (t / hbar) * h.cast<Complex>();
        const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
        int s = extra_scale;
        if (norm > 0.5) {
            s += static_cast<int>(std::ceil(std::log2(norm / 0.5)));
        }
        const Eigen::MatrixXcd scaled = a / std::pow(2.0, s);
        Eigen::MatrixXcd result = Eigen::MatrixXcd::Identity(h.rows(), h.cols());
        Eigen::MatrixXcd term = result;
        for (int k = 1; k <= 40; ++k) {
            term = (scaled * term) / static_cast<double>(k);
            result += term;
            if (term.cwiseAbs().maxCoeff() < 1e-18) break;
        }
        for (int k = 0; k < s; ++k) result *= result;
        return (result * state).eval();
    };
    const Eigen::VectorXcd v1 = expm_apply(0);
    const Eigen::VectorXcd v2 = expm_apply(1);   // step-halved check
    if ((v1 - v2).cwiseAbs().maxCoeff() > 1e-10) {
        throw spectral::NumericFailure("oracle_evolve_state: convergence check failed");
    }
    return v2;
}

Complex oracle_propagate(const model::ParametricModel& m, double dx,
                         const Eigen::VectorXcd& state, double t) {
    const Eigen::VectorXcd evolved =
        oracle_evolve_state(m.hamiltonian(dx), t, m.meta.hbar, state);
    return (state.adjoint() * evolved)(0);
}

void write_decay_csv(std::ostream& os, const DecayCurve& curve,
                     const std::string& preparation, std::uint64_t seed) {
    const char* label = curve.label == CurveLabel::fidelity ? "fidelity"
                        : curve.label == CurveLabel::survival_eigenstate
                            ? "survival_eigenstate"
                            : "survival_wavepacket";
    char buf[256];
    std::snprintf(buf, sizeof(buf), "# dx=%.17g label=%s preparation=%s seed=%llu\n",
                  curve.dx, label, preparation.c_str(),
                  static_cast<unsigned long long>(seed));
    os << buf << "t,re_amp,im_amp,prob\n";
    for (std::size_t i = 0; i < curve.times.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", curve.times[i],
                      curve.amplitudes[i].real(), curve.amplitudes[i].imag(),
                      curve.probabilities[i]);
        os << buf;
    }
}

}  // namespace qecho::dynamics
