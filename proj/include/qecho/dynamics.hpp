// dynamics.hpp — wavepacket preparations, fidelity / survival amplitude
// propagation in the spectral representation, and the effective-LDOS
// pair decomposition f(omega').

#pragma once

#include "qecho/model.hpp"
#include "qecho/spectral.hpp"

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace qecho::dynamics {

using Complex = std::complex<double>;

struct TooNarrowError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct OracleScopeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// ------------------------------ wavepacket -----------------------------

enum class PhaseMode { real_positive, random_sign, random_phase };

struct Wavepacket {
    Eigen::VectorXcd amplitudes;   // over the H0 eigenbasis, unit norm
    double mean_energy{0.0};       // E0 = sum |a_n|^2 E_n
    double sigma_e{0.0};
};

// Gaussian energy envelope |a_n| ~ exp(-(E_n - E0)^2 / (4 sigma_e^2)) with
// phases per `mode`. A single-level envelope collapses to the stationary
// point mass; a 2..7 level support is rejected as too narrow to resolve.
Wavepacket make_wavepacket(const model::LevelSequence& levels, double e0_target,
                           double sigma_e, PhaseMode mode, std::uint64_t seed);

// ------------------------------ decay curves ---------------------------

enum class CurveLabel { fidelity, survival_eigenstate, survival_wavepacket };

struct DecayCurve {
    std::vector<double> times;
    std::vector<Complex> amplitudes;
    std::vector<double> probabilities;
    CurveLabel label{CurveLabel::fidelity};
    double dx{0.0};
};

std::vector<double> linear_time_grid(double t_max, std::size_t points = 512);

// Default span: long enough to reach the saturation plateau of a decay
// with core width `gamma`.
double default_time_span(double gamma, double hbar);

// Fidelity amplitude m(t) = <Psi0| e^{+iHt/hbar} e^{-iH0 t/hbar} |Psi0>,
// evaluated exactly in the eigenrepresentation of H(dx) at any t.
class FidelityPropagator {
  public:
    FidelityPropagator(const model::ParametricModel& m,
                       const spectral::SpectralDecomposition& d,
                       const Wavepacket& prep);
    FidelityPropagator(const model::ParametricModel& m,
                       const spectral::SpectralDecomposition& d,
                       std::size_t eigenstate_ref);

    Complex amplitude(double t) const;

  private:
    double hbar_;
    Eigen::VectorXd levels_;
    Eigen::VectorXd eigvals_;
    Eigen::MatrixXd u_;
    Eigen::VectorXcd prep_;
    Eigen::VectorXcd proj_;   // U^T conj(a)
};

// Survival amplitude of eigenstate `ref` under H(dx), phase-referenced to
// E_ref so that c(t) is the Fourier transform of the eigenstate LDOS.
class SurvivalPropagator {
  public:
    SurvivalPropagator(const model::ParametricModel& m,
                       const spectral::SpectralDecomposition& d,
                       std::size_t ref);
    // Wavepacket survival under H0, phase-referenced to the mean energy.
    SurvivalPropagator(const model::ParametricModel& m, const Wavepacket& prep);

    Complex amplitude(double t) const;

  private:
    double hbar_;
    std::vector<double> offsets_;
    std::vector<double> weights_;
};

DecayCurve evolve_fidelity(const model::ParametricModel& m,
                           const spectral::SpectralDecomposition& d,
                           const Wavepacket& prep,
                           const std::vector<double>& times);
DecayCurve evolve_fidelity(const model::ParametricModel& m,
                           const spectral::SpectralDecomposition& d,
                           std::size_t eigenstate_ref,
                           const std::vector<double>& times);
DecayCurve evolve_survival(const model::ParametricModel& m,
                           const spectral::SpectralDecomposition& d,
                           std::size_t ref,
                           const std::vector<double>& times);
DecayCurve evolve_survival_wavepacket(const model::ParametricModel& m,
                                      const Wavepacket& prep,
                                      const std::vector<double>& times);

// Coherent reference average: M(t) = |mean_ref m_ref(t)|^2 over eigenstate
// preparations in [ref_begin, ref_end).
DecayCurve averaged_fidelity(const model::ParametricModel& m,
                             const spectral::SpectralDecomposition& d,
                             std::size_t ref_begin, std::size_t ref_end,
                             const std::vector<double>& times);

// ----------------------------- effective LDOS --------------------------

struct SpectralAmplitudeSet {
    std::vector<double> frequencies;   // omega' = E_n(x) - E_m(x0)
    std::vector<Complex> weights;      // f(omega'), sum to 1
};

// Pair decomposition of m(t;dx): f_nm = <Psi0|n(x)><n(x)|m(x0)><m(x0)|Psi0>.
// Pairs with |f| below `prune_floor` are dropped after the sum-rule check.
SpectralAmplitudeSet effective_ldos(const model::ParametricModel& m,
                                    const spectral::SpectralDecomposition& d,
                                    const Wavepacket& prep,
                                    double prune_floor = 1e-14);

// m(t) = sum f(omega') e^{+i omega' t / hbar}
Complex reconstruct_amplitude(const SpectralAmplitudeSet& set, double t, double hbar);

// ------------------------------- oracle path ---------------------------

// Brute-force propagation by scaling-and-squaring matrix exponential;
// shares no eigendecomposition code with the spectral path. n <= 64.
Eigen::VectorXcd oracle_evolve_state(const Eigen::MatrixXd& h, double t,
                                     double hbar, const Eigen::VectorXcd& state);

// <state| e^{-i H(dx) t / hbar} |state>
Complex oracle_propagate(const model::ParametricModel& m, double dx,
                         const Eigen::VectorXcd& state, double t);

// CSV export: `t,re_amp,im_amp,prob` with metadata header comments.
void write_decay_csv(std::ostream& os, const DecayCurve& curve,
                     const std::string& preparation, std::uint64_t seed);

}  // namespace qecho::dynamics
