// analysis.hpp — decay-law fitting, dx sweeps (Gamma, gamma, participation),
// regime-border estimation, and the binned factorization diagnostic for the
// effective-LDOS pair amplitudes.

#pragma once

#include "qecho/dynamics.hpp"

#include <optional>
#include <string>
#include <vector>

namespace qecho::analysis {

struct InsufficientWindowError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct InsufficientStatisticsError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// ------------------------------ decay fits -----------------------------

enum class FitFamily { exponential, gaussian };

struct FitResult {
    FitFamily family{FitFamily::exponential};
    double rate{0.0};              // gamma for exponential, 1/tau for gaussian
    double t_lo{0.0};
    double t_hi{0.0};
    double rms_log_residual{0.0};
    double plateau{0.0};
    bool no_decay{false};
};

struct WindowPolicy {
    double plateau{0.0};       // saturation floor subtracted before the log fit
    double upper{0.9};         // window opens when prob first descends below this
    double lower_floor{0.1};   // window closes at max(lower_floor, 3*plateau)
};

// Least squares on ln(prob - plateau) (guarded at 1e-12) against t
// (exponential) or t^2 (gaussian) over the descent window. A curve that
// never descends below `upper` returns the no-decay flag with rate 0.
FitResult fit_decay(const dynamics::DecayCurve& curve, FitFamily family,
                    const WindowPolicy& policy = {});

// -------------------------------- sweeps -------------------------------

struct SweepPoint {
    double dx{0.0};
    double gamma{0.0};             // fitted decay rate
    double gamma_residual{0.0};
    double big_gamma{0.0};         // averaged-LDOS core width
    double participation{0.0};
    std::string flag;              // "", "no_decay", or "gap"
};

struct SweepConfig {
    std::size_t ref_begin{0};
    std::size_t ref_end{0};        // [ref_begin, ref_end): reference window
    std::size_t time_points{512};
    FitFamily fit_family{FitFamily::exponential};
};

struct SweepResult {
    std::vector<SweepPoint> points;
    std::string provenance;        // "synthetic", "sign_randomized", ...
    std::uint64_t seed{0};
};

// For each dx: averaged-LDOS core width / participation over the reference
// window and an exponential fit to the coherently reference-averaged
// fidelity. Per-point numeric failures become "gap" rows; the sweep
// continues.
SweepResult sweep(const model::ParametricModel& m,
                  const std::vector<double>& dx_grid,
                  const SweepConfig& cfg);

struct SweepPair {
    SweepResult correlated;
    SweepResult randomized;
};

// Evaluates `m` and its sign-randomized partner on the identical grid.
SweepPair sweep_pair(const model::ParametricModel& m,
                     const std::vector<double>& dx_grid,
                     const SweepConfig& cfg, std::uint64_t randomize_seed);

// Slope of log Gamma vs log dx over points with Gamma inside
// (gamma_lo, gamma_hi); fewer than 4 such points raises
// InsufficientWindowError. Defaults to the Wigner window (Delta, hbar*gamma_cl).
double scaling_exponent(const SweepResult& sweep, double gamma_lo, double gamma_hi);

// ------------------------------- borders -------------------------------

struct BorderEstimates {
    std::optional<double> dx_c;     // Gamma(dx) = Delta
    std::optional<double> dx_nu;    // Gamma(dx) = hbar*gamma_cl
    double de_broglie{0.0};         // 2*pi/k
    std::string method;
};

// Power-law fit log Gamma = a + b log dx over nonzero sweep points, then
// interpolated crossings. A border outside the fitted Gamma span is left
// absent.
BorderEstimates estimate_borders(const SweepResult& sweep,
                                 const model::ModelMeta& meta);

// Bisection solve of hbar*gamma_cl*(k*dx)^(2/(1+g)) = hbar*gamma_cl for
// k*dx; equals 1 for every g in [0, 1].
double analytic_kdx_nu(double g);

// --------------------------- factorization -----------------------------

struct FactorizationDiagnostic {
    std::vector<double> bin_centers;
    std::vector<double> mean_re;       // ensemble mean of binned Re f
    std::vector<double> mean_im;
    std::vector<double> se_re;         // standard errors of the means
    std::vector<double> se_im;
    std::vector<double> observed;      // binned <|f|^2>, unit sum
    std::vector<double> predicted;     // autoconv(wpk LDOS) * dx LDOS, unit sum
    std::vector<double> ratio;         // observed / predicted where central
    std::vector<bool> central;         // predicted > 0.1 * max predicted
    bool degenerate_support{false};    // all mass in a single bin (dx = 0)
};

// Binned statistics of the pair amplitudes f over >= 10 realizations versus
// the product prediction rho~(omega; wpk) * rho(omega; dx), rho~ the
// auto-convolution of the wavepacket LDOS. Both sides normalized to unit
// sum before the per-bin ratio.
FactorizationDiagnostic factorization_diagnostic(
    const std::vector<dynamics::SpectralAmplitudeSet>& realizations,
    const spectral::LdosDistribution& ldos_wpk,
    const spectral::LdosDistribution& ldos_dx,
    double bin_width);

// CSV export: `dx,gamma,gamma_residual,Gamma,participation,flag`.
void write_sweep_csv(std::ostream& os, const SweepResult& sweep);

}  // namespace qecho::analysis
