#include "qecho/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>

namespace qecho::analysis {

namespace {

struct LineFit {
    double slope{0.0};
    double intercept{0.0};
    double rms_residual{0.0};
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    const double sx = std::accumulate(x.begin(), x.end(), 0.0);
    const double sy = std::accumulate(y.begin(), y.end(), 0.0);
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double det = n * sxx - sx * sx;
    if (std::abs(det) < 1e-300) {
        throw InsufficientWindowError("least_squares: degenerate abscissa");
    }
    LineFit out;
    out.slope = (n * sxy - sx * sy) / det;
    out.intercept = (sy - out.slope * sx) / n;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (out.intercept + out.slope * x[i]);
        ss += r * r;
    }
    out.rms_residual = std::sqrt(ss / n);
    return out;
}

long long bin_of(double omega, double width) {
    return std::llround(omega / width);
}

}  // namespace

FitResult fit_decay(const dynamics::DecayCurve& curve, FitFamily family,
                    const WindowPolicy& policy) {
    if (curve.times.size() != curve.probabilities.size()) {
        throw std::invalid_argument("fit_decay: malformed curve");
    }
    const double lower = std::max(policy.lower_floor, 3.0 * policy.plateau);
    std::size_t start = curve.probabilities.size();
    for (std::size_t i = 0; i < curve.probabilities.size(); ++i) {
        if (curve.probabilities[i] < policy.upper) {
            start = i;
            break;
        }
    }
    FitResult out;
    out.family = family;
    out.plateau = policy.plateau;
    if (start == curve.probabilities.size()) {
        out.no_decay = true;
        return out;
    }
    std::size_t stop = curve.probabilities.size();
    for (std::size_t i = start; i < curve.probabilities.size(); ++i) {
        if (curve.probabilities[i] <= lower) {
            stop = i;
            break;
        }
    }
    if (stop - start < 16) {
        throw InsufficientWindowError("fit_decay: fewer than 16 points in the descent window");
    }
    std::vector<double> xs;
    std::vector<double> ys;
    xs.reserve(stop - start);
    ys.reserve(stop - start);
    for (std::size_t i = start; i < stop; ++i) {
        const double t = curve.times[i];
        xs.push_back(family == FitFamily::exponential ? t : t * t);
        ys.push_back(std::log(std::max(curve.probabilities[i] - policy.plateau, 1e-12)));
    }
    const LineFit fit = least_squares(xs, ys);
    out.t_lo = curve.times[start];
    out.t_hi = curve.times[stop - 1];
    out.rms_log_residual = fit.rms_residual;
    const double decay = std::max(-fit.slope, 0.0);
    out.rate = family == FitFamily::exponential ? decay : std::sqrt(decay);
    return out;
}

SweepResult sweep(const model::ParametricModel& m,
                  const std::vector<double>& dx_grid,
                  const SweepConfig& cfg) {
    for (std::size_t i = 1; i < dx_grid.size(); ++i) {
        if (!(dx_grid[i] > dx_grid[i - 1])) {
            throw std::invalid_argument("sweep: dx grid must be ascending");
        }
    }
    if (!dx_grid.empty() && dx_grid.front() < 0.0) {
        throw std::invalid_argument("sweep: dx grid must be nonnegative");
    }
    SweepResult out;
    switch (m.b.provenance) {
        case model::Provenance::synthetic: out.provenance = "synthetic"; break;
        case model::Provenance::cutoff: out.provenance = "cutoff"; break;
        case model::Provenance::sign_randomized: out.provenance = "sign_randomized"; break;
        case model::Provenance::ingested: out.provenance = "ingested"; break;
    }
    out.seed = m.b.seed;
    out.points.reserve(dx_grid.size());
    for (double dx : dx_grid) {
        SweepPoint p;
        p.dx = dx;
        if (dx == 0.0) {
            p.participation = 1.0;
            p.flag = "no_decay";
            out.points.push_back(p);
            continue;
        }
        try {
            const auto d = spectral::diagonalize(m, dx);
            const auto ldos = spectral::averaged_ldos(m, d, cfg.ref_begin, cfg.ref_end);
            p.big_gamma = spectral::core_width(ldos).gamma;
            p.participation = spectral::participation_ratio(ldos);
            // a failed rate fit keeps the LDOS columns usable
            try {
                const double span = dynamics::default_time_span(
                    std::max(p.big_gamma, m.meta.delta), m.meta.hbar);
                const auto times = dynamics::linear_time_grid(span, cfg.time_points);
                const auto curve = dynamics::averaged_fidelity(m, d, cfg.ref_begin,
                                                               cfg.ref_end, times);
                const FitResult fit = fit_decay(curve, cfg.fit_family);
                p.gamma = fit.rate;
                p.gamma_residual = fit.rms_log_residual;
                if (fit.no_decay) p.flag = "no_decay";
            } catch (const std::exception&) {
                p.gamma = 0.0;
                p.gamma_residual = 0.0;
                p.flag = "no_fit";
            }
        } catch (const std::exception&) {
            p = SweepPoint{};
            p.dx = dx;
            p.flag = "gap";
        }
        out.points.push_back(p);
    }
    return out;
}

SweepPair sweep_pair(const model::ParametricModel& m,
                     const std::vector<double>& dx_grid,
                     const SweepConfig& cfg, std::uint64_t randomize_seed) {
    SweepPair out;
    out.correlated = sweep(m, dx_grid, cfg);
    model::ParametricModel partner = m;
    partner.b = model::sign_randomize(m.b, randomize_seed);
    out.randomized = sweep(partner, dx_grid, cfg);
    return out;
}

double scaling_exponent(const SweepResult& sw, double gamma_lo, double gamma_hi) {
    std::vector<double> lx;
    std::vector<double> ly;
    for (const auto& p : sw.points) {
        if (p.flag == "gap" || p.dx <= 0.0 || p.big_gamma <= 0.0) continue;
        if (p.big_gamma <= gamma_lo || p.big_gamma >= gamma_hi) continue;
        lx.push_back(std::log(p.dx));
        ly.push_back(std::log(p.big_gamma));
    }
    if (lx.size() < 4) {
        throw InsufficientWindowError("scaling_exponent: fewer than 4 points in the window");
    }
    return least_squares(lx, ly).slope;
}

BorderEstimates estimate_borders(const SweepResult& sw, const model::ModelMeta& meta) {
    BorderEstimates out;
    out.de_broglie = 2.0 * std::numbers::pi / meta.k;
    out.method = "power-law-interpolation";
    std::vector<double> lx;
    std::vector<double> ly;
    double gmin = 0.0;
    double gmax = 0.0;
    for (const auto& p : sw.points) {
        if (p.flag == "gap" || p.dx <= 0.0 || p.big_gamma <= 0.0) continue;
        lx.push_back(std::log(p.dx));
        ly.push_back(std::log(p.big_gamma));
        gmin = (gmin == 0.0) ? p.big_gamma : std::min(gmin, p.big_gamma);
        gmax = std::max(gmax, p.big_gamma);
    }
    if (lx.size() < 2) {
        return out;   // both borders unresolved
    }
    const LineFit fit = least_squares(lx, ly);
    auto crossing = [&](double target) -> std::optional<double> {
        if (fit.slope <= 0.0) return std::nullopt;
        if (target < gmin || target > gmax) return std::nullopt;   // not spanned
        return std::exp((std::log(target) - fit.intercept) / fit.slope);
    };
    out.dx_c = crossing(meta.delta);
    out.dx_nu = crossing(meta.hbar * meta.gamma_cl);
    return out;
}

double analytic_kdx_nu(double g) {
    if (g < 0.0 || g > 1.0) {
        throw std::invalid_argument("analytic_kdx_nu: g must be in [0, 1]");
    }
    const double expo = 2.0 / (1.0 + g);
    double lo = 1e-9;
    double hi = 1e9;
    for (int i = 0; i < 200; ++i) {
        const double mid = std::sqrt(lo * hi);
        if (std::pow(mid, expo) < 1.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return std::sqrt(lo * hi);
}

FactorizationDiagnostic factorization_diagnostic(
    const std::vector<dynamics::SpectralAmplitudeSet>& realizations,
    const spectral::LdosDistribution& ldos_wpk,
    const spectral::LdosDistribution& ldos_dx,
    double bin_width) {
    if (realizations.size() < 10) {
        throw InsufficientStatisticsError(
            "factorization_diagnostic: need at least 10 realizations");
    }
    if (!(bin_width > 0.0)) {
        throw std::invalid_argument("factorization_diagnostic: bin width must be positive");
    }
    const std::size_t nr = realizations.size();
    // per-realization binned sums of f and |f|^2
    std::vector<std::map<long long, dynamics::Complex>> sum_f(nr);
    std::vector<std::map<long long, double>> sum_abs2(nr);
    std::map<long long, int> bins;
    for (std::size_t r = 0; r < nr; ++r) {
        const auto& set = realizations[r];
        for (std::size_t i = 0; i < set.frequencies.size(); ++i) {
            const long long b = bin_of(set.frequencies[i], bin_width);
            sum_f[r][b] += set.weights[i];
            sum_abs2[r][b] += std::norm(set.weights[i]);
            bins[b] = 1;
        }
    }
    FactorizationDiagnostic out;
    std::vector<long long> keys;
    keys.reserve(bins.size());
    for (const auto& [b, _] : bins) keys.push_back(b);
    const std::size_t nb = keys.size();
    out.bin_centers.resize(nb);
    out.mean_re.assign(nb, 0.0);
    out.mean_im.assign(nb, 0.0);
    out.se_re.assign(nb, 0.0);
    out.se_im.assign(nb, 0.0);
    out.observed.assign(nb, 0.0);
    for (std::size_t k = 0; k < nb; ++k) {
        out.bin_centers[k] = static_cast<double>(keys[k]) * bin_width;
        std::vector<double> re(nr, 0.0);
        std::vector<double> im(nr, 0.0);
        double abs2 = 0.0;
        for (std::size_t r = 0; r < nr; ++r) {
            auto it = sum_f[r].find(keys[k]);
            if (it != sum_f[r].end()) {
                re[r] = it->second.real();
                im[r] = it->second.imag();
            }
            auto jt = sum_abs2[r].find(keys[k]);
            if (jt != sum_abs2[r].end()) abs2 += jt->second;
        }
        const double mre = std::accumulate(re.begin(), re.end(), 0.0) / static_cast<double>(nr);
        const double mim = std::accumulate(im.begin(), im.end(), 0.0) / static_cast<double>(nr);
        double vre = 0.0;
        double vim = 0.0;
        for (std::size_t r = 0; r < nr; ++r) {
            vre += (re[r] - mre) * (re[r] - mre);
            vim += (im[r] - mim) * (im[r] - mim);
        }
        const double denom = static_cast<double>(nr) * static_cast<double>(nr - 1);
        out.mean_re[k] = mre;
        out.mean_im[k] = mim;
        out.se_re[k] = std::sqrt(vre / denom);
        out.se_im[k] = std::sqrt(vim / denom);
        out.observed[k] = abs2 / static_cast<double>(nr);
    }
    std::size_t support = 0;
    for (double o : out.observed) {
        if (o > 0.0) ++support;
    }
    if (support < 2) {
        out.degenerate_support = true;
        out.predicted.assign(nb, 0.0);
        out.ratio.assign(nb, 0.0);
        out.central.assign(nb, false);
        return out;
    }
    // prediction: auto-convolution of the wavepacket LDOS times the
    // dx-LDOS, both evaluated on the same bin grid
    std::map<long long, double> autoconv;
    for (std::size_t i = 0; i < ldos_wpk.offsets.size(); ++i) {
        for (std::size_t j = 0; j < ldos_wpk.offsets.size(); ++j) {
            const double w = ldos_wpk.weights[i] * ldos_wpk.weights[j];
            if (w == 0.0) continue;
            autoconv[bin_of(ldos_wpk.offsets[i] - ldos_wpk.offsets[j], bin_width)] += w;
        }
    }
    std::map<long long, double> hdx;
    for (std::size_t i = 0; i < ldos_dx.offsets.size(); ++i) {
        hdx[bin_of(ldos_dx.offsets[i], bin_width)] += ldos_dx.weights[i];
    }
    out.predicted.assign(nb, 0.0);
    for (std::size_t k = 0; k < nb; ++k) {
        auto ia = autoconv.find(keys[k]);
        auto id = hdx.find(keys[k]);
        if (ia != autoconv.end() && id != hdx.end()) {
            out.predicted[k] = ia->second * id->second;
        }
    }
    const double so = std::accumulate(out.observed.begin(), out.observed.end(), 0.0);
    const double sp = std::accumulate(out.predicted.begin(), out.predicted.end(), 0.0);
    if (!(so > 0.0) || !(sp > 0.0)) {
        throw spectral::NumericFailure("factorization_diagnostic: empty distributions");
    }
    for (std::size_t k = 0; k < nb; ++k) {
        out.observed[k] /= so;
        out.predicted[k] /= sp;
    }
    const double pmax = *std::max_element(out.predicted.begin(), out.predicted.end());
    out.central.assign(nb, false);
    out.ratio.assign(nb, 0.0);
    for (std::size_t k = 0; k < nb; ++k) {
        out.central[k] = out.predicted[k] > 0.1 * pmax;
        if (out.central[k]) out.ratio[k] = out.observed[k] / out.predicted[k];
    }
    return out;
}

void write_sweep_csv(std::ostream& os, const SweepResult& sw) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "# provenance=%s seed=%llu\n",
                  sw.provenance.c_str(), static_cast<unsigned long long>(sw.seed));
    os << buf << "dx,gamma,gamma_residual,Gamma,participation,flag\n";
    for (const auto& p : sw.points) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%s\n", p.dx,
                      p.gamma, p.gamma_residual, p.big_gamma, p.participation,
                      p.flag.c_str());
        os << buf;
    }
}

}  // namespace qecho::analysis
