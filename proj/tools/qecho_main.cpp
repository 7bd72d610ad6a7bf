// qecho — configuration-driven front end over the qecho_core library.
//
// Usage: qecho <build|ldos|decay|sweep|borders|diagnostic> --config cfg.json
//
// Exit codes: 0 success, 2 config validation, 3 numeric failure, 4 I/O.

#include "qecho/analysis.hpp"
#include "qecho/model_io.hpp"
#include "qecho/oracle.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qecho;

namespace {

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

double require_number(const json& j, const std::string& section, const std::string& key) {
    if (!j.contains(key) || !j[key].is_number()) {
        throw ValidationError(section + "." + key + ": required number missing");
    }
    return j[key].get<double>();
}

double number_or(const json& j, const std::string& key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) {
        throw ValidationError(key + ": must be a number");
    }
    return j[key].get<double>();
}

// Atomic write: temp file in the same directory, then rename.
void write_atomic(const fs::path& path, const std::string& contents) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot open '" + tmp.string() + "'");
        out << contents;
        out.close();
        if (!out) throw IoError("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("rename failed for '" + path.string() + "': " + ec.message());
}

struct Experiment {
    json config;
    std::uint64_t config_hash{0};
    model::ParametricModel m;
    fs::path out_dir;
    json manifest;
};

model::ParametricModel build_model(const json& mc) {
    const std::string kind = mc.value("kind", "synthetic");
    if (kind == "ingest") {
        if (!mc.contains("path")) {
            throw ValidationError("model.path: required for kind=ingest");
        }
        const fs::path p = mc["path"].get<std::string>();
        if (!fs::exists(p)) {
            throw ValidationError("model.path: '" + p.string() + "' does not exist");
        }
        auto result = model::ingest_model(p);
        for (const auto& w : result.warnings) {
            std::cerr << "warning: " << w << "\n";
        }
        return std::move(result.model);
    }
    if (kind != "synthetic") {
        throw ValidationError("model.kind: must be 'synthetic' or 'ingest'");
    }
    const auto n = static_cast<std::size_t>(require_number(mc, "model", "n"));
    const double delta = require_number(mc, "model", "delta_energy");
    const double k = require_number(mc, "model", "k");
    const double g = require_number(mc, "model", "g");
    const double hbar = require_number(mc, "model", "hbar");
    const double gamma_cl = require_number(mc, "model", "gamma_cl_rate");
    const double c_norm = require_number(mc, "model", "c_norm");
    const double omega_min = number_or(mc, "omega_min_rate", delta / hbar);
    const double jitter = number_or(mc, "jitter", 0.0);
    const double e_base = number_or(mc, "e_base", 0.0);
    const auto seed = static_cast<std::uint64_t>(number_or(mc, "seed", 1.0));
    const std::string diag = mc.value("diag_policy", "gaussian");
    if (diag != "gaussian" && diag != "zeros") {
        throw ValidationError("model.diag_policy: must be 'gaussian' or 'zeros'");
    }
    auto levels = model::build_levels(n, delta, e_base, jitter, seed);
    const auto profile = model::build_bandprofile(k, g, hbar, delta, c_norm, omega_min);
    auto b = model::sample_perturbation(
        levels, profile, diag == "gaussian" ? model::DiagPolicy::gaussian : model::DiagPolicy::zeros,
        seed);
    model::TransformSpec spec;
    spec.bandwidth = number_or(mc, "cutoff_bandwidth", 0.0);
    spec.apply_cutoff = spec.bandwidth > 0.0;
    spec.apply_sign_randomize = mc.value("sign_randomize", false);
    spec.seed = static_cast<std::uint64_t>(number_or(mc, "transform_seed", seed + 1));
    if (spec.apply_cutoff || spec.apply_sign_randomize) {
        b = model::transform_perturbation(b, spec);
    }
    return model::assemble(std::move(levels), std::move(b),
                           model::ModelMeta{hbar, k, g, delta, gamma_cl});
}

std::vector<double> resolve_dx_grid(const json& run) {
    if (!run.contains("dx_grid")) {
        throw ValidationError("run.dx_grid: required");
    }
    const json& g = run["dx_grid"];
    if (g.is_array()) {
        std::vector<double> out;
        for (const auto& v : g) {
            if (!v.is_number()) throw ValidationError("run.dx_grid: entries must be numbers");
            out.push_back(v.get<double>());
        }
        if (out.empty()) throw ValidationError("run.dx_grid: empty");
        return out;
    }
    const double start = require_number(g, "run.dx_grid", "start");
    const double stop = require_number(g, "run.dx_grid", "stop");
    const auto points = static_cast<std::size_t>(require_number(g, "run.dx_grid", "points"));
    const std::string scale = g.value("scale", "linear");
    if (points < 1) throw ValidationError("run.dx_grid.points: must be >= 1");
    std::vector<double> out(points);
    if (scale == "linear") {
        for (std::size_t i = 0; i < points; ++i) {
            out[i] = points == 1 ? start
                                 : start + (stop - start) * static_cast<double>(i) /
                                       static_cast<double>(points - 1);
        }
    } else if (scale == "log") {
        if (!(start > 0.0) || !(stop > 0.0)) {
            throw ValidationError("run.dx_grid: log scale requires positive bounds");
        }
        for (std::size_t i = 0; i < points; ++i) {
            const double f = points == 1 ? 0.0
                                         : static_cast<double>(i) / static_cast<double>(points - 1);
            out[i] = start * std::pow(stop / start, f);
        }
    } else {
        throw ValidationError("run.dx_grid.scale: must be 'linear' or 'log'");
    }
    return out;
}

std::pair<std::size_t, std::size_t> resolve_refs(const json& run, std::size_t n) {
    const auto b = static_cast<std::size_t>(number_or(run, "ref_begin",
                                                      static_cast<double>(n) * 0.45));
    const auto e = static_cast<std::size_t>(number_or(run, "ref_end",
                                                      static_cast<double>(n) * 0.55));
    if (b >= e || e > n) {
        throw ValidationError("run.ref_begin/ref_end: invalid reference window");
    }
    return {b, e};
}

dynamics::Wavepacket resolve_wavepacket(const json& run, const model::ParametricModel& m) {
    if (!run.contains("preparation")) {
        throw ValidationError("run.preparation: required");
    }
    const json& p = run["preparation"];
    const std::string kind = p.value("kind", "wavepacket");
    if (kind == "eigenstate") {
        const auto ref = static_cast<std::size_t>(require_number(p, "run.preparation", "ref"));
        if (ref >= m.dim()) throw ValidationError("run.preparation.ref: out of range");
        dynamics::Wavepacket w;
        w.amplitudes = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(m.dim()));
        w.amplitudes[static_cast<Eigen::Index>(ref)] = 1.0;
        w.mean_energy = m.levels.energies[ref];
        return w;
    }
    if (kind != "wavepacket") {
        throw ValidationError("run.preparation.kind: must be 'eigenstate' or 'wavepacket'");
    }
    const double e0 = require_number(p, "run.preparation", "e0");
    const double sigma = require_number(p, "run.preparation", "sigma_e");
    const std::string phase = p.value("phase", "real_positive");
    dynamics::PhaseMode mode = dynamics::PhaseMode::real_positive;
    if (phase == "random_sign") {
        mode = dynamics::PhaseMode::random_sign;
    } else if (phase == "random_phase") {
        mode = dynamics::PhaseMode::random_phase;
    } else if (phase != "real_positive") {
        throw ValidationError("run.preparation.phase: unknown mode '" + phase + "'");
    }
    const auto seed = static_cast<std::uint64_t>(number_or(p, "seed", 1.0));
    return dynamics::make_wavepacket(m.levels, e0, sigma, mode, seed);
}

std::vector<double> resolve_times(const json& run, double gamma_hint, double hbar) {
    double t_max = 0.0;
    std::size_t points = 512;
    if (run.contains("time")) {
        const json& t = run["time"];
        t_max = number_or(t, "t_max", 0.0);
        points = static_cast<std::size_t>(number_or(t, "points", 512.0));
    }
    if (t_max <= 0.0) {
        t_max = dynamics::default_time_span(gamma_hint, hbar);
    }
    return dynamics::linear_time_grid(t_max, points);
}

Experiment load_experiment(const std::string& config_path) {
    std::ifstream in(config_path);
    if (!in) throw IoError("cannot open config '" + config_path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string raw = buffer.str();
    Experiment ex;
    try {
        ex.config = json::parse(raw);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config parse: ") + e.what());
    }
    if (!ex.config.contains("model") || !ex.config["model"].is_object()) {
        throw ValidationError("model: required section missing");
    }
    ex.config_hash = fnv1a(raw);
    ex.m = build_model(ex.config["model"]);
    std::string dir = "out";
    if (ex.config.contains("output") && ex.config["output"].contains("directory")) {
        dir = ex.config["output"]["directory"].get<std::string>();
    }
    if (const char* env = std::getenv("QECHO_OUTPUT_DIR")) {
        dir = env;
    }
    ex.out_dir = dir;
    std::error_code ec;
    fs::create_directories(ex.out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir + "'");
    ex.manifest = json{
        {"config_hash", ex.config_hash},
        {"model",
         {{"n", ex.m.dim()},
          {"hbar", ex.m.meta.hbar},
          {"k", ex.m.meta.k},
          {"g", ex.m.meta.g},
          {"delta_energy", ex.m.meta.delta},
          {"gamma_cl_rate", ex.m.meta.gamma_cl},
          {"seed", ex.m.b.seed}}},
    };
    return ex;
}

void write_manifest(Experiment& ex, const std::string& command) {
    ex.manifest["command"] = command;
    write_atomic(ex.out_dir / "manifest.json", ex.manifest.dump(2) + "\n");
}

json run_section(const Experiment& ex) {
    if (!ex.config.contains("run") || !ex.config["run"].is_object()) {
        throw ValidationError("run: required section missing");
    }
    return ex.config["run"];
}

int cmd_build(Experiment& ex) {
    const fs::path model_path = ex.out_dir / "model.txt";
    // export is already atomic enough for the text+sidecar pair; write the
    // text through the atomic path and let export handle the sidecar
    model::export_model(model_path, ex.m);
    ex.manifest["artifacts"] = json::array({"model.txt", "model.txt.meta.json"});
    write_manifest(ex, "build");
    return 0;
}

int cmd_ldos(Experiment& ex) {
    const json run = run_section(ex);
    const auto grid = resolve_dx_grid(run);
    const std::string mode = run.value("ldos_mode", "averaged");
    json artifacts = json::array();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double dx = grid[i];
        const auto d = spectral::diagonalize(ex.m, dx);
        spectral::LdosDistribution ldos;
        if (mode == "averaged") {
            const auto [rb, re] = resolve_refs(run, ex.m.dim());
            ldos = spectral::averaged_ldos(ex.m, d, rb, re);
        } else if (mode == "eigenstate") {
            const auto ref = static_cast<std::size_t>(require_number(run, "run", "ref"));
            ldos = spectral::eigenstate_ldos(ex.m, d, ref);
        } else if (mode == "wavepacket") {
            const auto prep = resolve_wavepacket(run, ex.m);
            ldos = spectral::wavepacket_ldos(ex.m.levels, prep.amplitudes);
        } else {
            throw ValidationError("run.ldos_mode: unknown mode '" + mode + "'");
        }
        std::ostringstream os;
        spectral::write_ldos_csv(os, ldos, dx);
        char name[64];
        std::snprintf(name, sizeof(name), "ldos_%03zu.csv", i);
        write_atomic(ex.out_dir / name, os.str());
        artifacts.push_back(name);
    }
    ex.manifest["artifacts"] = artifacts;
    ex.manifest["dx_grid"] = grid;
    write_manifest(ex, "ldos");
    return 0;
}

int cmd_decay(Experiment& ex) {
    const json run = run_section(ex);
    const auto grid = resolve_dx_grid(run);
    json artifacts = json::array();
    const auto seed = static_cast<std::uint64_t>(
        number_or(run.contains("preparation") ? run["preparation"] : json::object(), "seed", 1.0));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double dx = grid[i];
        const auto d = spectral::diagonalize(ex.m, dx);
        const auto prep = resolve_wavepacket(run, ex.m);
        const auto ldos = spectral::eigenstate_ldos(
            ex.m, d,
            static_cast<std::size_t>(std::distance(
                prep.amplitudes.data(),
                std::max_element(prep.amplitudes.data(),
                                 prep.amplitudes.data() + prep.amplitudes.size(),
                                 [](const auto& a, const auto& b) {
                                     return std::norm(a) < std::norm(b);
                                 }))));
        const double gamma_hint = std::max(spectral::core_width(ldos).gamma, ex.m.meta.delta);
        const auto times = resolve_times(run, gamma_hint, ex.m.meta.hbar);
        const auto curve = dynamics::evolve_fidelity(ex.m, d, prep, times);
        std::ostringstream os;
        dynamics::write_decay_csv(os, curve, run["preparation"].value("kind", "wavepacket"), seed);
        char name[64];
        std::snprintf(name, sizeof(name), "decay_%03zu.csv", i);
        write_atomic(ex.out_dir / name, os.str());
        artifacts.push_back(name);
    }
    ex.manifest["artifacts"] = artifacts;
    ex.manifest["dx_grid"] = grid;
    write_manifest(ex, "decay");
    return 0;
}

analysis::SweepConfig sweep_config(const json& run, const model::ParametricModel& m) {
    analysis::SweepConfig cfg;
    std::tie(cfg.ref_begin, cfg.ref_end) = resolve_refs(run, m.dim());
    cfg.time_points = static_cast<std::size_t>(number_or(run, "time_points", 512.0));
    return cfg;
}

int cmd_sweep(Experiment& ex) {
    const json run = run_section(ex);
    const auto grid = resolve_dx_grid(run);
    const auto cfg = sweep_config(run, ex.m);
    const auto rseed = static_cast<std::uint64_t>(number_or(run, "randomize_seed", 101.0));
    const auto pair = analysis::sweep_pair(ex.m, grid, cfg, rseed);
    {
        std::ostringstream os;
        analysis::write_sweep_csv(os, pair.correlated);
        write_atomic(ex.out_dir / "sweep_correlated.csv", os.str());
    }
    {
        std::ostringstream os;
        analysis::write_sweep_csv(os, pair.randomized);
        write_atomic(ex.out_dir / "sweep_randomized.csv", os.str());
    }
    const auto borders = analysis::estimate_borders(pair.correlated, ex.m.meta);
    json jb{{"method", borders.method}, {"de_broglie", borders.de_broglie}};
    jb["dx_c"] = borders.dx_c ? json(*borders.dx_c) : json(nullptr);
    jb["dx_nu"] = borders.dx_nu ? json(*borders.dx_nu) : json(nullptr);
    write_atomic(ex.out_dir / "borders.json", jb.dump(2) + "\n");
    ex.manifest["artifacts"] =
        json::array({"sweep_correlated.csv", "sweep_randomized.csv", "borders.json"});
    ex.manifest["dx_grid"] = grid;
    ex.manifest["randomize_seed"] = rseed;
    ex.manifest["ref_window"] = json::array({cfg.ref_begin, cfg.ref_end});
    write_manifest(ex, "sweep");
    return 0;
}

int cmd_borders(Experiment& ex) {
    const json run = run_section(ex);
    const auto grid = resolve_dx_grid(run);
    const auto cfg = sweep_config(run, ex.m);
    const auto sw = analysis::sweep(ex.m, grid, cfg);
    const auto borders = analysis::estimate_borders(sw, ex.m.meta);
    json jb{{"method", borders.method},
            {"de_broglie", borders.de_broglie},
            {"analytic_k_dx_nu", analysis::analytic_kdx_nu(ex.m.meta.g)}};
    jb["dx_c"] = borders.dx_c ? json(*borders.dx_c) : json(nullptr);
    jb["dx_nu"] = borders.dx_nu ? json(*borders.dx_nu) : json(nullptr);
    write_atomic(ex.out_dir / "borders.json", jb.dump(2) + "\n");
    ex.manifest["artifacts"] = json::array({"borders.json"});
    ex.manifest["dx_grid"] = grid;
    write_manifest(ex, "borders");
    return 0;
}

int cmd_diagnostic(Experiment& ex) {
    const json run = run_section(ex);
    const double dx = require_number(run, "run", "dx");
    const auto realizations = static_cast<std::size_t>(number_or(run, "realizations", 50.0));
    const double bin_width = number_or(run, "bin_width", ex.m.meta.delta);
    const auto base_seed = static_cast<std::uint64_t>(number_or(run, "randomize_seed", 101.0));
    const auto prep = resolve_wavepacket(run, ex.m);
    const auto ldos_wpk = spectral::wavepacket_ldos(ex.m.levels, prep.amplitudes);
    std::vector<dynamics::SpectralAmplitudeSet> sets;
    spectral::LdosDistribution ldos_dx;
    {
        // ensemble-averaged LDOS of the randomized partners doubles as the
        // rho(omega; dx) prediction input; raw per-ref offsets are binned
        // once on the diagnostic grid to avoid re-binning bias
        std::map<long long, double> acc;
        const auto [rb, re] = resolve_refs(run, ex.m.dim());
        for (std::size_t r = 0; r < realizations; ++r) {
            model::ParametricModel partner = ex.m;
            partner.b = model::sign_randomize(ex.m.b, base_seed + r);
            const auto d = spectral::diagonalize(partner, dx);
            sets.push_back(dynamics::effective_ldos(partner, d, prep));
            for (std::size_t ref = rb; ref < re; ++ref) {
                const auto ldos = spectral::eigenstate_ldos(partner, d, ref);
                for (std::size_t i = 0; i < ldos.offsets.size(); ++i) {
                    acc[std::llround(ldos.offsets[i] / bin_width)] += ldos.weights[i];
                }
            }
        }
        double total = 0.0;
        for (const auto& [idx, w] : acc) total += w;
        ldos_dx.kind = spectral::LdosKind::averaged;
        for (const auto& [idx, w] : acc) {
            ldos_dx.offsets.push_back(static_cast<double>(idx) * bin_width);
            ldos_dx.weights.push_back(w / total);
        }
    }
    const auto diag = analysis::factorization_diagnostic(sets, ldos_wpk, ldos_dx, bin_width);
    std::ostringstream os;
    char buf[512];
    std::snprintf(buf, sizeof(buf), "# dx=%.17g realizations=%zu bin_width=%.17g degenerate=%d\n",
                  dx, realizations, bin_width, diag.degenerate_support ? 1 : 0);
    os << buf << "omega,mean_re,mean_im,se_re,se_im,observed,predicted,ratio,central\n";
    for (std::size_t i = 0; i < diag.bin_centers.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n",
                      diag.bin_centers[i], diag.mean_re[i], diag.mean_im[i], diag.se_re[i],
                      diag.se_im[i], diag.observed[i], diag.predicted[i], diag.ratio[i],
                      diag.central[i] ? 1 : 0);
        os << buf;
    }
    write_atomic(ex.out_dir / "diagnostic.csv", os.str());
    ex.manifest["artifacts"] = json::array({"diagnostic.csv"});
    ex.manifest["dx"] = dx;
    ex.manifest["realizations"] = realizations;
    ex.manifest["randomize_seed"] = base_seed;
    write_manifest(ex, "diagnostic");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"parametric-Hamiltonian fidelity/LDOS workbench"};
    app.require_subcommand(1);
    std::string config_path;
    const std::vector<std::string> commands = {"build",  "ldos",    "decay",
                                               "sweep",  "borders", "diagnostic"};
    for (const auto& name : commands) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON experiment config")->required();
    }
    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();
    try {
        Experiment ex = load_experiment(config_path);
        if (command == "build") return cmd_build(ex);
        if (command == "ldos") return cmd_ldos(ex);
        if (command == "decay") return cmd_decay(ex);
        if (command == "sweep") return cmd_sweep(ex);
        if (command == "borders") return cmd_borders(ex);
        if (command == "diagnostic") return cmd_diagnostic(ex);
        std::cerr << "error: unknown command\n";
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const model::IngestError& e) {
        std::cerr << "ingest error: " << e.what() << "\n";
        return 2;
    } catch (const model::ResourceLimitError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const spectral::NumericFailure& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
