#include "qecho/model_io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace qecho::model {

namespace {

double parse_real(const std::string& tok, std::size_t line) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(tok, &used);
    } catch (const std::exception&) {
        throw IngestError("cannot parse number '" + tok + "'", line);
    }
    if (used != tok.size() || !std::isfinite(v)) {
        throw IngestError("cannot parse number '" + tok + "'", line);
    }
    return v;
}

std::string provenance_name(Provenance p) {
    switch (p) {
        case Provenance::synthetic: return "synthetic";
        case Provenance::cutoff: return "cutoff";
        case Provenance::sign_randomized: return "sign_randomized";
        case Provenance::ingested: return "ingested";
    }
    return "synthetic";
}

}  // namespace

IngestResult ingest_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IngestError("cannot open '" + path.string() + "'", 0);
    }
    std::string line;
    std::size_t lineno = 0;
    long n = -1;
    ModelMeta meta;
    bool have_header = false;
    std::vector<double> energies;
    std::vector<char> have_energy;
    Eigen::MatrixXd b;
    std::vector<char> have_entry;
    IngestResult out;
    bool asymmetric = false;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag)) continue;   // blank line
        if (tag == "#") {
            std::string kv;
            while (ss >> kv) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) {
                    throw IngestError("malformed header token '" + kv + "'", lineno);
                }
                const std::string key = kv.substr(0, eq);
                const std::string val = kv.substr(eq + 1);
                if (key == "n") {
                    n = static_cast<long>(parse_real(val, lineno));
                } else if (key == "hbar") {
                    meta.hbar = parse_real(val, lineno);
                } else if (key == "k") {
                    meta.k = parse_real(val, lineno);
                } else if (key == "g") {
                    meta.g = parse_real(val, lineno);
                } else if (key == "delta") {
                    meta.delta = parse_real(val, lineno);
                } else if (key == "gamma_cl") {
                    meta.gamma_cl = parse_real(val, lineno);
                } else {
                    throw IngestError("unknown header key '" + key + "'", lineno);
                }
            }
            if (n < 2) {
                throw IngestError("header requires n >= 2", lineno);
            }
            if (static_cast<std::size_t>(n) > kMaxDimension) {
                throw ResourceLimitError("ingest_model: dimension exceeds cap");
            }
            have_header = true;
            energies.assign(static_cast<std::size_t>(n), 0.0);
            have_energy.assign(static_cast<std::size_t>(n), 0);
            b = Eigen::MatrixXd::Zero(n, n);
            have_entry.assign(static_cast<std::size_t>(n * n), 0);
            continue;
        }
        if (!have_header) {
            throw IngestError("data before header line", lineno);
        }
        if (tag == "E") {
            long idx;
            std::string val;
            if (!(ss >> idx >> val)) {
                throw IngestError("malformed E line", lineno);
            }
            if (idx < 0 || idx >= n) {
                throw IngestError("level index out of range", lineno);
            }
            energies[static_cast<std::size_t>(idx)] = parse_real(val, lineno);
            have_energy[static_cast<std::size_t>(idx)] = 1;
        } else if (tag == "B") {
            long r;
            long c;
            std::string val;
            if (!(ss >> r >> c >> val)) {
                throw IngestError("malformed B line", lineno);
            }
            if (r < 0 || r >= n || c < 0 || c >= n) {
                throw IngestError("matrix index out of range", lineno);
            }
            b(r, c) = parse_real(val, lineno);
            have_entry[static_cast<std::size_t>(r * n + c)] = 1;
        } else {
            throw IngestError("unknown record tag '" + tag + "'", lineno);
        }
    }
    if (!have_header) {
        throw IngestError("missing header line", lineno);
    }
    for (long i = 0; i < n; ++i) {
        if (!have_energy[static_cast<std::size_t>(i)]) {
            throw IngestError("missing energy for level " + std::to_string(i), lineno);
        }
    }
    for (long i = 0; i + 1 < n; ++i) {
        if (energies[static_cast<std::size_t>(i + 1)] < energies[static_cast<std::size_t>(i)]) {
            throw IngestError("energies are not nondecreasing", lineno);
        }
    }
    // mirror single-sided entries; symmetrize genuine asymmetry
    for (long i = 0; i < n; ++i) {
        for (long j = i + 1; j < n; ++j) {
            const bool up = have_entry[static_cast<std::size_t>(i * n + j)] != 0;
            const bool lo = have_entry[static_cast<std::size_t>(j * n + i)] != 0;
            if (up && lo) {
                if (b(i, j) != b(j, i)) {
                    asymmetric = true;
                    const double s = 0.5 * (b(i, j) + b(j, i));
                    b(i, j) = s;
                    b(j, i) = s;
                }
            } else if (up) {
                b(j, i) = b(i, j);
            } else if (lo) {
                b(i, j) = b(j, i);
            }
        }
    }
    if (asymmetric) {
        out.warnings.push_back("asymmetric input symmetrized as (B + B^T)/2");
    }
    // central-half mean spacing must agree with the declared Delta
    {
        const long lo = n / 4;
        const long hi = n - n / 4;
        double acc = 0.0;
        long cnt = 0;
        for (long i = lo; i + 1 < hi; ++i) {
            acc += energies[static_cast<std::size_t>(i + 1)] - energies[static_cast<std::size_t>(i)];
            ++cnt;
        }
        if (cnt > 0) {
            const double mean = acc / static_cast<double>(cnt);
            if (std::abs(mean - meta.delta) > 0.1 * meta.delta) {
                throw IngestError("central-half mean spacing deviates from delta by more than 10%",
                                  lineno);
            }
        }
    }
    LevelSequence levels;
    levels.energies = std::move(energies);
    levels.mean_spacing = meta.delta;
    PerturbationMatrix pm;
    pm.entries = std::move(b);
    pm.provenance = Provenance::ingested;
    // sidecar, if present, restores seed and provenance
    const std::filesystem::path sidecar = path.string() + ".meta.json";
    if (std::filesystem::exists(sidecar)) {
        std::ifstream sin(sidecar);
        nlohmann::json j;
        try {
            sin >> j;
        } catch (const std::exception&) {
            throw IngestError("malformed sidecar '" + sidecar.string() + "'", 0);
        }
        if (j.contains("seed")) pm.seed = j["seed"].get<std::uint64_t>();
    }
    out.model = assemble(std::move(levels), std::move(pm), meta);
    return out;
}

void export_model(const std::filesystem::path& path, const ParametricModel& m) {
    std::ofstream outf(path);
    if (!outf) {
        throw std::runtime_error("export_model: cannot open '" + path.string() + "'");
    }
    const long n = static_cast<long>(m.dim());
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "# n=%ld hbar=%.17g k=%.17g g=%.17g delta=%.17g gamma_cl=%.17g\n",
                  n, m.meta.hbar, m.meta.k, m.meta.g, m.meta.delta, m.meta.gamma_cl);
    outf << buf;
    for (long i = 0; i < n; ++i) {
        std::snprintf(buf, sizeof(buf), "E %ld %.17g\n", i,
                      m.levels.energies[static_cast<std::size_t>(i)]);
        outf << buf;
    }
    for (long i = 0; i < n; ++i) {
        for (long j = i; j < n; ++j) {
            const double v = m.b.entries(i, j);
            if (v == 0.0) continue;
            std::snprintf(buf, sizeof(buf), "B %ld %ld %.17g\n", i, j, v);
            outf << buf;
        }
    }
    outf.close();
    if (!outf) {
        throw std::runtime_error("export_model: write failed for '" + path.string() + "'");
    }
    nlohmann::json j{
        {"n", n},
        {"hbar", m.meta.hbar},
        {"k", m.meta.k},
        {"g", m.meta.g},
        {"delta", m.meta.delta},
        {"gamma_cl", m.meta.gamma_cl},
        {"seed", m.b.seed},
        {"provenance", provenance_name(m.b.provenance)},
    };
    std::ofstream side(path.string() + ".meta.json");
    side << j.dump(2) << "\n";
}

}  // namespace qecho::model
