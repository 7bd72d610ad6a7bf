#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qecho/model.hpp"
#include "qecho/model_io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

using namespace qecho;

namespace {

model::ParametricModel small_model(std::size_t n, double g = 0.0, std::uint64_t seed = 1) {
    auto levels = model::build_levels(n, 1.0);
    auto profile = model::build_bandprofile(1.0, g, 1.0, 1.0, 1.0, 1.0);
    auto b = model::sample_perturbation(levels, profile, model::DiagPolicy::gaussian, seed);
    return model::assemble(std::move(levels), std::move(b),
                           model::ModelMeta{1.0, 1.0, g, 1.0, 1.0});
}

}  // namespace

TEST_CASE("build_levels: picket fence") {
    const auto l = model::build_levels(3, 1.0);
    REQUIRE(l.energies.size() == 3);
    CHECK(l.energies[0] == 0.0);
    CHECK(l.energies[1] == 1.0);
    CHECK(l.energies[2] == 2.0);
}

TEST_CASE("build_levels: offset base") {
    const auto l = model::build_levels(2, 0.5, 10.0);
    CHECK(l.energies[0] == 10.0);
    CHECK(l.energies[1] == 10.5);
}

TEST_CASE("build_levels: jittered mean spacing") {
    const auto l = model::build_levels(1000, 1.0, 0.0, 0.3, 7);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < l.energies.size(); ++i) {
        acc += l.energies[i + 1] - l.energies[i];
    }
    const double mean = acc / static_cast<double>(l.energies.size() - 1);
    CHECK(mean == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("build_levels: rejects bad input") {
    CHECK_THROWS_AS(model::build_levels(1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(model::build_levels(10, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(model::build_levels(10, -1.0), std::invalid_argument);
}

TEST_CASE("bandprofile: g=0 is flat") {
    const auto p = model::build_bandprofile(2.0, 0.0, 1.0, 1.0, 3.0, 1.0);
    const double expect = 1.0 / (2.0 * std::numbers::pi) * 3.0 * 8.0;
    CHECK(p.variance(0.1) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(p.variance(17.0) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("bandprofile: g=1 follows 1/omega") {
    const auto p = model::build_bandprofile(1.0, 1.0, 1.0, 1.0, 1.0, 0.5);
    CHECK(p.variance(1.0) / p.variance(0.5) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("bandprofile: k scaling at g=0.5") {
    const auto p1 = model::build_bandprofile(1.0, 0.5, 1.0, 1.0, 1.0, 1.0);
    const auto p2 = model::build_bandprofile(2.0, 0.5, 1.0, 1.0, 1.0, 1.0);
    CHECK(p2.variance(2.0) / p1.variance(2.0) ==
          doctest::Approx(std::pow(2.0, 3.5)).epsilon(1e-12));
}

TEST_CASE("bandprofile: evenness and regularization") {
    const auto p = model::build_bandprofile(1.0, 1.0, 1.0, 1.0, 1.0, 0.25);
    CHECK(p.variance(-2.0) == p.variance(2.0));
    CHECK(p.variance(0.0) == p.variance(0.25));
    CHECK_THROWS_AS(model::build_bandprofile(1.0, 1.5, 1.0, 1.0, 1.0, 1.0),
                    std::invalid_argument);
}

TEST_CASE("sample_perturbation: exact symmetry") {
    const auto m = small_model(64);
    CHECK((m.b.entries - m.b.entries.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sample_perturbation: determinism") {
    const auto a = small_model(32, 0.0, 42);
    const auto b = small_model(32, 0.0, 42);
    CHECK((a.b.entries - b.b.entries).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sample_perturbation: banded empirical variance matches profile") {
    const auto levels = model::build_levels(1000, 1.0);
    const auto profile = model::build_bandprofile(2.0, 1.0, 1.0, 1.0, 1.0, 1.0);
    const auto b = model::sample_perturbation(levels, profile, model::DiagPolicy::zeros, 5);
    // band |E_n - E_m| in [3, 3.3): omega ~ 3
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < 1000; ++i) {
        for (std::size_t j = i + 1; j < 1000; ++j) {
            const double w = levels.energies[j] - levels.energies[i];
            if (w >= 3.0 && w < 3.3) {
                acc += b.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *
                       b.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                ++count;
            }
        }
    }
    REQUIRE(count >= 200);
    CHECK(acc / static_cast<double>(count) ==
          doctest::Approx(profile.variance(3.0)).epsilon(0.10));
}

TEST_CASE("sample_perturbation: dimension cap") {
    CHECK_THROWS_AS(model::build_levels(5000, 1.0), model::ResourceLimitError);
}

TEST_CASE("sign_randomize: magnitudes and diagonal preserved") {
    const auto m = small_model(48);
    const auto r = model::sign_randomize(m.b, 9);
    CHECK((r.entries.cwiseAbs() - m.b.entries.cwiseAbs()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((r.entries.diagonal() - m.b.entries.diagonal()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((r.entries - r.entries.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(r.provenance == model::Provenance::sign_randomized);
}

TEST_CASE("sign_randomize: second moment off the diagonal is invariant") {
    const auto m = small_model(64);
    const auto r = model::sign_randomize(m.b, 3);
    double s0 = 0.0;
    double s1 = 0.0;
    for (Eigen::Index i = 0; i < 64; ++i) {
        for (Eigen::Index j = 0; j < 64; ++j) {
            if (i == j) continue;
            s0 += m.b.entries(i, j) * m.b.entries(i, j);
            s1 += r.entries(i, j) * r.entries(i, j);
        }
    }
    CHECK(s1 == doctest::Approx(s0).epsilon(1e-12));
}

TEST_CASE("gaussian_cutoff: wide limit is identity") {
    const auto m = small_model(32);
    const auto c = model::gaussian_cutoff(m.b, 1e6 * 32);
    CHECK(((c.entries - m.b.entries).cwiseAbs().maxCoeff() /
           m.b.entries.cwiseAbs().maxCoeff()) < 1e-9);
}

TEST_CASE("gaussian_cutoff: entry at the bandwidth is scaled by e^{-1/2}") {
    const auto m = small_model(32);
    const double b0 = 5.0;
    const auto c = model::gaussian_cutoff(m.b, b0);
    CHECK(c.entries(0, 5) ==
          doctest::Approx(m.b.entries(0, 5) * std::exp(-0.5)).epsilon(1e-12));
    CHECK_THROWS_AS(model::gaussian_cutoff(m.b, 0.0), std::invalid_argument);
}

TEST_CASE("assemble: hamiltonian structure") {
    const auto m = small_model(16);
    const Eigen::MatrixXd h0 = m.hamiltonian(0.0);
    for (Eigen::Index i = 0; i < 16; ++i) {
        for (Eigen::Index j = 0; j < 16; ++j) {
            if (i == j) {
                CHECK(h0(i, i) == m.levels.energies[static_cast<std::size_t>(i)]);
            } else {
                CHECK(h0(i, j) == 0.0);
            }
        }
    }
    // dx = 2 and 1 are exact in binary; with a zero diagonal no rounding
    // enters and the difference is exactly B
    auto levels = model::build_levels(16, 1.0);
    auto profile = model::build_bandprofile(1.0, 0.0, 1.0, 1.0, 1.0, 1.0);
    auto b = model::sample_perturbation(levels, profile, model::DiagPolicy::zeros, 1);
    const auto mz = model::assemble(std::move(levels), std::move(b),
                                    model::ModelMeta{1.0, 1.0, 0.0, 1.0, 1.0});
    const Eigen::MatrixXd diff = mz.hamiltonian(2.0) - mz.hamiltonian(1.0);
    CHECK((diff - mz.b.entries).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("assemble: rejects bad meta") {
    auto levels = model::build_levels(4, 1.0);
    auto profile = model::build_bandprofile(1.0, 0.0, 1.0, 1.0, 1.0, 1.0);
    auto b = model::sample_perturbation(levels, profile, model::DiagPolicy::zeros, 1);
    CHECK_THROWS_AS(
        model::assemble(levels, b, model::ModelMeta{1.0, 1.0, 0.0, 1.0, -2.0}),
        std::invalid_argument);
    auto levels3 = model::build_levels(3, 1.0);
    CHECK_THROWS_AS(model::assemble(levels3, b, model::ModelMeta{}), std::invalid_argument);
}

TEST_CASE("model io: export/ingest round-trip is bitwise") {
    const auto m = small_model(24, 1.0, 11);
    const auto path = std::filesystem::temp_directory_path() / "qecho_rt_model.txt";
    model::export_model(path, m);
    const auto back = model::ingest_model(path);
    CHECK(back.warnings.empty());
    REQUIRE(back.model.dim() == m.dim());
    for (std::size_t i = 0; i < m.dim(); ++i) {
        CHECK(back.model.levels.energies[i] == m.levels.energies[i]);
    }
    CHECK((back.model.b.entries - m.b.entries).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.model.meta.gamma_cl == m.meta.gamma_cl);
    std::filesystem::remove(path);
    std::filesystem::remove(path.string() + ".meta.json");
}

TEST_CASE("model io: dimension mismatch is an ingest error") {
    const auto path = std::filesystem::temp_directory_path() / "qecho_bad_model.txt";
    {
        std::ofstream out(path);
        out << "# n=3 hbar=1 k=1 g=0 delta=1 gamma_cl=1\n";
        out << "E 0 0\nE 1 1\nE 2 2\n";
        out << "B 0 5 0.1\n";
    }
    CHECK_THROWS_AS((void)model::ingest_model(path), model::IngestError);
    std::filesystem::remove(path);
}

TEST_CASE("model io: tiny asymmetry accepted with warning") {
    const auto path = std::filesystem::temp_directory_path() / "qecho_asym_model.txt";
    {
        std::ofstream out(path);
        out << "# n=2 hbar=1 k=1 g=0 delta=1 gamma_cl=1\n";
        out << "E 0 0\nE 1 1\n";
        out << "B 0 1 0.5\n";
        out << "B 1 0 0.5000000000001\n";
    }
    const auto r = model::ingest_model(path);
    REQUIRE(r.warnings.size() == 1);
    CHECK(r.model.b.entries(0, 1) == r.model.b.entries(1, 0));
    CHECK(r.model.b.entries(0, 1) == doctest::Approx(0.50000000000005).epsilon(1e-12));
    std::filesystem::remove(path);
}
