#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qecho/spectral.hpp"

#include <cmath>
#include <sstream>

using namespace qecho;

namespace {

model::ParametricModel make_model(std::size_t n, double g = 0.0, std::uint64_t seed = 1,
                                  model::DiagPolicy diag = model::DiagPolicy::gaussian) {
    auto levels = model::build_levels(n, 1.0);
    auto profile = model::build_bandprofile(1.0, g, 1.0, 1.0, 1.0, 1.0);
    auto b = model::sample_perturbation(levels, profile, diag, seed);
    return model::assemble(std::move(levels), std::move(b),
                           model::ModelMeta{1.0, 1.0, g, 1.0, 1.0});
}

// E=[0,1], B=[[0,1],[1,0]] two-level closed form at dx
model::ParametricModel two_level() {
    model::LevelSequence levels;
    levels.energies = {0.0, 1.0};
    levels.mean_spacing = 1.0;
    model::PerturbationMatrix b;
    b.entries = Eigen::MatrixXd::Zero(2, 2);
    b.entries(0, 1) = 1.0;
    b.entries(1, 0) = 1.0;
    return model::assemble(std::move(levels), std::move(b),
                           model::ModelMeta{1.0, 1.0, 0.0, 1.0, 1.0});
}

}  // namespace

TEST_CASE("diagonalize: dx = 0 returns the levels") {
    const auto m = make_model(16);
    const auto d = spectral::diagonalize(m, 0.0);
    for (std::size_t i = 0; i < 16; ++i) {
        CHECK(d.eigenvalues[static_cast<Eigen::Index>(i)] ==
              doctest::Approx(m.levels.energies[i]).epsilon(1e-14));
        CHECK(std::abs(d.transform(static_cast<Eigen::Index>(i),
                                   static_cast<Eigen::Index>(i))) ==
              doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("diagonalize: 2x2 closed form") {
    const auto m = two_level();
    const auto d = spectral::diagonalize(m, 0.5);
    CHECK(d.eigenvalues[0] == doctest::Approx(0.5 - std::sqrt(2.0) / 2.0).epsilon(1e-12));
    CHECK(d.eigenvalues[1] == doctest::Approx(0.5 + std::sqrt(2.0) / 2.0).epsilon(1e-12));
}

TEST_CASE("diagonalize: orthogonality and residual at n = 1000") {
    const auto m = make_model(1000);
    const double dx = 0.8;
    const auto d = spectral::diagonalize(m, dx);
    const Eigen::MatrixXd defect =
        d.transform.transpose() * d.transform - Eigen::MatrixXd::Identity(1000, 1000);
    CHECK(defect.cwiseAbs().maxCoeff() < 1e-10);
    const Eigen::MatrixXd h = m.hamiltonian(dx);
    const double hnorm = h.cwiseAbs().maxCoeff();
    const Eigen::MatrixXd residual =
        h * d.transform - d.transform * d.eigenvalues.asDiagonal().toDenseMatrix();
    CHECK(residual.cwiseAbs().maxCoeff() < 1e-9 * hnorm);
    // eigenvalues ascending
    for (Eigen::Index i = 1; i < 1000; ++i) {
        CHECK(d.eigenvalues[i] >= d.eigenvalues[i - 1]);
    }
}

TEST_CASE("eigenstate ldos: dx = 0 point mass") {
    const auto m = make_model(20);
    const auto d = spectral::diagonalize(m, 0.0);
    const auto ldos = spectral::eigenstate_ldos(m, d, 10);
    double wmax = 0.0;
    double at = 1.0;
    for (std::size_t i = 0; i < ldos.weights.size(); ++i) {
        if (ldos.weights[i] > wmax) {
            wmax = ldos.weights[i];
            at = ldos.offsets[i];
        }
    }
    CHECK(wmax == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(at) < 1e-10);
    CHECK(spectral::core_width(ldos).gamma == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(spectral::participation_ratio(ldos) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("eigenstate ldos: 2x2 closed-form weights") {
    // reference 0 of the two-level model at dx = 0.5:
    // tan(2 theta) = 2*0.5/(0-1) -> weights {0.8536, 0.1464}
    const auto m = two_level();
    // n = 2 has an empty edge guard band (floor(0.2) = 0)
    const auto d = spectral::diagonalize(m, 0.5);
    const auto ldos = spectral::eigenstate_ldos(m, d, 0);
    CHECK(ldos.weights[0] == doctest::Approx(0.853553390593).epsilon(1e-9));
    CHECK(ldos.weights[1] == doctest::Approx(0.146446609407).epsilon(1e-9));
    CHECK(spectral::participation_ratio(ldos) == doctest::Approx(4.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("ldos: weights sum to one in all modes") {
    const auto m = make_model(200);
    const auto d = spectral::diagonalize(m, 0.7);
    const auto e = spectral::eigenstate_ldos(m, d, 100);
    double s = 0.0;
    for (double w : e.weights) s += w;
    CHECK(std::abs(s - 1.0) < 1e-10);
    const auto avg = spectral::averaged_ldos(m, d, 80, 120);
    s = 0.0;
    for (double w : avg.weights) s += w;
    CHECK(std::abs(s - 1.0) < 1e-10);
    Eigen::VectorXcd a = Eigen::VectorXcd::Zero(200);
    for (int i = 90; i < 110; ++i) a[i] = 1.0 / std::sqrt(20.0);
    const auto wp = spectral::wavepacket_ldos(m.levels, a);
    s = 0.0;
    for (double w : wp.weights) s += w;
    CHECK(std::abs(s - 1.0) < 1e-10);
}

TEST_CASE("ldos: edge guard rejection") {
    const auto m = make_model(100);
    const auto d = spectral::diagonalize(m, 0.3);
    CHECK_THROWS_AS((void)spectral::eigenstate_ldos(m, d, 3), spectral::EdgeEffectError);
    CHECK_THROWS_AS((void)spectral::eigenstate_ldos(m, d, 95), spectral::EdgeEffectError);
    CHECK_THROWS_AS((void)spectral::averaged_ldos(m, d, 40, 45), std::invalid_argument);
}

TEST_CASE("core width: uniform 11-point distribution") {
    spectral::LdosDistribution dist;
    for (int w = -5; w <= 5; ++w) {
        dist.offsets.push_back(static_cast<double>(w));
        dist.weights.push_back(1.0 / 11.0);
    }
    const auto cw = spectral::core_width(dist);
    CHECK(!cw.degenerate);
    CHECK(std::abs(cw.gamma - 7.0) <= 1.0);   // within one bin
}

TEST_CASE("core width: single point is degenerate") {
    spectral::LdosDistribution dist;
    dist.offsets = {0.0};
    dist.weights = {1.0};
    const auto cw = spectral::core_width(dist);
    CHECK(cw.degenerate);
    CHECK(cw.gamma == 0.0);
}

TEST_CASE("core width: scales linearly with omega") {
    const auto m = make_model(300);
    const auto d = spectral::diagonalize(m, 1.2);
    auto ldos = spectral::eigenstate_ldos(m, d, 150);
    const double g1 = spectral::core_width(ldos).gamma;
    for (double& w : ldos.offsets) w *= 3.0;
    const double g3 = spectral::core_width(ldos).gamma;
    CHECK(g3 == doctest::Approx(3.0 * g1).epsilon(1e-12));
}

TEST_CASE("core width: Wigner window doubling of dx quadruples Gamma (g = 0)") {
    const auto m = make_model(1200, 0.0, 3, model::DiagPolicy::zeros);
    const double dx = 1.2;   // Gamma well above Delta, below the band edge
    const auto d1 = spectral::diagonalize(m, dx);
    const auto d2 = spectral::diagonalize(m, 2.0 * dx);
    const auto l1 = spectral::averaged_ldos(m, d1, 550, 650);
    const auto l2 = spectral::averaged_ldos(m, d2, 550, 650);
    const double ratio = spectral::core_width(l2).gamma / spectral::core_width(l1).gamma;
    CHECK(ratio == doctest::Approx(4.0).epsilon(0.20));
}

TEST_CASE("eigenstate ldos: exact second moment identity") {
    const auto m = make_model(400);
    const double dx = 0.9;
    const auto d = spectral::diagonalize(m, dx);
    const std::size_t ref = 200;
    const auto ldos = spectral::eigenstate_ldos(m, d, ref);
    double mean = 0.0;
    for (std::size_t i = 0; i < ldos.weights.size(); ++i) {
        mean += ldos.weights[i] * ldos.offsets[i];
    }
    double second = 0.0;
    for (std::size_t i = 0; i < ldos.weights.size(); ++i) {
        const double dw = ldos.offsets[i] - mean;
        second += ldos.weights[i] * dw * dw;
    }
    double expect = 0.0;
    for (std::size_t mcol = 0; mcol < 400; ++mcol) {
        if (mcol == ref) continue;
        const double v = m.b.entries(static_cast<Eigen::Index>(ref),
                                     static_cast<Eigen::Index>(mcol));
        expect += v * v;
    }
    expect *= dx * dx;
    CHECK(second == doctest::Approx(expect).epsilon(1e-8));
}

TEST_CASE("second moment: sign-randomization neutrality") {
    const auto m = make_model(300);
    auto partner = m;
    partner.b = model::sign_randomize(m.b, 77);
    const double dx = 0.6;
    auto second_moment = [&](const model::ParametricModel& mm) {
        const auto d = spectral::diagonalize(mm, dx);
        const auto ldos = spectral::eigenstate_ldos(mm, d, 150);
        double mean = 0.0;
        for (std::size_t i = 0; i < ldos.weights.size(); ++i) {
            mean += ldos.weights[i] * ldos.offsets[i];
        }
        double s = 0.0;
        for (std::size_t i = 0; i < ldos.weights.size(); ++i) {
            const double dw = ldos.offsets[i] - mean;
            s += ldos.weights[i] * dw * dw;
        }
        return s;
    };
    const double a = second_moment(m);
    const double b = second_moment(partner);
    CHECK(b == doctest::Approx(a).epsilon(1e-12));
}

TEST_CASE("participation ratio: uniform over 10 points") {
    spectral::LdosDistribution dist;
    for (int i = 0; i < 10; ++i) {
        dist.offsets.push_back(static_cast<double>(i));
        dist.weights.push_back(0.1);
    }
    CHECK(spectral::participation_ratio(dist) == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("ldos csv export carries metadata") {
    const auto m = make_model(50);
    const auto d = spectral::diagonalize(m, 0.4);
    const auto ldos = spectral::eigenstate_ldos(m, d, 25);
    std::ostringstream os;
    spectral::write_ldos_csv(os, ldos, 0.4);
    const std::string text = os.str();
    CHECK(text.find("# dx=0.4") != std::string::npos);
    CHECK(text.find("mode=eigenstate") != std::string::npos);
    CHECK(text.find("omega,weight") != std::string::npos);
}
