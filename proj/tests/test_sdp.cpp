#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "fopsim/allocator.hpp"
#include "fopsim/config.hpp"
#include "fopsim/sdp.hpp"
#include "fopsim/units.hpp"

using namespace fopsim;
using Cplx = std::complex<double>;

namespace {

Eigen::VectorXcd random_channel(int dim, std::mt19937_64& rng, double scale) {
    std::normal_distribution<double> g(0.0, M_SQRT1_2);
    Eigen::VectorXcd h(dim);
    for (int k = 0; k < dim; ++k) h(k) = scale * Cplx(g(rng), g(rng));
    return h;
}

// Reference-parameter instance with explicit channels and interference sets.
SdpInstance make_instance(const std::vector<Eigen::VectorXcd>& channels,
                          const std::vector<std::vector<int>>& interferers, int num_aps,
                          int num_elements) {
    SimConfig cfg;
    RadioParams radio = cfg.radio_params();
    SdpInstance inst;
    inst.num_aps = num_aps;
    inst.num_elements = num_elements;
    inst.gamma_lin = std::pow(2.0, radio.dl_rate_threshold / radio.dl_bandwidth) - 1.0;
    inst.noise_w = radio.noise_psd * radio.dl_bandwidth;
    inst.power_caps = Eigen::VectorXd::Constant(
        num_aps, dbm_to_watt(cfg.ap_max_power_dbm) - dbm_to_watt(cfg.ap_circuit_power_dbm));
    inst.channels = channels;
    inst.interferers = interferers;
    for (std::size_t i = 0; i < channels.size(); ++i) inst.served.push_back(int(i));
    return inst;
}

}  // namespace

TEST_CASE("instance construction") {
    SimConfig cfg;
    cfg.n_users = 4;
    NetworkScene scene = cfg.make_scene();
    for (int u = 0; u < 4; ++u) {
        scene.users[u].position = Vec2(100.0 + 40.0 * u, 220.0);
        scene.users[u].direction = Vec2(1.0, 0.0);
    }
    std::mt19937_64 rng(1);
    ChannelRealization ch = make_channel(scene, rng);

    SUBCASE("empty served set has no variables") {
        SdpInstance inst = build_instance({}, ch, scene.aps, scene.radio);
        CHECK(inst.served.empty());
        CHECK(inst.channels.empty());
        SdpSolution sol = solve(inst);
        CHECK(sol.status == SdpStatus::Feasible);
        CHECK(sol.objective == 0.0);
    }
    SUBCASE("J=3, K=2 gives 6x6 grams") {
        SdpInstance inst = build_instance({0, 2}, ch, scene.aps, scene.radio);
        CHECK(inst.dim() == 6);
        CHECK(inst.gram(0).rows() == 6);
        CHECK(inst.gram(0).cols() == 6);
        // Interference sets are remapped to local indices of served users.
        for (const auto& set : inst.interferers)
            for (int m : set) CHECK(m < 2);
    }
    SUBCASE("rank-1 gram reproduces the received power") {
        SdpInstance inst = build_instance({0, 1}, ch, scene.aps, scene.radio);
        std::mt19937_64 r2(2);
        Eigen::VectorXcd g = random_channel(6, r2, 1e-6);
        const double direct = received_power(inst.channels[0], g);
        const double via = (inst.gram(0) * (g * g.adjoint())).trace().real();
        CHECK(std::abs(direct - via) / direct < 1e-10);
    }
}

TEST_CASE("single-user solve matches the matched-filter closed form") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const double scale = std::pow(10.0, 2 + trial % 5);
        auto h = random_channel(2, rng, scale);
        SdpInstance inst = make_instance({h}, {{}}, 1, 2);
        SdpSolution sol = solve(inst);
        REQUIRE(sol.status == SdpStatus::Feasible);
        const double expect = inst.gamma_lin * inst.noise_w / h.squaredNorm();
        CHECK(std::abs(sol.objective - expect) / expect < 1e-6);
        CHECK(sol.max_residual <= 1e-6);
        CHECK(sol.min_eigenvalue >= -1e-8);
        // The optimal gram is the scaled channel outer product.
        const Eigen::MatrixXcd mf = expect * (h * h.adjoint()) / h.squaredNorm();
        CHECK((sol.gram[0] - mf).norm() / mf.norm() < 1e-5);
    }
}

TEST_CASE("tiny instance against a brute-force rank-1 grid") {
    // J=1, K=2 single user: parameterize unit beams by (theta, phase) and
    // scan power; the SDP optimum must not beat the grid by more than the
    // grid resolution and must not exceed it.
    std::mt19937_64 rng(5);
    auto h = random_channel(2, rng, 1e3);
    SdpInstance inst = make_instance({h}, {{}}, 1, 2);
    SdpSolution sol = solve(inst);
    REQUIRE(sol.status == SdpStatus::Feasible);

    double best = 1e300;
    const int steps = 400;
    for (int a = 0; a <= steps; ++a) {
        const double theta = M_PI / 2.0 * a / steps;
        for (int p = 0; p < steps; ++p) {
            const double phase = 2.0 * M_PI * p / steps;
            Eigen::VectorXcd dir(2);
            dir << std::cos(theta), std::polar(std::sin(theta), phase);
            const double gain = std::norm(h.dot(dir));
            if (gain <= 0.0) continue;
            const double power = inst.gamma_lin * inst.noise_w / gain;
            best = std::min(best, power);
        }
    }
    CHECK(sol.objective <= best * (1.0 + 1e-9));
    CHECK(std::abs(sol.objective - best) / best < 1e-3);
}

TEST_CASE("no-interference instances are rank-1 with recoverable beams") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 1 + trial % 4;
        std::vector<Eigen::VectorXcd> channels;
        for (int i = 0; i < n; ++i) channels.push_back(random_channel(6, rng, 1e4));
        SdpInstance inst = make_instance(channels, std::vector<std::vector<int>>(n), 3, 2);
        SdpSolution sol = solve(inst);
        REQUIRE(sol.status == SdpStatus::Feasible);
        for (int i = 0; i < n; ++i) {
            RankCheck rc = check_rank(sol.gram[i]);
            CHECK(rc.rank1);
            CHECK(rc.ratio <= 1e-6);
        }
        RecoveredBeams rec = recover_beamformers(inst, sol, {}, rng);
        REQUIRE(rec.ok);
        for (int i = 0; i < n; ++i) {
            const double recv = std::norm(inst.channels[i].dot(rec.beams[i]));
            CHECK(recv >= inst.gamma_lin * inst.noise_w * (1.0 - 1e-4));
        }
    }
}

TEST_CASE("interference coupling and infeasibility certificates") {
    std::mt19937_64 rng(9);
    SUBCASE("mutually interfering pair with gamma > 1 is infeasible") {
        // x >= gamma(noise + y) and y >= gamma(noise + x) cannot both hold
        // for gamma > 1: certified infeasible, not a timeout.
        auto h1 = random_channel(6, rng, 1e4);
        auto h2 = random_channel(6, rng, 1e4);
        SdpInstance inst = make_instance({h1, h2}, {{1}, {0}}, 3, 2);
        REQUIRE(inst.gamma_lin > 1.0);
        SdpSolution sol = solve(inst);
        CHECK(sol.status == SdpStatus::Infeasible);
        CHECK(sol.feasibility_gap > 1e-6);
    }
    SUBCASE("one-directional interference stays feasible and satisfied") {
        auto h1 = random_channel(6, rng, 1e4);
        auto h2 = random_channel(6, rng, 1e4);
        SdpInstance inst = make_instance({h1, h2}, {{1}, {}}, 3, 2);
        SdpSolution sol = solve(inst);
        REQUIRE(sol.status == SdpStatus::Feasible);
        CHECK(sol.max_residual <= 1e-6);
        const double recv0 = (inst.gram(0) * sol.gram[0]).trace().real();
        const double recv1 = (inst.gram(1) * sol.gram[1]).trace().real();
        CHECK(recv0 >= inst.gamma_lin * (inst.noise_w + recv1) * (1.0 - 1e-6));
    }
    SUBCASE("infeasible when the power caps cannot reach the threshold") {
        auto h = random_channel(6, rng, 1e4);
        SdpInstance inst = make_instance({h}, {{}}, 3, 2);
        inst.power_caps.setConstant(1e-30);  // matched filter needs far more
        SdpSolution sol = solve(inst);
        CHECK(sol.status == SdpStatus::Infeasible);
    }
}

TEST_CASE("optimality structure of the power-min surrogate") {
    std::mt19937_64 rng(11);
    SUBCASE("at least one SINR constraint per user is active at optimum") {
        for (int trial = 0; trial < 10; ++trial) {
            const int n = 2 + trial % 3;
            std::vector<Eigen::VectorXcd> channels;
            for (int i = 0; i < n; ++i) channels.push_back(random_channel(6, rng, 1e4));
            SdpInstance inst = make_instance(channels, std::vector<std::vector<int>>(n), 3, 2);
            SdpSolution sol = solve(inst);
            REQUIRE(sol.status == SdpStatus::Feasible);
            for (int i = 0; i < n; ++i) {
                const double recv = (inst.gram(i) * sol.gram[i]).trace().real();
                const double need = inst.gamma_lin * inst.noise_w;
                CHECK(recv / need == doctest::Approx(1.0).epsilon(1e-5));
            }
        }
    }
    SUBCASE("channel scaling covariance: h -> c h scales power by 1/c^2") {
        auto h = random_channel(6, rng, 1e4);
        SdpInstance a = make_instance({h}, {{}}, 3, 2);
        SdpInstance b = make_instance({10.0 * h}, {{}}, 3, 2);
        SdpSolution sa = solve(a);
        SdpSolution sb = solve(b);
        REQUIRE(sa.status == SdpStatus::Feasible);
        REQUIRE(sb.status == SdpStatus::Feasible);
        CHECK(sb.objective == doctest::Approx(sa.objective / 100.0).epsilon(1e-6));
    }
    SUBCASE("tight power caps become active instead of violated") {
        auto h = random_channel(6, rng, 1e1);  // weak channel: visible powers
        SdpInstance inst = make_instance({h}, {{}}, 3, 2);
        SdpSolution unconstrained = solve(inst);
        REQUIRE(unconstrained.status == SdpStatus::Feasible);
        // Cap one AP below its matched-filter share; the solver must reroute.
        double share0 = 0.0;
        for (int k = 0; k < 2; ++k) share0 += unconstrained.gram[0](k, k).real();
        inst.power_caps(0) = share0 / 4.0;
        SdpSolution capped = solve(inst);
        REQUIRE(capped.status == SdpStatus::Feasible);
        CHECK(capped.max_residual <= 1e-6);
        CHECK(capped.objective >= unconstrained.objective * (1.0 - 1e-9));
        double used0 = 0.0;
        for (int k = 0; k < 2; ++k) used0 += capped.gram[0](k, k).real();
        CHECK(used0 <= inst.power_caps(0) * (1.0 + 1e-6));
    }
}

TEST_CASE("rank checks and beam recovery") {
    std::mt19937_64 rng(13);
    auto h = random_channel(6, rng, 1.0);

    SUBCASE("outer product is rank one") {
        RankCheck rc = check_rank(h * h.adjoint());
        CHECK(rc.rank1);
        CHECK(rc.ratio <= 1e-12);
    }
    SUBCASE("identity is maximally non-rank-1") {
        RankCheck rc = check_rank(Eigen::MatrixXcd::Identity(4, 4));
        CHECK_FALSE(rc.rank1);
        CHECK(rc.ratio == doctest::Approx(1.0));
    }
    SUBCASE("principal-component recovery returns h up to a global phase") {
        Eigen::VectorXcd g = recover_beamformer(h * h.adjoint());
        CHECK(std::abs(std::abs(h.dot(g)) - h.squaredNorm()) / h.squaredNorm() < 1e-10);
        CHECK(g.norm() == doctest::Approx(h.norm()).epsilon(1e-10));
    }
    SUBCASE("recovered beam reproduces tr(HG) for rank-1 G") {
        Eigen::VectorXcd g0 = random_channel(6, rng, 0.5);
        Eigen::MatrixXcd gram = g0 * g0.adjoint();
        Eigen::VectorXcd g = recover_beamformer(gram);
        const double via_trace = ((h * h.adjoint()) * gram).trace().real();
        CHECK(std::abs(received_power(h, g) - via_trace) /
                  std::max(1e-30, via_trace) <
              1e-8);
    }
    SUBCASE("gaussian randomization fallback on a synthetic rank-2 gram") {
        auto hc = random_channel(4, rng, 1e4);
        SdpInstance inst = make_instance({hc}, {{}}, 2, 2);
        // Inflate a rank-2 gram well past the requirement so candidates pass.
        const double p = inst.gamma_lin * inst.noise_w / hc.squaredNorm();
        Eigen::VectorXcd other = random_channel(4, rng, 1.0).normalized() * hc.norm();
        SdpSolution sol;
        sol.status = SdpStatus::Feasible;
        sol.gram = {40.0 * p * (hc * hc.adjoint() + other * other.adjoint()) /
                    hc.squaredNorm()};
        REQUIRE_FALSE(check_rank(sol.gram[0]).rank1);
        RecoveredBeams rec = recover_beamformers(inst, sol, {}, rng);
        REQUIRE(rec.ok);
        CHECK(std::norm(hc.dot(rec.beams[0])) >=
              inst.gamma_lin * inst.noise_w * (1.0 - 1e-4));
    }
}

TEST_CASE("uplink LP oracle agrees with the closed form") {
    SimConfig cfg;
    RadioParams radio = cfg.radio_params();
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> dist_d(5.0, 200.0);
    std::uniform_int_distribution<int> pick(0, 2);
    const int n = 16;
    std::vector<UserState> users(n);
    for (auto& u : users) {
        u.hmd_circuit_power = dbm_to_watt(cfg.hmd_circuit_power_dbm);
        u.hmd_max_power = dbm_to_watt(cfg.hmd_max_power_dbm);
    }
    Eigen::MatrixXd rayleigh = Eigen::MatrixXd::Constant(n, 3, 0.3);

    for (int trial = 0; trial < 50; ++trial) {
        Eigen::MatrixXd pathloss(n, 3);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < 3; ++j) pathloss(i, j) = std::pow(dist_d(rng), -5.0);
        Eigen::MatrixXi assoc = Eigen::MatrixXi::Zero(n, 3);
        for (int i = 0; i < n; ++i)
            if (trial % 3 != 0 || i % 2 == 0) assoc(i, pick(rng)) = 1;
        Eigen::VectorXd closed =
            uplink_power_closed_form(assoc, pathloss, rayleigh, users, radio);
        Eigen::VectorXd oracle = lp_power_oracle(assoc, pathloss, rayleigh, users, radio);
        for (int i = 0; i < n; ++i) {
            if (closed(i) == 0.0)
                CHECK(oracle(i) == 0.0);
            else
                CHECK(std::abs(closed(i) - oracle(i)) / closed(i) < 1e-9);
        }
    }

    SUBCASE("exact budget boundary is feasible on both routes") {
        Eigen::MatrixXi assoc = Eigen::MatrixXi::Zero(n, 3);
        assoc(0, 0) = 1;
        // Choose the path gain so the required power equals the budget exactly.
        const double budget = users[0].power_budget();
        Eigen::MatrixXd pathloss = Eigen::MatrixXd::Constant(n, 3, 1e-9);
        pathloss(0, 0) = radio.ul_snr_threshold * radio.noise_psd * radio.ul_bandwidth /
                         (n * 0.3 * budget);
        Eigen::VectorXd closed =
            uplink_power_closed_form(assoc, pathloss, rayleigh, users, radio);
        Eigen::VectorXd oracle = lp_power_oracle(assoc, pathloss, rayleigh, users, radio);
        CHECK(closed(0) == doctest::Approx(budget).epsilon(1e-12));
        CHECK(oracle(0) == doctest::Approx(budget).epsilon(1e-9));
    }
}

TEST_CASE("fixture serialization") {
    std::mt19937_64 rng(19);
    auto h1 = random_channel(6, rng, 1e4);
    auto h2 = random_channel(6, rng, 1e4);
    SdpInstance inst = make_instance({h1, h2}, {{1}, {}}, 3, 2);
    const std::string text = sdp_instance_to_json(inst);
    SdpInstance back = sdp_instance_from_json(text);
    CHECK(back.served == inst.served);
    CHECK(back.gamma_lin == inst.gamma_lin);
    CHECK(back.noise_w == inst.noise_w);
    CHECK((back.power_caps - inst.power_caps).norm() == 0.0);
    CHECK(back.interferers == inst.interferers);
    for (int i = 0; i < 2; ++i) CHECK((back.channels[i] - inst.channels[i]).norm() == 0.0);

    SdpSolution sol = solve(back);
    const std::string sol_text = sdp_solution_to_json(sol);
    CHECK(sol_text.find("feasible") != std::string::npos);
    CHECK_THROWS(sdp_instance_from_json("{\"format\":\"bogus\"}"));
}
