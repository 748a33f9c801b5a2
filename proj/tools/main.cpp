#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "fopsim/baselines.hpp"
#include "fopsim/esn.hpp"
#include "fopsim/experiment.hpp"
#include "fopsim/report.hpp"
#include "fopsim/rng.hpp"
#include "fopsim/units.hpp"

using namespace fopsim;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "run";
    std::uint64_t seed = 0;
    int users = 0;
    long slots = -1;
    long realizations = -1;
    std::string algorithm;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON config file");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "override RNG seed");
    cmd->add_option("--users", args.users, "override user count N");
    cmd->add_option("--slots", args.slots, "override slot count T");
    cmd->add_option("--realizations", args.realizations, "override pretraining realizations");
    cmd->add_option("--algorithm", args.algorithm, "proposed|droo|knn|heuristic");
}

SimConfig resolve(const CommonArgs& args) {
    SimConfig cfg;
    if (!args.config_path.empty()) cfg = load_config(args.config_path);
    if (args.seed != 0) cfg.seed = args.seed;
    if (args.users > 0) {
        cfg.n_users = args.users;
        cfg.decode_capacity = 0;  // re-derive the (N, M~) pairing
    }
    if (args.slots >= 0) cfg.slots = args.slots;
    if (args.realizations > 0) cfg.pretrain_realizations = args.realizations;
    if (!args.algorithm.empty()) cfg.algorithm = algorithm_from_string(args.algorithm);
    cfg.validate();
    return cfg;
}

void print_row(const char* name, double expected, double actual) {
    const double err = expected == 0.0
                           ? std::abs(actual - expected)
                           : std::abs(actual - expected) / std::abs(expected);
    std::printf("%-44s %16.9g %16.9g %10.2e\n", name, expected, actual, err);
}

// Independent oracle evaluations next to the library results.
int run_oracle() {
    std::printf("%-44s %16s %16s %10s\n", "check", "oracle", "library", "rel.err");

    SimConfig cfg;
    RadioParams radio = cfg.radio_params();
    auto aps = cfg.ap_configs();
    UserState user;
    user.height = 1.8;
    user.hmd_circuit_power = dbm_to_watt(23.0);
    user.hmd_max_power = dbm_to_watt(27.0);

    {  // path gain at 20 m: plain scalar power evaluation
        ApConfig ap = aps[0];
        ap.position = Vec2(0.0, 0.0);
        ap.antenna_height = 5.5;
        user.position = Vec2(std::sqrt(20.0 * 20.0 - 3.7 * 3.7), 0.0);
        const double oracle = std::pow(20.0, -5.0);
        print_row("ul_pathloss(d=20m, alpha=5)", oracle, ul_pathloss(user, ap, radio));

        const double noise = radio.noise_psd * radio.ul_bandwidth / 16.0;
        const double snr_oracle = 1e-3 * 0.3 * oracle / noise;
        print_row("ul_snr(p=1mW, c=0.3, d=20m, N=16)", snr_oracle,
                  ul_snr(true, 1e-3, 0.3, ul_pathloss(user, ap, radio), radio, 16));
    }

    {  // tilt angle against a direct arccos evaluation
        ApConfig ap = aps[0];
        ap.position = Vec2(0.0, 0.0);
        radio.area_center = Vec2(250.0, 250.0);
        user.position = Vec2(200.0, 200.0);
        const double d = ap.antenna_height / std::tan(ap.downtilt);
        const double r = radio.area_center.norm();
        const Eigen::Vector3d cb(d * 250.0 / r, d * 250.0 / r, -ap.antenna_height);
        const Eigen::Vector3d cd(200.0, 200.0, user.height - ap.antenna_height);
        const double oracle = std::acos(cb.dot(cd) / (cb.norm() * cd.norm()));
        print_row("tilt_angle(ap@origin,user@200,200)", oracle, tilt_angle(user, ap, radio));
        radio = cfg.radio_params();
    }

    {  // Eq.-form uplink power vs the bisection oracle
        const int n = 16;
        std::vector<UserState> users(n, user);
        Eigen::MatrixXd pathloss = Eigen::MatrixXd::Constant(n, 3, std::pow(20.0, -5.0));
        pathloss(1, 0) = std::pow(100.0, -5.0);
        Eigen::MatrixXi assoc = Eigen::MatrixXi::Zero(n, 3);
        assoc(0, 0) = 1;
        assoc(1, 0) = 1;
        Eigen::MatrixXd rayleigh = Eigen::MatrixXd::Constant(n, 3, 0.3);
        Eigen::VectorXd closed =
            uplink_power_closed_form(assoc, pathloss, rayleigh, users, radio);
        Eigen::VectorXd oracle = lp_power_oracle(assoc, pathloss, rayleigh, users, radio);
        print_row("uplink power d=20m [W]", oracle(0), closed(0));
        print_row("uplink power d=100m (over budget -> 0)", oracle(1), closed(1));
    }

    {  // trace identity on random complex vectors
        std::mt19937_64 rng(7);
        std::normal_distribution<double> g(0.0, 1.0);
        double worst = 0.0;
        for (int it = 0; it < 1000; ++it) {
            Eigen::VectorXcd h(6), w(6);
            for (int i = 0; i < 6; ++i) {
                h(i) = std::complex<double>(g(rng), g(rng));
                w(i) = std::complex<double>(g(rng), g(rng));
            }
            const double direct = std::norm(h.dot(w));
            const double via_trace =
                ((h * h.adjoint()) * (w * w.adjoint())).trace().real();
            worst = std::max(worst, std::abs(direct - via_trace) / direct);
        }
        print_row("trace identity worst rel.err (1000 draws)", 0.0, worst);
    }

    {  // parallel ESN trainer vs the centralized ridge closed form
        std::mt19937_64 rng(11);
        std::normal_distribution<double> g(0.0, 1.0);
        TrainingWindow w;
        w.inputs = Eigen::MatrixXd::NullaryExpr(10, 6, [&] { return g(rng); });
        w.targets = Eigen::MatrixXd::NullaryExpr(6, 2, [&] { return g(rng); });
        TrainOptions opts;
        Readout readout = train(w, opts, rng);
        Eigen::MatrixXd ridge = ridge_readout(w.inputs, w.targets, opts.xi);
        print_row("ESN dual-vs-ridge rel. Frobenius error", 0.0,
                  (readout.weights - ridge).norm() / ridge.norm());
    }

    {  // policy gradients vs central finite differences
        std::mt19937_64 rng(13);
        PolicyNet net = init_xavier(4, 5, 4, 3, 0.1, rng);
        std::normal_distribution<double> g(0.0, 1.0);
        Eigen::MatrixXd xs = Eigen::MatrixXd::NullaryExpr(4, 3, [&] { return g(rng); });
        Eigen::MatrixXd as = Eigen::MatrixXd::NullaryExpr(3, 3, [&] {
            return g(rng) > 0.0 ? 1.0 : 0.0;
        });
        PolicyGradients grads = gradients(net, xs, as);
        const double h = 1e-6;
        double worst = 0.0;
        for (int r = 0; r < net.w2.rows(); ++r)
            for (int c = 0; c < net.w2.cols(); ++c) {
                PolicyNet plus = net, minus = net;
                plus.w2(r, c) += h;
                minus.w2(r, c) -= h;
                const double fd = (cross_entropy_loss(forward_batch(plus, xs), as) -
                                   cross_entropy_loss(forward_batch(minus, xs), as)) /
                                  (2.0 * h);
                worst = std::max(worst, std::abs(fd - grads.w2(r, c)) /
                                            std::max(1e-8, std::abs(fd)));
            }
        print_row("policy grad vs finite diff (w2 layer)", 0.0, worst);
    }

    {  // single-user SDP against the matched-filter closed form
        std::mt19937_64 rng(17);
        std::normal_distribution<double> g(0.0, 1.0);
        SdpInstance inst;
        inst.served = {0};
        inst.num_aps = 1;
        inst.num_elements = 2;
        inst.gamma_lin = std::pow(2.0, radio.dl_rate_threshold / radio.dl_bandwidth) - 1.0;
        inst.noise_w = radio.noise_psd * radio.dl_bandwidth;
        inst.power_caps = Eigen::VectorXd::Constant(1, aps[0].max_power - aps[0].circuit_power);
        Eigen::VectorXcd h(2);
        for (int i = 0; i < 2; ++i) h(i) = 1e3 * std::complex<double>(g(rng), g(rng));
        inst.channels = {h};
        inst.interferers = {{}};
        SdpSolution sol = solve(inst);
        const double oracle = inst.gamma_lin * inst.noise_w / h.squaredNorm();
        print_row("single-user SDP min power [W]", oracle, sol.objective);
    }

    {  // interferer sets from plain distance arithmetic
        std::vector<UserState> users(2);
        users[0].position = Vec2(0.0, 0.0);
        users[1].position = Vec2(30.0, 0.0);
        auto sets = interferers(users, radio);
        print_row("interferers at 30 m (mutual)", 1.0, sets[0].size());
        users[1].position = Vec2(60.0, 0.0);
        sets = interferers(users, radio);
        print_row("interferers at 60 m (none)", 0.0, sets[0].size());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CoMP mmWave VR network simulator and optimizer"};
    app.require_subcommand(1);

    CommonArgs args;
    auto* predict = app.add_subcommand("predict", "ESN-only trajectory NRMSE evaluation");
    add_common(predict, args);
    auto* train_cmd = app.add_subcommand("train", "policy pretraining, checkpoints out");
    add_common(train_cmd, args);
    auto* simulate = app.add_subcommand("simulate", "end-to-end predictive optimization run");
    add_common(simulate, args);
    auto* compare = app.add_subcommand("compare", "paired run of all four algorithms");
    add_common(compare, args);
    app.add_subcommand("oracle", "print the independent-oracle expected-value table");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("oracle")) return run_oracle();

        SimConfig cfg = resolve(args);
        namespace fs = std::filesystem;
        if (app.got_subcommand("predict")) {
            PredictReport rep = predict_experiment(cfg);
            fs::create_directories(args.out_dir);
            std::ofstream out(args.out_dir + "/nrmse.csv");
            out << "user,nrmse\n";
            for (int u = 0; u < rep.nrmse_per_user.size(); ++u) {
                char buf[64];
                std::snprintf(buf, sizeof(buf), "%d,%.9f\n", u, rep.nrmse_per_user(u));
                out << buf;
            }
            std::printf("mean NRMSE %.6f (max %.6f) over %d users%s\n",
                        rep.nrmse_per_user.mean(), rep.nrmse_per_user.maxCoeff(),
                        static_cast<int>(rep.nrmse_per_user.size()),
                        rep.normalized ? "" : " [unnormalized fallback]");
            return 0;
        }
        if (app.got_subcommand("train")) {
            SimConfig tcfg = cfg;
            tcfg.slots = 0;  // pretraining only
            RunReport rep = run_experiment(tcfg);
            write_report(args.out_dir, rep);
            std::printf("ul plateau %.4f, dl plateau %.4f -> %s\n", rep.ul_plateau,
                        rep.dl_plateau, args.out_dir.c_str());
            return 0;
        }
        if (app.got_subcommand("simulate")) {
            RunReport rep = run_experiment(cfg);
            write_report(args.out_dir, rep);
            std::printf("objective %.6f (fop %.4f), audit violations %d -> %s\n",
                        rep.objective.objective, rep.objective.fop, rep.audit_violations,
                        args.out_dir.c_str());
            return 0;
        }
        if (app.got_subcommand("compare")) {
            auto reports = compare_experiment(cfg);
            for (const auto& rep : reports)
                write_report(args.out_dir + "/" + to_string(rep.config.algorithm), rep);
            std::printf("%-10s %12s %10s %10s\n", "algorithm", "objective", "fop", "violations");
            for (const auto& rep : reports)
                std::printf("%-10s %12.6f %10.4f %10d\n",
                            to_string(rep.config.algorithm).c_str(),
                            rep.objective.objective, rep.objective.fop,
                            rep.audit_violations);
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
