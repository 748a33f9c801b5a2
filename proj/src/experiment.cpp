#include "fopsim/experiment.hpp"

#include <cmath>

#include "fopsim/rng.hpp"

namespace fopsim {

namespace {

double plateau(const std::vector<EpochRecord>& records, int tail = 500) {
    if (records.empty()) return 0.0;
    const int from = std::max<int>(0, static_cast<int>(records.size()) - tail);
    double acc = 0.0;
    for (std::size_t i = from; i < records.size(); ++i) acc += records[i].moving_avg;
    return acc / (records.size() - from);
}

}  // namespace

TraceSet make_traces(const SimConfig& cfg, long min_slots) {
    if (!cfg.trace_file.empty()) return ingest_traces(cfg.trace_file, cfg.area_size_m);
    SynthOptions opts;
    opts.area_size = cfg.area_size_m;
    opts.box_center = Eigen::Vector2d(cfg.area_size_m / 2.0, cfg.area_size_m / 2.0);
    opts.box_half_width = cfg.roam_half_width_m;
    opts.speed_min = cfg.speed_min;
    opts.speed_max = cfg.speed_max;
    opts.per_user_cells = cfg.trace_pattern == "grid";
    auto rng = make_rng(cfg.seed, streams::traces);
    return synth_traces(cfg.n_users, std::max<long>(min_slots, 1), rng, opts);
}

RunReport run_experiment(const SimConfig& cfg) {
    cfg.validate();
    RunReport report;
    report.config = cfg;

    const long pretrain_epochs = cfg.n_episodes * cfg.effective_epochs();
    const long trace_len = std::max<long>({cfg.slots + cfg.horizon + 1,
                                           pretrain_epochs + 1, 16});
    TraceSet traces = make_traces(cfg, trace_len);
    NetworkScene scene = cfg.make_scene();

    if (cfg.algorithm != Algorithm::Heuristic) {
        auto ul_rng = make_rng(cfg.seed, streams::policy_init, 0);
        auto dl_rng = make_rng(cfg.seed, streams::policy_init, 1);
        PolicyNet ul_net = init_xavier(uplink_state_dim(cfg.n_users, cfg.n_aps), cfg.hidden1,
                                       cfg.hidden2, cfg.n_users * cfg.n_aps, cfg.lr_ul,
                                       ul_rng);
        PolicyNet dl_net = init_xavier(
            downlink_state_dim(cfg.n_users, cfg.n_aps, cfg.n_elements), cfg.hidden1,
            cfg.hidden2, cfg.n_users, cfg.lr_dl, dl_rng);
        ReplayMemory ul_mem(cfg.replay_capacity);
        ReplayMemory dl_mem(cfg.replay_capacity);

        TrainResult ul = train_uplink(cfg, traces, scene, ul_net, ul_mem,
                                      make_uplink_quantizer(cfg.algorithm));
        TrainResult dl = train_downlink(cfg, traces, scene, dl_net, dl_mem,
                                        make_downlink_quantizer(cfg.algorithm));
        report.ul_epochs = std::move(ul.records);
        report.dl_epochs = std::move(dl.records);
        report.final_epsilon = ul.final_epsilon;
        report.ul_plateau = plateau(report.ul_epochs);
        report.dl_plateau = plateau(report.dl_epochs);
        report.ul_net = std::move(ul_net);
        report.dl_net = std::move(dl_net);
    }

    if (cfg.slots > 0) {
        auto predictors = make_predictors(cfg);
        OrchestrationResult orch = orchestrate(
            cfg, traces, scene, report.ul_net ? &*report.ul_net : nullptr,
            report.dl_net ? &*report.dl_net : nullptr, predictors);
        report.slots = std::move(orch.slots);
        report.nrmse_per_user = orch.nrmse_per_user;
        report.nrmse_normalized = orch.nrmse_normalized;
        if (!orch.decisions.empty())
            report.objective = fop_objective(orch.decisions, scene.users);
        report.audit_violations = audit_decisions(cfg, traces, orch.decisions);
    }
    return report;
}

PredictReport predict_experiment(const SimConfig& cfg) {
    cfg.validate();
    const long T = std::max<long>(cfg.slots, cfg.esn_window + cfg.horizon + 2);
    TraceSet traces = make_traces(cfg, T);
    auto predictors = make_predictors(cfg);
    PredictReport rep;
    rep.traces = traces;
    rep.predicted_x =
        Eigen::MatrixXd::Constant(T, cfg.n_users, std::numeric_limits<double>::quiet_NaN());
    rep.predicted_y = rep.predicted_x;

    for (long t = 0; t < T; ++t) {
        for (int u = 0; u < cfg.n_users; ++u)
            predictors[u].observe(traces.position(t % traces.slots(), u));
        if ((t + 1) % cfg.esn_train_interval == 0)
            for (int u = 0; u < cfg.n_users; ++u)
                if (predictors[u].window_ready()) {
                    auto rng = make_rng(cfg.seed, streams::reservoir, 1000 + t * 100 + u);
                    predictors[u].retrain(rng);
                }
        const long target = t + cfg.horizon;
        if (cfg.horizon > 0 && target < T) {
            for (int u = 0; u < cfg.n_users; ++u) {
                const Eigen::MatrixXd pred = predictors[u].predict(cfg.horizon);
                rep.predicted_x(target, u) = pred(cfg.horizon - 1, 0);
                rep.predicted_y(target, u) = pred(cfg.horizon - 1, 1);
            }
        }
    }

    rep.nrmse_per_user = Eigen::VectorXd::Zero(cfg.n_users);
    std::vector<long> rows;
    for (long t = 0; t < T; ++t)
        if (!std::isnan(rep.predicted_x(t, 0))) rows.push_back(t);
    for (int u = 0; u < cfg.n_users && !rows.empty(); ++u) {
        Eigen::MatrixXd pred(rows.size(), 2), truth(rows.size(), 2);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            pred(r, 0) = rep.predicted_x(rows[r], u);
            pred(r, 1) = rep.predicted_y(rows[r], u);
            truth(r, 0) = traces.xs(rows[r] % traces.slots(), u);
            truth(r, 1) = traces.ys(rows[r] % traces.slots(), u);
        }
        Nrmse res = nrmse(pred, truth);
        rep.nrmse_per_user(u) = res.value;
        rep.normalized = rep.normalized && res.normalized;
    }
    return rep;
}

std::vector<RunReport> compare_experiment(const SimConfig& base) {
    std::vector<RunReport> out;
    for (Algorithm a : {Algorithm::Proposed, Algorithm::Droo, Algorithm::Knn,
                        Algorithm::Heuristic}) {
        SimConfig cfg = base;
        cfg.algorithm = a;  // same seed: paired traces and channel streams
        out.push_back(run_experiment(cfg));
    }
    return out;
}

int audit_decisions(const SimConfig& cfg, const TraceSet& traces,
                    const std::vector<SlotDecision>& decisions) {
    NetworkScene scene = cfg.make_scene();
    const int n = cfg.n_users;
    const int cap = cfg.effective_decode_capacity();
    int violations = 0;
    for (const auto& dec : decisions) {
        set_positions(scene, traces, dec.slot);
        auto ch_rng = make_rng(cfg.seed, streams::channel, dec.slot);
        ChannelRealization channel = make_channel(scene, ch_rng);

        for (int i = 0; i < n; ++i) {
            if (dec.ul_assoc.row(i).sum() > 1) ++violations;  // (14b)
            for (int a = 0; a < cfg.n_aps; ++a) {
                if (dec.ul_assoc(i, a) == 0) continue;
                const double snr = ul_snr(true, dec.hmd_power(i),
                                          scene.radio.rayleigh_gain(i, a),
                                          channel.ul_pathloss(i, a), scene.radio, n);
                if (!ul_decodes(snr, scene.radio)) ++violations;  // (1)
            }
            UserState audit_user = scene.users[i];
            audit_user.hmd_tx_power = dec.hmd_power(i);
            if (!hmd_power_check(audit_user)) ++violations;  // (12)
        }
        for (int a = 0; a < cfg.n_aps; ++a) {
            if (dec.ul_assoc.col(a).sum() > cap) ++violations;  // (14c)
            if (!ap_power_check(dec.dl_intended, dec.beams, scene.aps[a], a))
                ++violations;  // (13)
        }
        for (int i = 0; i < n; ++i) {
            if (dec.dl_serve(i) == 0) continue;
            const double rate = dl_rate(i, dec.dl_intended, channel, dec.beams, scene.radio);
            if (rate < scene.radio.dl_rate_threshold) ++violations;  // (9) as enforced
        }
    }
    return violations;
}

}  // namespace fopsim
