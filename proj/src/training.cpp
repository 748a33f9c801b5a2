#include "fopsim/training.hpp"

#include <algorithm>
#include <deque>

#include "fopsim/baselines.hpp"
#include "fopsim/rng.hpp"

namespace fopsim {

namespace {

constexpr int kMovingWindow = 50;

double window_mean(const std::deque<double>& w) {
    double s = 0.0;
    for (double v : w) s += v;
    return w.empty() ? 0.0 : s / w.size();
}

void push_window(std::deque<double>& w, double v) {
    w.push_back(v);
    if (static_cast<int>(w.size()) > kMovingWindow) w.pop_front();
}

Eigen::VectorXd flatten_rowmajor(const Eigen::MatrixXi& m) {
    Eigen::VectorXd v(m.size());
    int at = 0;
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) v(at++) = m(i, j);
    return v;
}

Eigen::MatrixXd reshape_rowmajor(const Eigen::VectorXd& v, int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    int at = 0;
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = v(at++);
    return m;
}

Eigen::VectorXi ap_loads(const Eigen::MatrixXi& assoc) {
    Eigen::VectorXi loads(assoc.cols());
    for (int j = 0; j < assoc.cols(); ++j) loads(j) = assoc.col(j).sum();
    return loads;
}

// Ranked downlink group selection: feasibility-screens every candidate,
// breaks count ties by the power-min objective, returns the first candidate
// whose full solve and beam recovery succeed.
struct DownlinkChoice {
    Eigen::VectorXi group;         // selected action (label for training)
    std::vector<int> served;
    double reward = 0.0;
    BeamformerSet beams;           // stacked per global user id
    bool ok = false;
};

DownlinkChoice choose_downlink(const DownlinkActionGroups& groups,
                               const ChannelRealization& channel,
                               const std::vector<ApConfig>& aps, const RadioParams& radio,
                               std::mt19937_64& recovery_rng) {
    const int n = channel.num_users();
    struct Scored {
        int index;
        int count;
    };
    std::vector<Scored> feasible;
    SolveOptions feas;
    feas.feasibility_only = true;
    for (int v = 0; v < static_cast<int>(groups.groups.size()); ++v) {
        std::vector<int> served;
        for (int i = 0; i < n; ++i)
            if (groups.groups[v](i) == 1) served.push_back(i);
        SdpInstance inst = build_instance(served, channel, aps, radio);
        if (solve(inst, feas).status == SdpStatus::Feasible)
            feasible.push_back({v, static_cast<int>(served.size())});
    }
    std::stable_sort(feasible.begin(), feasible.end(), [](const Scored& a, const Scored& b) {
        return a.count > b.count;  // stable: count ties keep lowest group index first
    });

    DownlinkChoice out;
    std::size_t at = 0;
    while (at < feasible.size()) {
        // Candidates tied on count: the fewest-power solution wins.
        std::size_t end = at + 1;
        while (end < feasible.size() && feasible[end].count == feasible[at].count) ++end;
        int best_v = -1;
        double best_power = 0.0;
        SdpSolution best_sol;
        for (std::size_t t = at; t < end; ++t) {
            const int v = feasible[t].index;
            std::vector<int> served;
            for (int i = 0; i < n; ++i)
                if (groups.groups[v](i) == 1) served.push_back(i);
            SdpInstance inst = build_instance(served, channel, aps, radio);
            SdpSolution sol = solve(inst);
            if (sol.status != SdpStatus::Feasible) continue;
            if (best_v < 0 || sol.objective < best_power) {
                best_v = v;
                best_power = sol.objective;
                best_sol = std::move(sol);
            }
        }
        if (best_v >= 0) {
            std::vector<int> served;
            for (int i = 0; i < n; ++i)
                if (groups.groups[best_v](i) == 1) served.push_back(i);
            SdpInstance inst = build_instance(served, channel, aps, radio);
            RecoveredBeams rec = recover_beamformers(inst, best_sol, {}, recovery_rng);
            if (rec.ok || served.empty()) {
                out.group = groups.groups[best_v];
                out.served = served;
                out.reward = static_cast<double>(served.size()) / n;
                out.beams.stacked.assign(n, Eigen::VectorXcd());
                out.beams.gram.assign(n, Eigen::MatrixXcd());
                for (std::size_t s = 0; s < served.size(); ++s) {
                    out.beams.stacked[served[s]] = rec.beams[s];
                    out.beams.gram[served[s]] = best_sol.gram[s];
                }
                out.ok = true;
                return out;
            }
        }
        at = end;  // recovery/solve failed for the whole tie class; next count
    }
    // No candidate survived (cannot happen while the empty group is present).
    out.group = Eigen::VectorXi::Zero(n);
    out.beams.stacked.assign(n, Eigen::VectorXcd());
    out.ok = true;
    return out;
}

}  // namespace

UplinkQuantizer make_uplink_quantizer(Algorithm a) {
    switch (a) {
        case Algorithm::Proposed:
            return [](const Eigen::MatrixXd& relaxed) { return quantize_uplink(relaxed); };
        case Algorithm::Droo:
            return [](const Eigen::MatrixXd& relaxed) {
                const Eigen::VectorXd amax = relaxed.rowwise().maxCoeff();
                return uplink_groups_from_candidates(
                    relaxed, order_preserving_candidates(amax, static_cast<int>(amax.size())));
            };
        case Algorithm::Knn:
            return [](const Eigen::MatrixXd& relaxed) {
                const Eigen::VectorXd amax = relaxed.rowwise().maxCoeff();
                return uplink_groups_from_candidates(
                    relaxed, knn_candidates(amax, static_cast<int>(amax.size())));
            };
        case Algorithm::Heuristic:
            break;
    }
    throw std::invalid_argument("heuristic has no quantizer");
}

DownlinkQuantizer make_downlink_quantizer(Algorithm a) {
    switch (a) {
        case Algorithm::Proposed:
            return [](const Eigen::VectorXd& relaxed) { return quantize_downlink(relaxed); };
        case Algorithm::Droo:
            return [](const Eigen::VectorXd& relaxed) {
                return downlink_groups_from_candidates(
                    order_preserving_candidates(relaxed, static_cast<int>(relaxed.size())));
            };
        case Algorithm::Knn:
            return [](const Eigen::VectorXd& relaxed) {
                return downlink_groups_from_candidates(
                    knn_candidates(relaxed, static_cast<int>(relaxed.size())));
            };
        case Algorithm::Heuristic:
            break;
    }
    throw std::invalid_argument("heuristic has no quantizer");
}

void set_positions(NetworkScene& scene, const TraceSet& traces, long slot) {
    const long s = slot % traces.slots();
    for (int u = 0; u < scene.num_users(); ++u) {
        scene.users[u].position = traces.position(s, u);
        const Eigen::Vector2d dir = traces.direction(s, u);
        if (dir.norm() > 0.0)
            scene.users[u].direction = dir;
        else if (scene.users[u].direction.norm() == 0.0)
            scene.users[u].direction = traces.position(s, u);  // slot-0 rule
    }
}

Eigen::MatrixXd compute_pathloss(const NetworkScene& scene) {
    Eigen::MatrixXd h(scene.num_users(), scene.num_aps());
    for (int i = 0; i < scene.num_users(); ++i)
        for (int j = 0; j < scene.num_aps(); ++j)
            h(i, j) = ul_pathloss(scene.users[i], scene.aps[j], scene.radio);
    return h;
}

TrainResult train_uplink(const SimConfig& cfg, const TraceSet& traces, NetworkScene& scene,
                         PolicyNet& net, ReplayMemory& memory,
                         const UplinkQuantizer& quant) {
    const int n = cfg.n_users;
    const int j = cfg.n_aps;
    const int cap = cfg.effective_decode_capacity();
    const double budget = scene.users.front().power_budget();
    const long epochs = cfg.effective_epochs();
    ExplorationSchedule sched{cfg.epsilon_initial, cfg.epsilon_floor, cfg.epsilon_decay,
                              cfg.noise_var};

    TrainResult out;
    std::deque<double> window;
    auto replay_rng = make_rng(cfg.seed, streams::replay, 0);
    double prev_reward = 1.0;  // r_0 = 1
    long global = 0;
    for (int epi = 0; epi < cfg.n_episodes; ++epi) {
        auto env_rng = make_rng(cfg.seed, streams::pretrain_channel, epi);
        std::uniform_real_distribution<double> pinit(0.0, budget);
        Eigen::VectorXd powers(n);
        for (int i = 0; i < n; ++i) powers(i) = pinit(env_rng);
        Eigen::VectorXi decoded = Eigen::VectorXi::Zero(j);

        for (long epoch = 0; epoch < epochs; ++epoch, ++global) {
            set_positions(scene, traces, global);
            const Eigen::MatrixXd pathloss = compute_pathloss(scene);
            const Eigen::VectorXd state =
                make_uplink_state(decoded, pathloss, powers, cap, budget);

            auto noise_rng = make_rng(cfg.seed, streams::policy_noise, 2 * global);
            const Eigen::VectorXd relaxed = explore(
                forward(net, state), sched.epsilon(global), cfg.noise_var, noise_rng);
            UplinkActionGroups groups = quant(reshape_rowmajor(relaxed, n, j));
            UplinkSelection sel =
                select_uplink_action(groups, pathloss, scene.radio.rayleigh_gain,
                                     scene.users, scene.radio, cfg.reward_circuit_power);

            EpochRecord rec;
            rec.epoch = global;
            const Eigen::VectorXi loads = ap_loads(sel.eval.effective);
            Eigen::VectorXd next_state;
            if ((loads.array() > cap).any()) {
                rec.cancelled = true;
                rec.reward = sel.eval.reward - cfg.penalty_weight * std::abs(prev_reward);
                next_state = state;  // cancelled transitions keep the state
            } else {
                rec.reward = sel.eval.reward;
                decoded = loads;
                powers = sel.eval.powers;
                set_positions(scene, traces, global + 1);
                next_state = make_uplink_state(decoded, compute_pathloss(scene), powers,
                                               cap, budget);
            }
            memory.push({state, flatten_rowmajor(sel.raw_action), next_state});
            prev_reward = rec.reward;
            push_window(window, rec.reward);
            rec.moving_avg = window_mean(window);

            if (memory.can_sample(cfg.batch_size) && (global + 1) % cfg.train_interval == 0) {
                auto batch = memory.sample(cfg.batch_size, replay_rng);
                Eigen::MatrixXd xs(net.input_dim, cfg.batch_size);
                Eigen::MatrixXd as(net.output_dim, cfg.batch_size);
                for (int b = 0; b < cfg.batch_size; ++b) {
                    xs.col(b) = batch[b]->state;
                    as.col(b) = batch[b]->action;
                }
                rec.loss = adam_step(net, xs, as);
                rec.trained = true;
            }
            out.records.push_back(rec);
        }
    }
    out.final_epsilon = sched.epsilon(global);
    return out;
}

TrainResult train_downlink(const SimConfig& cfg, const TraceSet& traces, NetworkScene& scene,
                           PolicyNet& net, ReplayMemory& memory,
                           const DownlinkQuantizer& quant) {
    const int n = cfg.n_users;
    const int j = cfg.n_aps;
    const int jk = j * cfg.n_elements;
    const long epochs = cfg.effective_epochs();
    const auto aps = scene.aps;
    ExplorationSchedule sched{cfg.epsilon_initial, cfg.epsilon_floor, cfg.epsilon_decay,
                              cfg.noise_var};

    TrainResult out;
    std::deque<double> window;
    auto replay_rng = make_rng(cfg.seed, streams::replay, 1);
    long global = 0;
    for (int epi = 0; epi < cfg.n_episodes; ++epi) {
        Eigen::VectorXi served_counts = Eigen::VectorXi::Zero(j);
        std::vector<Eigen::VectorXcd> prev_beams(n);  // zeros at episode start

        // One channel per epoch; the next epoch's draw also forms s_{t+1}.
        auto draw_channel = [&](long epoch) {
            set_positions(scene, traces, epoch);
            auto rng = make_rng(cfg.seed, streams::pretrain_channel, 1000000 + epoch);
            return make_channel(scene, rng);
        };
        ChannelRealization channel = draw_channel(global);
        for (long epoch = 0; epoch < epochs; ++epoch, ++global) {
            const Eigen::VectorXd state =
                make_downlink_state(served_counts, channel.dl_channel, channel.interferers,
                                    prev_beams, n, jk);
            auto noise_rng = make_rng(cfg.seed, streams::policy_noise, 2 * global + 1);
            const Eigen::VectorXd relaxed = explore(
                forward(net, state), sched.epsilon(global), cfg.noise_var, noise_rng);
            DownlinkActionGroups groups = quant(relaxed);
            auto recovery_rng = make_rng(cfg.seed, streams::sdp, global);
            DownlinkChoice choice =
                choose_downlink(groups, channel, aps, scene.radio, recovery_rng);

            EpochRecord rec;
            rec.epoch = global;
            rec.reward = choice.reward;
            served_counts.setConstant(static_cast<int>(choice.served.size()));
            prev_beams.assign(n, Eigen::VectorXcd());
            for (int i : choice.served) prev_beams[i] = choice.beams.stacked[i];

            ChannelRealization next_channel = draw_channel(global + 1);
            const Eigen::VectorXd next_state =
                make_downlink_state(served_counts, next_channel.dl_channel,
                                    next_channel.interferers, prev_beams, n, jk);
            memory.push({state, choice.group.cast<double>(), next_state});
            channel = std::move(next_channel);

            push_window(window, rec.reward);
            rec.moving_avg = window_mean(window);
            if (memory.can_sample(cfg.batch_size) && (global + 1) % cfg.train_interval == 0) {
                auto batch = memory.sample(cfg.batch_size, replay_rng);
                Eigen::MatrixXd xs(net.input_dim, cfg.batch_size);
                Eigen::MatrixXd as(net.output_dim, cfg.batch_size);
                for (int b = 0; b < cfg.batch_size; ++b) {
                    xs.col(b) = batch[b]->state;
                    as.col(b) = batch[b]->action;
                }
                rec.loss = adam_step(net, xs, as);
                rec.trained = true;
            }
            out.records.push_back(rec);
        }
    }
    out.final_epsilon = sched.epsilon(global);
    return out;
}

std::vector<EsnPredictor> make_predictors(const SimConfig& cfg) {
    TrainOptions opts;
    opts.workers = cfg.n_aps;  // one shard per AP-fed slave VM
    opts.max_rounds = cfg.esn_max_rounds;
    opts.xi = cfg.esn_xi;
    opts.zeta = cfg.esn_zeta;
    opts.damping = cfg.esn_damping == "harmonic" ? DualDamping::Harmonic : DualDamping::Full;
    std::vector<EsnPredictor> predictors;
    predictors.reserve(cfg.n_users);
    for (int u = 0; u < cfg.n_users; ++u) {
        auto rng = make_rng(cfg.seed, streams::reservoir, u);
        Reservoir res = make_reservoir(cfg.esn_inputs, cfg.esn_reservoir, cfg.esn_outputs,
                                       rng, cfg.esn_spectral_rescale);
        predictors.emplace_back(std::move(res), cfg.esn_window, cfg.horizon, opts);
    }
    return predictors;
}

OrchestrationResult orchestrate(const SimConfig& cfg, const TraceSet& traces,
                                NetworkScene& scene, const PolicyNet* ul_net,
                                const PolicyNet* dl_net,
                                std::vector<EsnPredictor>& predictors) {
    const int n = cfg.n_users;
    const int j = cfg.n_aps;
    const int jk = j * cfg.n_elements;
    const int cap = cfg.effective_decode_capacity();
    const double budget = scene.users.front().power_budget();
    const long horizon = cfg.horizon;
    const long T = cfg.slots;
    const bool heuristic = cfg.algorithm == Algorithm::Heuristic;
    const auto aps = scene.aps;

    UplinkQuantizer ul_quant;
    DownlinkQuantizer dl_quant;
    if (!heuristic) {
        ul_quant = make_uplink_quantizer(cfg.algorithm);
        dl_quant = make_downlink_quantizer(cfg.algorithm);
    }

    struct Pending {
        Eigen::MatrixXi ul_intended;  // decodable-by-prediction associations
        Eigen::VectorXd powers;
        Eigen::VectorXi dl_intended;
        BeamformerSet beams;
        bool ul_cancelled = false;
    };
    std::vector<std::optional<Pending>> pending(T + horizon + 1);

    OrchestrationResult out;
    out.predicted_x = Eigen::MatrixXd::Constant(T, n, std::numeric_limits<double>::quiet_NaN());
    out.predicted_y = out.predicted_x;

    // Carried environment state (last executed decision).
    Eigen::VectorXi decoded = Eigen::VectorXi::Zero(j);
    Eigen::VectorXd powers = Eigen::VectorXd::Zero(n);
    Eigen::VectorXi served_counts = Eigen::VectorXi::Zero(j);
    std::vector<Eigen::VectorXcd> prev_beams(n);

    NetworkScene predicted_scene = scene;
    double prev_reward = 1.0;

    for (long t = 0; t < T; ++t) {
        set_positions(scene, traces, t);
        for (int u = 0; u < n; ++u) predictors[u].observe(scene.users[u].position);
        if ((t + 1) % cfg.esn_train_interval == 0)
            for (int u = 0; u < n; ++u)
                if (predictors[u].window_ready()) {
                    auto rng = make_rng(cfg.seed, streams::reservoir, 1000 + t * 100 + u);
                    predictors[u].retrain(rng);
                }

        // Decide for slot t + M from predicted positions.
        const long target = t + horizon;
        if (target < T) {
            if (horizon == 0) {
                predicted_scene = scene;  // degenerate config: use current truth
            } else {
                for (int u = 0; u < n; ++u) {
                    const Eigen::MatrixXd pred = predictors[u].predict(horizon);
                    const Eigen::Vector2d pos = pred.row(horizon - 1).transpose();
                    const Eigen::Vector2d before =
                        horizon >= 2 ? Eigen::Vector2d(pred.row(horizon - 2).transpose())
                                     : scene.users[u].position;
                    predicted_scene.users[u].position = pos;
                    const Eigen::Vector2d dir = pos - before;
                    if (dir.norm() > 0.0)
                        predicted_scene.users[u].direction = dir;
                    else if (predicted_scene.users[u].direction.norm() == 0.0)
                        predicted_scene.users[u].direction = pos;
                    out.predicted_x(target, u) = pos.x();
                    out.predicted_y(target, u) = pos.y();
                }
            }

            Pending p;
            const Eigen::MatrixXd pred_pathloss = compute_pathloss(predicted_scene);
            auto pred_rng = make_rng(cfg.seed, streams::channel, 1000000000L + target);
            ChannelRealization pred_channel = make_channel(predicted_scene, pred_rng);

            if (heuristic) {
                Eigen::MatrixXi assoc =
                    greedy_uplink(pred_pathloss, scene.radio.rayleigh_gain, scene.users,
                                  scene.radio, cap);
                UplinkEval eval =
                    uplink_reward(assoc, pred_pathloss, scene.radio.rayleigh_gain,
                                  scene.users, scene.radio, cfg.reward_circuit_power);
                p.ul_intended = eval.effective;
                p.powers = eval.powers;
                GreedyDownlink dl = greedy_downlink(pred_channel, aps, scene.radio);
                auto rec_rng = make_rng(cfg.seed, streams::sdp, 2000000 + target);
                std::vector<int> served;
                for (int i = 0; i < n; ++i)
                    if (dl.serve(i) == 1) served.push_back(i);
                SdpInstance inst = build_instance(served, pred_channel, aps, scene.radio);
                RecoveredBeams rec = recover_beamformers(inst, dl.solution, {}, rec_rng);
                p.dl_intended = dl.serve;
                p.beams.stacked.assign(n, Eigen::VectorXcd());
                if (rec.ok)
                    for (std::size_t s = 0; s < served.size(); ++s)
                        p.beams.stacked[served[s]] = rec.beams[s];
                else
                    p.dl_intended.setZero();
            } else {
                const Eigen::VectorXd ul_state =
                    make_uplink_state(decoded, pred_pathloss, powers, cap, budget);
                auto noise_rng = make_rng(cfg.seed, streams::policy_noise, 4000000 + 2 * t);
                const Eigen::VectorXd relaxed_ul =
                    explore(forward(*ul_net, ul_state), cfg.epsilon_floor, cfg.noise_var,
                            noise_rng);
                UplinkSelection sel = select_uplink_action(
                    ul_quant(reshape_rowmajor(relaxed_ul, n, j)), pred_pathloss,
                    scene.radio.rayleigh_gain, scene.users, scene.radio,
                    cfg.reward_circuit_power);
                const Eigen::VectorXi loads = ap_loads(sel.eval.effective);
                if ((loads.array() > cap).any()) {
                    p.ul_cancelled = true;  // Algorithm-3 cancel path
                    p.ul_intended = Eigen::MatrixXi::Zero(n, j);
                    p.powers = Eigen::VectorXd::Zero(n);
                } else {
                    p.ul_intended = sel.eval.effective;
                    p.powers = sel.eval.powers;
                }

                const Eigen::VectorXd dl_state =
                    make_downlink_state(served_counts, pred_channel.dl_channel,
                                        pred_channel.interferers, prev_beams, n, jk);
                auto noise_rng2 =
                    make_rng(cfg.seed, streams::policy_noise, 4000000 + 2 * t + 1);
                const Eigen::VectorXd relaxed_dl =
                    explore(forward(*dl_net, dl_state), cfg.epsilon_floor, cfg.noise_var,
                            noise_rng2);
                auto rec_rng = make_rng(cfg.seed, streams::sdp, 3000000 + target);
                DownlinkChoice choice = choose_downlink(dl_quant(relaxed_dl), pred_channel,
                                                        aps, scene.radio, rec_rng);
                p.dl_intended = Eigen::VectorXi::Zero(n);
                for (int i : choice.served) p.dl_intended(i) = 1;
                p.beams = choice.beams;
                if (p.beams.stacked.empty()) p.beams.stacked.assign(n, Eigen::VectorXcd());
            }
            pending[target] = std::move(p);
        }

        // Execute the decision scheduled for slot t against the true channel.
        SlotDecision dec;
        dec.slot = t;
        dec.ul_assoc = Eigen::MatrixXi::Zero(n, j);
        dec.dl_serve = Eigen::VectorXi::Zero(n);
        dec.dl_intended = Eigen::VectorXi::Zero(n);
        dec.hmd_power = Eigen::VectorXd::Zero(n);
        SlotRecord rec;
        rec.slot = t;
        if (pending[t].has_value()) {
            const Pending& p = *pending[t];
            auto ch_rng = make_rng(cfg.seed, streams::channel, t);
            ChannelRealization channel = make_channel(scene, ch_rng);
            rec.decided = true;
            rec.cancelled = p.ul_cancelled;
            dec.ul_cancelled = p.ul_cancelled;
            // Uplink: decode requires the realized SNR to clear the threshold.
            for (int i = 0; i < n; ++i)
                for (int a = 0; a < j; ++a) {
                    if (p.ul_intended(i, a) == 0 || p.powers(i) <= 0.0) continue;
                    const double snr =
                        ul_snr(true, p.powers(i), scene.radio.rayleigh_gain(i, a),
                               channel.ul_pathloss(i, a), scene.radio, n);
                    if (ul_decodes(snr, scene.radio)) dec.ul_assoc(i, a) = 1;
                }
            dec.hmd_power = p.powers;
            dec.dl_intended = p.dl_intended;
            dec.beams = p.beams;
            // Downlink: the serve indicator is the realized rate outcome.
            for (int i = 0; i < n; ++i) {
                if (p.dl_intended(i) == 0 || !p.beams.has(i)) continue;
                const double rate = dl_rate(i, p.dl_intended, channel, p.beams, scene.radio);
                if (rate >= scene.radio.dl_rate_threshold) dec.dl_serve(i) = 1;
            }
            // Rewards recomputed from the stored (executed) fields.
            double penalty = 0.0;
            int decoded_users = 0;
            for (int i = 0; i < n; ++i) {
                if (dec.ul_assoc.row(i).sum() == 0) continue;
                ++decoded_users;
                const double circuit =
                    cfg.reward_circuit_power ? scene.users[i].hmd_circuit_power : 0.0;
                penalty += (dec.hmd_power(i) + circuit) / scene.users[i].hmd_max_power;
            }
            dec.ul_reward = static_cast<double>(decoded_users) / n - penalty;
            if (p.ul_cancelled)
                dec.ul_reward = dec.ul_reward - cfg.penalty_weight * std::abs(prev_reward);
            dec.dl_reward = dec.dl_serve.cast<double>().sum() / n;
            prev_reward = dec.ul_reward;

            decoded = ap_loads(dec.ul_assoc);
            powers = dec.hmd_power;
            served_counts.setConstant(dec.dl_intended.sum());
            prev_beams.assign(n, Eigen::VectorXcd());
            for (int i = 0; i < n; ++i)
                if (dec.dl_intended(i) == 1 && dec.beams.has(i))
                    prev_beams[i] = dec.beams.stacked[i];

            rec.decoded = decoded_users;
            rec.served = dec.dl_serve.sum();
            rec.b_ul = static_cast<double>(dec.ul_assoc.sum()) / n;
            rec.b_dl = static_cast<double>(dec.dl_serve.sum()) / n;
            rec.ul_reward = dec.ul_reward;
            rec.dl_reward = dec.dl_reward;
        }
        out.decisions.push_back(std::move(dec));
        out.slots.push_back(rec);
    }

    // Horizon-slot prediction accuracy per user.
    out.nrmse_per_user = Eigen::VectorXd::Zero(n);
    std::vector<long> rows;
    for (long t = 0; t < T; ++t)
        if (!std::isnan(out.predicted_x(t, 0))) rows.push_back(t);
    if (!rows.empty()) {
        for (int u = 0; u < n; ++u) {
            Eigen::MatrixXd pred(rows.size(), 2), truth(rows.size(), 2);
            for (std::size_t r = 0; r < rows.size(); ++r) {
                pred(r, 0) = out.predicted_x(rows[r], u);
                pred(r, 1) = out.predicted_y(rows[r], u);
                const auto pos = traces.position(rows[r] % traces.slots(), u);
                truth(r, 0) = pos.x();
                truth(r, 1) = pos.y();
            }
            Nrmse res = nrmse(pred, truth);
            out.nrmse_per_user(u) = res.value;
            out.nrmse_normalized = out.nrmse_normalized && res.normalized;
        }
    }
    return out;
}

}  // namespace fopsim
