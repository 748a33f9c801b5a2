#include "fopsim/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace fopsim {

namespace {

// Per-user maxima and argmax APs of the relaxed N x J action.
void user_maxima(const Eigen::MatrixXd& relaxed, Eigen::VectorXd& amax,
                 Eigen::VectorXi& argmax) {
    const auto n = relaxed.rows();
    amax.resize(n);
    argmax.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index j;
        amax(i) = relaxed.row(i).maxCoeff(&j);
        argmax(i) = static_cast<int>(j);
    }
}

Eigen::MatrixXi group_from_selection(const Eigen::VectorXd& amax,
                                     const Eigen::VectorXi& argmax, double threshold,
                                     int n_aps, bool half_rule) {
    Eigen::MatrixXi group = Eigen::MatrixXi::Zero(amax.size(), n_aps);
    for (Eigen::Index i = 0; i < amax.size(); ++i) {
        const bool on = half_rule ? amax(i) > 0.5 : amax(i) > threshold;
        if (on) group(i, argmax(i)) = 1;
    }
    return group;
}

}  // namespace

UplinkActionGroups quantize_uplink(const Eigen::MatrixXd& relaxed) {
    const int n = static_cast<int>(relaxed.rows());
    const int j = static_cast<int>(relaxed.cols());
    Eigen::VectorXd amax;
    Eigen::VectorXi argmax;
    user_maxima(relaxed, amax, argmax);

    UplinkActionGroups out;
    out.thresholds = amax;
    std::sort(out.thresholds.data(), out.thresholds.data() + n);

    out.groups.push_back(group_from_selection(amax, argmax, 0.0, j, /*half_rule=*/true));
    for (int v = 2; v <= n; ++v)
        out.groups.push_back(group_from_selection(amax, argmax, out.thresholds(v - 2), j,
                                                  /*half_rule=*/false));
    return out;
}

DownlinkActionGroups quantize_downlink(const Eigen::VectorXd& relaxed) {
    const int n = static_cast<int>(relaxed.size());
    DownlinkActionGroups out;
    out.thresholds = relaxed;
    std::sort(out.thresholds.data(), out.thresholds.data() + n);

    Eigen::VectorXi first(n);
    for (int i = 0; i < n; ++i) first(i) = relaxed(i) > 0.5 ? 1 : 0;
    out.groups.push_back(first);
    // Group v thresholds at the v-th ascending value; group N sits above the
    // maximum, keeping an (always feasible) empty candidate in the set.
    for (int v = 2; v <= n; ++v) {
        Eigen::VectorXi g(n);
        for (int i = 0; i < n; ++i) g(i) = relaxed(i) > out.thresholds(v - 1) ? 1 : 0;
        out.groups.push_back(g);
    }
    return out;
}

Eigen::VectorXd uplink_power_closed_form(const Eigen::MatrixXi& assoc,
                                         const Eigen::MatrixXd& pathloss,
                                         const Eigen::MatrixXd& rayleigh,
                                         const std::vector<UserState>& users,
                                         const RadioParams& radio) {
    const int n = static_cast<int>(users.size());
    Eigen::VectorXd powers = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
        if (assoc.row(i).sum() > 1)
            throw std::invalid_argument("uplink group assigns a user to multiple APs");
        double required = 0.0;
        for (int j = 0; j < assoc.cols(); ++j) {
            if (assoc(i, j) == 0) continue;
            required += radio.ul_snr_threshold * radio.noise_psd * radio.ul_bandwidth /
                        (n * rayleigh(i, j) * pathloss(i, j));
        }
        if (required > 0.0 && required <= users[i].power_budget()) powers(i) = required;
    }
    return powers;
}

UplinkEval uplink_reward(const Eigen::MatrixXi& group, const Eigen::MatrixXd& pathloss,
                         const Eigen::MatrixXd& rayleigh,
                         const std::vector<UserState>& users, const RadioParams& radio,
                         bool circuit_in_penalty) {
    const int n = static_cast<int>(users.size());
    UplinkEval eval;
    eval.powers = uplink_power_closed_form(group, pathloss, rayleigh, users, radio);
    eval.effective = Eigen::MatrixXi::Zero(group.rows(), group.cols());
    double decoded = 0.0;
    double penalty = 0.0;
    for (int i = 0; i < n; ++i) {
        if (group.row(i).sum() == 0 || eval.powers(i) <= 0.0) continue;
        eval.effective.row(i) = group.row(i);
        decoded += 1.0;
        const double circuit = circuit_in_penalty ? users[i].hmd_circuit_power : 0.0;
        penalty += (eval.powers(i) + circuit) / users[i].hmd_max_power;
    }
    eval.reward = decoded / n - penalty;
    return eval;
}

UplinkSelection select_uplink_action(const UplinkActionGroups& groups,
                                     const Eigen::MatrixXd& pathloss,
                                     const Eigen::MatrixXd& rayleigh,
                                     const std::vector<UserState>& users,
                                     const RadioParams& radio, bool circuit_in_penalty) {
    if (groups.groups.empty()) throw std::invalid_argument("no candidate groups");
    UplinkSelection best;
    for (int v = 0; v < static_cast<int>(groups.groups.size()); ++v) {
        UplinkEval eval = uplink_reward(groups.groups[v], pathloss, rayleigh, users, radio,
                                        circuit_in_penalty);
        if (best.group_index < 0 || eval.reward > best.eval.reward) {
            best.group_index = v;
            best.raw_action = groups.groups[v];
            best.eval = std::move(eval);
        }
    }
    return best;
}

DownlinkEval downlink_reward(const Eigen::VectorXi& group, const ChannelRealization& channel,
                             const std::vector<ApConfig>& aps, const RadioParams& radio,
                             const SolveOptions& opts) {
    std::vector<int> served;
    for (int i = 0; i < group.size(); ++i)
        if (group(i) == 1) served.push_back(i);
    DownlinkEval eval;
    SdpInstance inst = build_instance(served, channel, aps, radio);
    eval.solution = solve(inst, opts);
    eval.status = eval.solution.status;
    if (eval.status == SdpStatus::Feasible)
        eval.reward = static_cast<double>(served.size()) / group.size();
    else
        eval.reward = -std::numeric_limits<double>::infinity();
    return eval;
}

namespace {

// log10-magnitude squashed into [0,1]; fixed map shared by gains/channels.
double squash_gain(double linear) {
    const double db10 = std::log10(std::max(linear, 1e-30));
    return std::clamp((db10 + 30.0) / 40.0, 0.0, 1.0);
}

}  // namespace

Eigen::VectorXd make_uplink_state(const Eigen::VectorXi& decoded_counts,
                                  const Eigen::MatrixXd& pathloss,
                                  const Eigen::VectorXd& powers, int decode_capacity,
                                  double power_budget) {
    const int j = static_cast<int>(decoded_counts.size());
    const int n = static_cast<int>(pathloss.rows());
    Eigen::VectorXd s(uplink_state_dim(n, j));
    int at = 0;
    for (int a = 0; a < j; ++a) s(at++) = decoded_counts(a) / static_cast<double>(decode_capacity);
    for (int i = 0; i < n; ++i)
        for (int a = 0; a < j; ++a) s(at++) = squash_gain(pathloss(i, a));
    for (int i = 0; i < n; ++i) s(at++) = powers(i) / power_budget;
    return s;
}

Eigen::VectorXd make_downlink_state(const Eigen::VectorXi& served_counts,
                                    const std::vector<Eigen::VectorXcd>& channels,
                                    const std::vector<std::vector<int>>& interferers,
                                    const std::vector<Eigen::VectorXcd>& prev_beams,
                                    int n_users, int stack_dim) {
    const int j = static_cast<int>(served_counts.size());
    Eigen::VectorXd s(downlink_state_dim(n_users, j, stack_dim / j));
    int at = 0;
    for (int a = 0; a < j; ++a) s(at++) = served_counts(a) / static_cast<double>(n_users);
    auto put_complex = [&](const Eigen::VectorXcd& v) {
        for (int k = 0; k < stack_dim; ++k) {
            if (k < v.size()) {
                s(at++) = squash_gain(std::norm(v(k)));
                s(at++) = std::arg(v(k)) / M_PI;
            } else {
                s(at++) = 0.0;
                s(at++) = 0.0;
            }
        }
    };
    for (int i = 0; i < n_users; ++i) put_complex(channels[i]);
    for (int i = 0; i < n_users; ++i)
        for (int m = 0; m < n_users; ++m) {
            const bool hit = std::find(interferers[i].begin(), interferers[i].end(), m) !=
                             interferers[i].end();
            s(at++) = hit ? 1.0 : 0.0;
        }
    for (int i = 0; i < n_users; ++i)
        put_complex(i < static_cast<int>(prev_beams.size()) ? prev_beams[i]
                                                            : Eigen::VectorXcd());
    return s;
}

}  // namespace fopsim
