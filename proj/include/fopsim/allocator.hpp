#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "fopsim/net_model.hpp"
#include "fopsim/policy_net.hpp"
#include "fopsim/sdp.hpp"

namespace fopsim {

// Candidate association actions produced by the quantizer: group 1 from the
// 0.5 rule, groups 2..V~ from the ascending reference thresholds (strict >).
struct UplinkActionGroups {
    std::vector<Eigen::MatrixXi> groups;  // each N x J, <=1 AP per user
    Eigen::VectorXd thresholds;           // b-bar, ascending
};

struct DownlinkActionGroups {
    std::vector<Eigen::VectorXi> groups;  // each length N
    Eigen::VectorXd thresholds;
};

// V~ = N groups from the relaxed N x J action: per-user maxima thresholded,
// selected users mapped to their argmax AP.
UplinkActionGroups quantize_uplink(const Eigen::MatrixXd& relaxed);

// Downlink analogue on the per-user serve probabilities; no AP argmax step
// (all APs cooperate).
DownlinkActionGroups quantize_downlink(const Eigen::VectorXd& relaxed);

// Closed-form minimum power meeting the SNR threshold, or 0 when the budget
// p~ - p^c cannot reach it (the association then fails decode).
Eigen::VectorXd uplink_power_closed_form(const Eigen::MatrixXi& assoc,
                                         const Eigen::MatrixXd& pathloss,
                                         const Eigen::MatrixXd& rayleigh,
                                         const std::vector<UserState>& users,
                                         const RadioParams& radio);

struct UplinkEval {
    Eigen::MatrixXi effective;  // decoded associations only
    Eigen::VectorXd powers;
    double reward = 0.0;
};

// Eq.-(33)-style reward of one candidate group: B^ul minus the per-user power
// penalty, counting only decoded associations. `circuit_in_penalty` keeps the
// circuit term in the penalty (default; see SimConfig.reward_circuit_power).
UplinkEval uplink_reward(const Eigen::MatrixXi& group, const Eigen::MatrixXd& pathloss,
                         const Eigen::MatrixXd& rayleigh,
                         const std::vector<UserState>& users, const RadioParams& radio,
                         bool circuit_in_penalty = true);

struct UplinkSelection {
    int group_index = -1;
    Eigen::MatrixXi raw_action;  // the quantized group as selected
    UplinkEval eval;
};

// Evaluates every candidate group and returns the argmax reward; ties break
// toward the lowest group index.
UplinkSelection select_uplink_action(const UplinkActionGroups& groups,
                                     const Eigen::MatrixXd& pathloss,
                                     const Eigen::MatrixXd& rayleigh,
                                     const std::vector<UserState>& users,
                                     const RadioParams& radio,
                                     bool circuit_in_penalty = true);

struct DownlinkEval {
    double reward = 0.0;  // -inf sentinel for discarded groups
    SdpStatus status = SdpStatus::NumericalFailure;
    SdpSolution solution;
};

// Eq.-(38) reward: feasible -> served fraction; infeasible -> -inf (group
// discarded). Solver failure is reported distinctly via `status`.
DownlinkEval downlink_reward(const Eigen::VectorXi& group, const ChannelRealization& channel,
                             const std::vector<ApConfig>& aps, const RadioParams& radio,
                             const SolveOptions& opts = {});

// ---- State featurization -------------------------------------------------
// State semantics follow the uplink/downlink state-space definitions; entries
// pass through fixed invertible maps (log-magnitude squash, phase/pi, counts
// and powers scaled by their caps) so the net sees O(1) inputs.

Eigen::VectorXd make_uplink_state(const Eigen::VectorXi& decoded_counts,
                                  const Eigen::MatrixXd& pathloss,
                                  const Eigen::VectorXd& powers, int decode_capacity,
                                  double power_budget);

Eigen::VectorXd make_downlink_state(const Eigen::VectorXi& served_counts,
                                    const std::vector<Eigen::VectorXcd>& channels,
                                    const std::vector<std::vector<int>>& interferers,
                                    const std::vector<Eigen::VectorXcd>& prev_beams,
                                    int n_users, int stack_dim);

inline int uplink_state_dim(int n, int j) { return j + n * j + n; }
inline int downlink_state_dim(int n, int j, int k) { return j + 4 * n * j * k + n * n; }

}  // namespace fopsim
