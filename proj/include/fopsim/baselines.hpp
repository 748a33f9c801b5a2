#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fopsim/allocator.hpp"
#include "fopsim/net_model.hpp"
#include "fopsim/sdp.hpp"

namespace fopsim {

// K nearest binary vectors to a point in (0,1)^dim, nearest first (exact:
// best-first enumeration over flip subsets of the rounding).
std::vector<Eigen::VectorXi> knn_candidates(const Eigen::VectorXd& relaxed, int count);

// DROO-style order-preserving quantizer: candidate 1 is the 0.5 rounding,
// candidate v thresholds at the coordinate with the (v-1)-th smallest
// |a - 0.5|; preserves the coordinate ordering of `relaxed`.
std::vector<Eigen::VectorXi> order_preserving_candidates(const Eigen::VectorXd& relaxed,
                                                         int count);

// Adapters to the action-group shapes: per-user selections map to each
// user's argmax AP, mirroring the quantize-uplink mapping step.
UplinkActionGroups uplink_groups_from_candidates(const Eigen::MatrixXd& relaxed,
                                                 const std::vector<Eigen::VectorXi>& sel);
DownlinkActionGroups downlink_groups_from_candidates(const std::vector<Eigen::VectorXi>& sel);

// Greedy admission: uplink admits users by ascending required power until
// capacity or budget runs out; downlink admits by ascending single-user
// minimum power, re-solving the SDP per admission, stopping at the first
// infeasibility.
Eigen::MatrixXi greedy_uplink(const Eigen::MatrixXd& pathloss, const Eigen::MatrixXd& rayleigh,
                              const std::vector<UserState>& users, const RadioParams& radio,
                              int decode_capacity);

struct GreedyDownlink {
    Eigen::VectorXi serve;
    SdpSolution solution;  // solution for the admitted set
};

GreedyDownlink greedy_downlink(const ChannelRealization& channel,
                               const std::vector<ApConfig>& aps, const RadioParams& radio,
                               const SolveOptions& opts = {});

}  // namespace fopsim
