#pragma once

#include <functional>
#include <vector>

#include "fopsim/allocator.hpp"
#include "fopsim/config.hpp"
#include "fopsim/esn.hpp"
#include "fopsim/policy_net.hpp"
#include "fopsim/traces.hpp"

namespace fopsim {

struct EpochRecord {
    long epoch = 0;
    double reward = 0.0;      // logged reward (penalised when cancelled)
    double moving_avg = 0.0;  // mean of the last 50 logged rewards
    double loss = std::numeric_limits<double>::quiet_NaN();  // set on train epochs
    bool cancelled = false;
    bool trained = false;
};

using UplinkQuantizer = std::function<UplinkActionGroups(const Eigen::MatrixXd&)>;
using DownlinkQuantizer = std::function<DownlinkActionGroups(const Eigen::VectorXd&)>;

// Algorithm-specific quantizers; the training/orchestration loops are shared.
UplinkQuantizer make_uplink_quantizer(Algorithm a);
DownlinkQuantizer make_downlink_quantizer(Algorithm a);

// Positions and directions at one trace slot; a zero displacement keeps the
// previous direction (stationary-user rule).
void set_positions(NetworkScene& scene, const TraceSet& traces, long slot);

Eigen::MatrixXd compute_pathloss(const NetworkScene& scene);

struct TrainResult {
    std::vector<EpochRecord> records;
    double final_epsilon = 0.0;
};

// DRL pretraining loops over cfg.n_episodes x effective epochs; positions
// advance along the traces, channels are redrawn per epoch.
TrainResult train_uplink(const SimConfig& cfg, const TraceSet& traces, NetworkScene& scene,
                         PolicyNet& net, ReplayMemory& memory, const UplinkQuantizer& quant);

TrainResult train_downlink(const SimConfig& cfg, const TraceSet& traces, NetworkScene& scene,
                           PolicyNet& net, ReplayMemory& memory,
                           const DownlinkQuantizer& quant);

struct SlotRecord {
    long slot = 0;
    double b_ul = 0.0;
    double b_dl = 0.0;
    double ul_reward = 0.0;
    double dl_reward = 0.0;
    int decoded = 0;
    int served = 0;
    bool cancelled = false;
    bool decided = false;  // false for the cold-start slots without a decision
};

struct OrchestrationResult {
    std::vector<SlotDecision> decisions;
    std::vector<SlotRecord> slots;
    // Prediction log for the horizon slot of each decision (NaN where absent).
    Eigen::MatrixXd predicted_x, predicted_y;
    Eigen::VectorXd nrmse_per_user;
    bool nrmse_normalized = true;
};

// The per-slot loop: observe, retrain ESNs every T_pr slots, decide for slot
// t+M from predicted positions (frozen nets or greedy admission), execute the
// decision scheduled for slot t against the true channel.
OrchestrationResult orchestrate(const SimConfig& cfg, const TraceSet& traces,
                                NetworkScene& scene, const PolicyNet* ul_net,
                                const PolicyNet* dl_net,
                                std::vector<EsnPredictor>& predictors);

std::vector<EsnPredictor> make_predictors(const SimConfig& cfg);

}  // namespace fopsim
