#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fopsim/config.hpp"
#include "fopsim/policy_net.hpp"
#include "fopsim/training.hpp"

namespace fopsim {

struct RunReport {
    SimConfig config;
    std::vector<EpochRecord> ul_epochs;
    std::vector<EpochRecord> dl_epochs;
    std::vector<SlotRecord> slots;
    Eigen::VectorXd nrmse_per_user;
    bool nrmse_normalized = true;
    FopSummary objective;   // over the simulated window
    int audit_violations = 0;
    double ul_plateau = 0.0;  // mean moving-average reward, last 500 epochs
    double dl_plateau = 0.0;
    std::optional<PolicyNet> ul_net;
    std::optional<PolicyNet> dl_net;
    double final_epsilon = 0.0;
};

TraceSet make_traces(const SimConfig& cfg, long min_slots);

// Pretraining (policies + ESNs) followed by the orchestration loop over
// cfg.slots; deterministic under a fixed seed.
RunReport run_experiment(const SimConfig& cfg);

// ESN-only pass over the traces: observe/retrain/predict, NRMSE per user.
struct PredictReport {
    Eigen::VectorXd nrmse_per_user;
    bool normalized = true;
    Eigen::MatrixXd predicted_x, predicted_y;  // NaN before the first horizon
    TraceSet traces;
};
PredictReport predict_experiment(const SimConfig& cfg);

// Paired comparison: all four algorithms on identical traces/channels.
std::vector<RunReport> compare_experiment(const SimConfig& base);

// Independent audit pass: recomputes every executed decision's constraint
// checks from the channel streams; returns the number of violations.
int audit_decisions(const SimConfig& cfg, const TraceSet& traces,
                    const std::vector<SlotDecision>& decisions);

}  // namespace fopsim
