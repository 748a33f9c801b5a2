#pragma once

#include <Eigen/Dense>
#include <random>
#include <string>
#include <vector>

#include "fopsim/net_model.hpp"

namespace fopsim {

// Relaxed downlink power-control problem for one candidate serve set.
// Channels are stored as the stacked rank-1 factors h_it (H_it = h h^H);
// Z_j selectors are implicit in (num_aps, num_elements).
struct SdpInstance {
    std::vector<int> served;                   // global user ids, ascending
    std::vector<Eigen::VectorXcd> channels;    // stacked h per served user (JK)
    std::vector<std::vector<int>> interferers; // local indices into `served`
    double gamma_lin = 0.0;   // 2^(gamma_th/W_dl) - 1
    double noise_w = 0.0;     // N0 * W_dl [W]
    Eigen::VectorXd power_caps;  // per AP: E~_j - E^c_j [W]
    int num_aps = 0;
    int num_elements = 0;

    int dim() const { return num_aps * num_elements; }
    Eigen::MatrixXcd gram(int local) const {  // H_it of one served user
        return channels[local] * channels[local].adjoint();
    }
};

SdpInstance build_instance(const std::vector<int>& served,
                           const ChannelRealization& channel,
                           const std::vector<ApConfig>& aps,
                           const RadioParams& radio);

enum class SdpStatus { Feasible, Infeasible, NumericalFailure };

struct SdpSolution {
    SdpStatus status = SdpStatus::NumericalFailure;
    std::vector<Eigen::MatrixXcd> gram;  // G_it per served user (JK x JK)
    double objective = 0.0;              // total transmit power [W]
    double max_residual = 0.0;           // worst constraint violation, relative
    double min_eigenvalue = 0.0;         // most negative eigenvalue across blocks
    double feasibility_gap = 0.0;        // phase-1 optimal violation tau*
    int iterations = 0;
};

struct SolveOptions {
    double tol = 1e-9;         // IPM residual/gap target
    double feas_tol = 1e-6;    // phase-1 tau* feasibility threshold
    int max_iterations = 100;
    bool feasibility_only = false;  // stop after phase 1
};

// Phase-1 feasibility check followed by total-power minimisation. Proven
// infeasibility (phase-1 optimum bounded away from zero by its dual) is
// reported distinctly from numerical failure; a timeout is never read as
// infeasible.
SdpSolution solve(const SdpInstance& instance, const SolveOptions& opts = {});

struct RankCheck {
    bool rank1 = false;
    double ratio = 0.0;  // lambda_2 / lambda_1, eigenvalues descending
};

RankCheck check_rank(const Eigen::MatrixXcd& gram, double tol = 1e-6);

// Principal-component beam sqrt(lambda_1) v_1; exact when gram is rank-1.
Eigen::VectorXcd recover_beamformer(const Eigen::MatrixXcd& gram);

struct RecoveryOptions {
    int candidates = 100;      // R Gaussian draws per non-rank-1 user
    double rank_tol = 1e-6;
    double sinr_slack = 1e-4;  // relative slack allowed on SINR at recovery
};

struct RecoveredBeams {
    bool ok = false;
    std::vector<Eigen::VectorXcd> beams;  // per served user (JK)
};

// Eigen-decomposition recovery with the Gaussian randomization/scale
// fallback for blocks that are not rank-1. Verifies SINR and AP power
// constraints on the recovered set.
RecoveredBeams recover_beamformers(const SdpInstance& instance, const SdpSolution& sol,
                                   const RecoveryOptions& opts, std::mt19937_64& rng);

// Independent validator for the uplink closed-form power: per assigned user,
// bisection on the SNR inequality (never reusing the closed-form algebra).
Eigen::VectorXd lp_power_oracle(const Eigen::MatrixXi& assoc,
                                const Eigen::MatrixXd& pathloss,
                                const Eigen::MatrixXd& rayleigh,
                                const std::vector<UserState>& users,
                                const RadioParams& radio);

// Regression-fixture dumps.
std::string sdp_instance_to_json(const SdpInstance& instance);
SdpInstance sdp_instance_from_json(const std::string& text);
std::string sdp_solution_to_json(const SdpSolution& sol);

}  // namespace fopsim
