#pragma once

#include <Eigen/Dense>
#include <deque>
#include <random>
#include <string>
#include <vector>

namespace fopsim {

// Fixed random reservoir; only the readout is trained.
struct Reservoir {
    int input_dim = 0;      // N_i
    int reservoir_dim = 0;  // N_r
    int output_dim = 0;     // N_o
    Eigen::MatrixXd w_in;   // N_r x N_i, entries drawn in (0,1)
    Eigen::MatrixXd w_rec;  // N_r x N_r, entries drawn in (0,1)
    Eigen::VectorXd state;  // s_it, entries in (-1,1) after any update
};

// `rescale_spectral` optionally normalises w_rec to the given spectral
// radius; off by default (the interval-(0,1) draw is kept as-is).
Reservoir make_reservoir(int input_dim, int reservoir_dim, int output_dim,
                         std::mt19937_64& rng, bool rescale_spectral = false,
                         double spectral_radius = 0.9);

// s <- tanh(W_in x + W_rec s_prev)
Eigen::VectorXd reservoir_step(const Reservoir& res, const Eigen::VectorXd& state,
                               const Eigen::VectorXd& input);

// Advances res.state in place.
void reservoir_advance(Reservoir& res, const Eigen::VectorXd& input);

struct Readout {
    Eigen::MatrixXd weights;        // (N_i+N_r) x N_o
    double regularization = 0.25;   // xi
    double strong_convexity = 1.0;  // zeta
    double smoothness = 1.0;        // mu (Assumption 2; unused at runtime)
    double kappa = 0.0;             // > 1/zeta; default J/zeta set by train()
    bool trained = false;
};

// y^ = W^T [x; s]
Eigen::VectorXd readout_predict(const Readout& readout, const Eigen::VectorXd& input,
                                const Eigen::VectorXd& state);

// Q newest-first columns of stacked [x; s] plus their targets.
struct TrainingWindow {
    Eigen::MatrixXd inputs;   // (N_i+N_r) x Q, column 0 newest
    Eigen::MatrixXd targets;  // Q x N_o, row m pairs with column m
    int horizon = 1;          // M
};

// Dual trainer state; shards partition the Q sample indices across workers.
struct DualState {
    Eigen::MatrixXd dual;    // A, Q x N_o
    Eigen::MatrixXd global;  // V(A) = (1/xi Q)(X A)^T, N_o x (N_i+N_r)
    std::vector<std::vector<int>> shards;  // Q_j per worker
};

enum class DualDamping {
    Full,      // theta_r = 1: safe-kappa aggregate step (default)
    Harmonic,  // theta_r = 1/(r+1)
};

struct TrainOptions {
    int workers = 3;           // J
    int max_rounds = 1000;     // r-bar_max
    double xi = 0.25;          // regularization
    double zeta = 1.0;         // strong convexity
    DualDamping damping = DualDamping::Full;
    double stop_tol = 1e-13;   // early exit when ||delta A|| stalls
    std::vector<std::vector<int>> shards;  // explicit assignment; empty = round-robin
};

// Per-shard closed-form ascent step (the q_j x q_j system on shard rows).
Eigen::MatrixXd local_dual_step(const Eigen::MatrixXd& x_shard,  // (N_i+N_r) x q_j
                                const Eigen::MatrixXd& y_shard,  // q_j x N_o
                                const Eigen::MatrixXd& a_shard,  // q_j x N_o
                                const Eigen::MatrixXd& global,   // V(A)
                                double kappa, double xi, int q_total);

// Applies one bulk-synchronous round: A and V move by the same step factor,
// which keeps V(A) = (1/xi Q)(X A)^T exact. Throws if a worker result is
// missing (round aborted; caller may retry the round).
void aggregate_round(DualState& state, const std::vector<Eigen::MatrixXd>& deltas,
                     const Eigen::MatrixXd& inputs, double xi, int round,
                     DualDamping damping);

// Dual objective D(A) of the regularized least-squares problem.
double dual_objective(const Eigen::MatrixXd& dual, const Eigen::MatrixXd& inputs,
                      const Eigen::MatrixXd& targets, double xi);

struct TrainDiagnostics {
    int rounds = 0;
    std::vector<double> dual_values;  // D(A^r) per round
};

// Parallel dual-decomposition training; returns the readout with
// W^T = grad r*(V(A)) = V(A)/2.
Readout train(const TrainingWindow& window, const TrainOptions& opts,
              std::mt19937_64& rng, TrainDiagnostics* diag = nullptr);

// Centralized ridge solution W = (X X^T + 2 xi Q I)^-1 X Y; the closed form
// the dual trainer must agree with.
Eigen::MatrixXd ridge_readout(const Eigen::MatrixXd& inputs,
                              const Eigen::MatrixXd& targets, double xi);

// Closed-loop rollout: feed each prediction back as the next input, advancing
// a copy of the reservoir state. Returns M rows of predictions.
Eigen::MatrixXd predict_horizon(const Reservoir& res, const Eigen::VectorXd& state,
                                const Readout& readout, const Eigen::VectorXd& latest_input,
                                int horizon);

struct Nrmse {
    double value = 0.0;
    bool normalized = true;  // false if a coordinate range was zero
};

// Per-coordinate RMSE divided by the true-value range, averaged across
// coordinates; falls back to the raw RMSE (flagged) on zero range.
Nrmse nrmse(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& truth);

// ---- Streaming per-user predictor ---------------------------------------

// Owns one user's reservoir, observation window and readout. Positions are
// pushed as they are observed; predictions fall back to a zero-order hold
// until Q input/target pairs exist.
class EsnPredictor {
  public:
    EsnPredictor() = default;
    EsnPredictor(Reservoir reservoir, int window_len, int horizon,
                 TrainOptions train_opts);

    void observe(const Eigen::VectorXd& position);
    bool window_ready() const;
    TrainingWindow window() const;

    // Runs the parallel trainer on the current window.
    void retrain(std::mt19937_64& rng, TrainDiagnostics* diag = nullptr);

    // M future positions (rows); zero-order hold when untrained/cold.
    Eigen::MatrixXd predict(int horizon) const;

    const Reservoir& reservoir() const { return reservoir_; }
    const Readout& readout() const { return readout_; }
    bool trained() const { return readout_.trained; }

  private:
    Reservoir reservoir_;
    Readout readout_;
    int window_len_ = 6;  // Q
    int horizon_ = 8;     // M
    TrainOptions opts_;
    std::deque<Eigen::VectorXd> inputs_;   // x_tau (positions)
    std::deque<Eigen::VectorXd> states_;   // s_tau after feeding x_tau
    Eigen::VectorXd last_position_;
};

// Flat JSON snapshot (dims + row-major weight arrays) for reproducibility.
std::string esn_to_json(const Reservoir& res, const Readout& readout);
void esn_from_json(const std::string& text, Reservoir& res, Readout& readout);

}  // namespace fopsim
