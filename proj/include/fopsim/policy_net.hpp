#pragma once

#include <Eigen/Dense>
#include <random>
#include <string>
#include <vector>

namespace fopsim {

// Two-hidden-layer feedforward policy (ReLU hidden, logistic output) with
// per-parameter ADAM state.
struct PolicyNet {
    int input_dim = 0;
    int hidden1 = 120;
    int hidden2 = 80;
    int output_dim = 0;
    double learning_rate = 0.1;

    Eigen::MatrixXd w1, w2, w3;
    Eigen::VectorXd b1, b2, b3;

    // ADAM first/second moments, one per parameter tensor.
    Eigen::MatrixXd m_w1, m_w2, m_w3, v_w1, v_w2, v_w3;
    Eigen::VectorXd m_b1, m_b2, m_b3, v_b1, v_b2, v_b3;
    long step = 0;

    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_adam = 1e-8;
};

// Xavier-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases.
PolicyNet init_xavier(int input_dim, int hidden1, int hidden2, int output_dim,
                      double learning_rate, std::mt19937_64& rng);

// Forward pass; outputs lie strictly inside (0,1).
Eigen::VectorXd forward(const PolicyNet& net, const Eigen::VectorXd& state);
Eigen::MatrixXd forward_batch(const PolicyNet& net, const Eigen::MatrixXd& states);

// Averaged cross-entropy of batch outputs vs chosen binary actions; columns
// are samples.
double cross_entropy_loss(const Eigen::MatrixXd& outputs, const Eigen::MatrixXd& actions);

struct PolicyGradients {
    Eigen::MatrixXd w1, w2, w3;
    Eigen::VectorXd b1, b2, b3;
};

// Analytic backpropagation of the cross-entropy loss over the batch.
PolicyGradients gradients(const PolicyNet& net, const Eigen::MatrixXd& states,
                          const Eigen::MatrixXd& actions);

// One ADAM update from the batch; returns the pre-update loss.
double adam_step(PolicyNet& net, const Eigen::MatrixXd& states,
                 const Eigen::MatrixXd& actions);

struct ExplorationSchedule {
    double initial = 0.99;
    double floor = 0.01;
    double decay = 0.999;
    double noise_var = 0.36;  // sigma^2

    double epsilon(long t) const;
};

// a- + eps * n with n ~ N(0, sigma^2 I), clamped into (delta, 1-delta).
Eigen::VectorXd explore(const Eigen::VectorXd& action, double epsilon, double noise_var,
                        std::mt19937_64& rng);

struct Transition {
    Eigen::VectorXd state;
    Eigen::VectorXd action;
    Eigen::VectorXd next_state;
};

// Ring buffer; once full, the newest sample replaces the oldest one.
class ReplayMemory {
  public:
    explicit ReplayMemory(std::size_t capacity) : capacity_(capacity) {}

    void push(Transition t);
    std::size_t size() const { return buffer_.size(); }
    bool can_sample(std::size_t batch) const { return buffer_.size() >= batch; }

    // Uniform without replacement within one call.
    std::vector<const Transition*> sample(std::size_t batch, std::mt19937_64& rng) const;

    const Transition& at(std::size_t logical) const;  // 0 = oldest

  private:
    std::size_t capacity_;
    std::size_t cursor_ = 0;
    std::vector<Transition> buffer_;
};

// Versioned JSON checkpoint: dims, parameters, ADAM moments, step counter and
// exploration state.
std::string policy_to_json(const PolicyNet& net, double epsilon_state);
PolicyNet policy_from_json(const std::string& text, double* epsilon_state = nullptr);

}  // namespace fopsim
