#include "fopsim/policy_net.hpp"

#include <nlohmann/json.hpp>
#include <stdexcept>

namespace fopsim {

using nlohmann::json;

namespace {

constexpr double kOutputClamp = 1e-6;  // keeps log() finite in the loss

Eigen::MatrixXd xavier(int rows, int cols, std::mt19937_64& rng) {
    const double bound = std::sqrt(6.0 / (rows + cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    return Eigen::MatrixXd::NullaryExpr(rows, cols, [&] { return dist(rng); });
}

Eigen::MatrixXd relu(const Eigen::MatrixXd& x) { return x.cwiseMax(0.0); }

Eigen::MatrixXd logistic(const Eigen::MatrixXd& x) {
    return ((-x.array()).exp() + 1.0).inverse();
}

struct ForwardCache {
    Eigen::MatrixXd z1, a1, z2, a2, out;
};

ForwardCache run_forward(const PolicyNet& net, const Eigen::MatrixXd& states) {
    if (states.rows() != net.input_dim)
        throw std::invalid_argument("policy forward: input dimension mismatch");
    ForwardCache c;
    c.z1 = (net.w1 * states).colwise() + net.b1;
    c.a1 = relu(c.z1);
    c.z2 = (net.w2 * c.a1).colwise() + net.b2;
    c.a2 = relu(c.z2);
    c.out = logistic((net.w3 * c.a2).colwise() + net.b3);
    return c;
}

void adam_update(Eigen::Ref<Eigen::MatrixXd> param, Eigen::Ref<Eigen::MatrixXd> m,
                 Eigen::Ref<Eigen::MatrixXd> v, const Eigen::MatrixXd& grad,
                 double lr, double beta1, double beta2, double eps, long step) {
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v.array().matrix() + (1.0 - beta2) * grad.array().square().matrix();
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    param.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
}

}  // namespace

PolicyNet init_xavier(int input_dim, int hidden1, int hidden2, int output_dim,
                      double learning_rate, std::mt19937_64& rng) {
    PolicyNet net;
    net.input_dim = input_dim;
    net.hidden1 = hidden1;
    net.hidden2 = hidden2;
    net.output_dim = output_dim;
    net.learning_rate = learning_rate;
    net.w1 = xavier(hidden1, input_dim, rng);
    net.w2 = xavier(hidden2, hidden1, rng);
    net.w3 = xavier(output_dim, hidden2, rng);
    net.b1 = Eigen::VectorXd::Zero(hidden1);
    net.b2 = Eigen::VectorXd::Zero(hidden2);
    net.b3 = Eigen::VectorXd::Zero(output_dim);
    net.m_w1 = Eigen::MatrixXd::Zero(hidden1, input_dim);
    net.m_w2 = Eigen::MatrixXd::Zero(hidden2, hidden1);
    net.m_w3 = Eigen::MatrixXd::Zero(output_dim, hidden2);
    net.v_w1 = net.m_w1;
    net.v_w2 = net.m_w2;
    net.v_w3 = net.m_w3;
    net.m_b1 = Eigen::VectorXd::Zero(hidden1);
    net.m_b2 = Eigen::VectorXd::Zero(hidden2);
    net.m_b3 = Eigen::VectorXd::Zero(output_dim);
    net.v_b1 = net.m_b1;
    net.v_b2 = net.m_b2;
    net.v_b3 = net.m_b3;
    return net;
}

// The action interface clamps saturated sigmoids into the open interval;
// the gradient path keeps the raw values.
Eigen::VectorXd forward(const PolicyNet& net, const Eigen::VectorXd& state) {
    return run_forward(net, state)
        .out.col(0)
        .array()
        .min(1.0 - kOutputClamp)
        .max(kOutputClamp);
}

Eigen::MatrixXd forward_batch(const PolicyNet& net, const Eigen::MatrixXd& states) {
    return run_forward(net, states).out.array().min(1.0 - kOutputClamp).max(kOutputClamp);
}

double cross_entropy_loss(const Eigen::MatrixXd& outputs, const Eigen::MatrixXd& actions) {
    if (outputs.cols() == 0) throw std::invalid_argument("empty batch");
    const auto y = outputs.array().min(1.0 - kOutputClamp).max(kOutputClamp);
    const auto a = actions.array();
    const double total = (a * y.log() + (1.0 - a) * (1.0 - y).log()).sum();
    return -total / outputs.cols();
}

PolicyGradients gradients(const PolicyNet& net, const Eigen::MatrixXd& states,
                          const Eigen::MatrixXd& actions) {
    const auto batch = states.cols();
    if (batch == 0) throw std::invalid_argument("empty batch");
    ForwardCache c = run_forward(net, states);

    // Sigmoid + cross-entropy collapse to (y - a) at the output pre-activation.
    Eigen::MatrixXd d3 = (c.out - actions) / static_cast<double>(batch);
    PolicyGradients g;
    g.w3 = d3 * c.a2.transpose();
    g.b3 = d3.rowwise().sum();
    Eigen::MatrixXd d2 =
        (net.w3.transpose() * d3).cwiseProduct((c.z2.array() > 0.0).cast<double>().matrix());
    g.w2 = d2 * c.a1.transpose();
    g.b2 = d2.rowwise().sum();
    Eigen::MatrixXd d1 =
        (net.w2.transpose() * d2).cwiseProduct((c.z1.array() > 0.0).cast<double>().matrix());
    g.w1 = d1 * states.transpose();
    g.b1 = d1.rowwise().sum();
    return g;
}

double adam_step(PolicyNet& net, const Eigen::MatrixXd& states,
                 const Eigen::MatrixXd& actions) {
    const double loss = cross_entropy_loss(forward_batch(net, states), actions);
    PolicyGradients g = gradients(net, states, actions);
    ++net.step;
    const double lr = net.learning_rate;
    adam_update(net.w1, net.m_w1, net.v_w1, g.w1, lr, net.beta1, net.beta2, net.eps_adam, net.step);
    adam_update(net.w2, net.m_w2, net.v_w2, g.w2, lr, net.beta1, net.beta2, net.eps_adam, net.step);
    adam_update(net.w3, net.m_w3, net.v_w3, g.w3, lr, net.beta1, net.beta2, net.eps_adam, net.step);
    adam_update(net.b1, net.m_b1, net.v_b1, g.b1, lr, net.beta1, net.beta2, net.eps_adam, net.step);
    adam_update(net.b2, net.m_b2, net.v_b2, g.b2, lr, net.beta1, net.beta2, net.eps_adam, net.step);
    adam_update(net.b3, net.m_b3, net.v_b3, g.b3, lr, net.beta1, net.beta2, net.eps_adam, net.step);
    return loss;
}

double ExplorationSchedule::epsilon(long t) const {
    return std::max(floor, initial * std::pow(decay, static_cast<double>(t)));
}

Eigen::VectorXd explore(const Eigen::VectorXd& action, double epsilon, double noise_var,
                        std::mt19937_64& rng) {
    if (epsilon == 0.0) return action;
    std::normal_distribution<double> noise(0.0, std::sqrt(noise_var));
    Eigen::VectorXd out = action;
    for (Eigen::Index i = 0; i < out.size(); ++i) out(i) += epsilon * noise(rng);
    return out.array().min(1.0 - kOutputClamp).max(kOutputClamp);
}

void ReplayMemory::push(Transition t) {
    if (buffer_.size() < capacity_) {
        buffer_.push_back(std::move(t));
    } else {
        buffer_[cursor_] = std::move(t);
    }
    cursor_ = (cursor_ + 1) % capacity_;
}

std::vector<const Transition*> ReplayMemory::sample(std::size_t batch,
                                                    std::mt19937_64& rng) const {
    if (!can_sample(batch)) throw std::logic_error("replay memory underfilled");
    // Partial Fisher-Yates over an index array: distinct indices per call.
    std::vector<std::size_t> idx(buffer_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::vector<const Transition*> out;
    out.reserve(batch);
    for (std::size_t i = 0; i < batch; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(rng)]);
        out.push_back(&buffer_[idx[i]]);
    }
    return out;
}

const Transition& ReplayMemory::at(std::size_t logical) const {
    if (logical >= buffer_.size()) throw std::out_of_range("replay index");
    if (buffer_.size() < capacity_) return buffer_[logical];
    return buffer_[(cursor_ + logical) % capacity_];
}

namespace {

json mat_json(const Eigen::MatrixXd& m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
    return out;
}

void mat_load(const json& j, Eigen::Ref<Eigen::MatrixXd> m) {
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = j.at(k++).get<double>();
}

}  // namespace

std::string policy_to_json(const PolicyNet& net, double epsilon_state) {
    json j;
    j["format"] = "fopsim-policy-v1";
    j["dims"] = {net.input_dim, net.hidden1, net.hidden2, net.output_dim};
    j["learning_rate"] = net.learning_rate;
    j["step"] = net.step;
    j["epsilon"] = epsilon_state;
    j["w1"] = mat_json(net.w1);
    j["w2"] = mat_json(net.w2);
    j["w3"] = mat_json(net.w3);
    j["b1"] = mat_json(net.b1);
    j["b2"] = mat_json(net.b2);
    j["b3"] = mat_json(net.b3);
    j["m_w1"] = mat_json(net.m_w1);
    j["m_w2"] = mat_json(net.m_w2);
    j["m_w3"] = mat_json(net.m_w3);
    j["v_w1"] = mat_json(net.v_w1);
    j["v_w2"] = mat_json(net.v_w2);
    j["v_w3"] = mat_json(net.v_w3);
    j["m_b1"] = mat_json(net.m_b1);
    j["m_b2"] = mat_json(net.m_b2);
    j["m_b3"] = mat_json(net.m_b3);
    j["v_b1"] = mat_json(net.v_b1);
    j["v_b2"] = mat_json(net.v_b2);
    j["v_b3"] = mat_json(net.v_b3);
    return j.dump();
}

PolicyNet policy_from_json(const std::string& text, double* epsilon_state) {
    json j = json::parse(text);
    if (j.value("format", "") != "fopsim-policy-v1")
        throw std::runtime_error("unknown policy checkpoint format");
    const auto dims = j["dims"];
    std::mt19937_64 dummy(0);
    PolicyNet net = init_xavier(dims.at(0), dims.at(1), dims.at(2), dims.at(3),
                                j["learning_rate"].get<double>(), dummy);
    net.step = j["step"].get<long>();
    if (epsilon_state) *epsilon_state = j["epsilon"].get<double>();
    mat_load(j["w1"], net.w1);
    mat_load(j["w2"], net.w2);
    mat_load(j["w3"], net.w3);
    mat_load(j["b1"], net.b1);
    mat_load(j["b2"], net.b2);
    mat_load(j["b3"], net.b3);
    mat_load(j["m_w1"], net.m_w1);
    mat_load(j["m_w2"], net.m_w2);
    mat_load(j["m_w3"], net.m_w3);
    mat_load(j["v_w1"], net.v_w1);
    mat_load(j["v_w2"], net.v_w2);
    mat_load(j["v_w3"], net.v_w3);
    mat_load(j["m_b1"], net.m_b1);
    mat_load(j["m_b2"], net.m_b2);
    mat_load(j["m_b3"], net.m_b3);
    mat_load(j["v_b1"], net.v_b1);
    mat_load(j["v_b2"], net.v_b2);
    mat_load(j["v_b3"], net.v_b3);
    return net;
}

}  // namespace fopsim
