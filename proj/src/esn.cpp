#include "fopsim/esn.hpp"

#include <nlohmann/json.hpp>
#include <stdexcept>

namespace fopsim {

using nlohmann::json;

Reservoir make_reservoir(int input_dim, int reservoir_dim, int output_dim,
                         std::mt19937_64& rng, bool rescale_spectral,
                         double spectral_radius) {
    Reservoir res;
    res.input_dim = input_dim;
    res.reservoir_dim = reservoir_dim;
    res.output_dim = output_dim;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    res.w_in = Eigen::MatrixXd::NullaryExpr(reservoir_dim, input_dim,
                                            [&] { return unit(rng); });
    res.w_rec = Eigen::MatrixXd::NullaryExpr(reservoir_dim, reservoir_dim,
                                             [&] { return unit(rng); });
    if (rescale_spectral) {
        const double rho = res.w_rec.eigenvalues().cwiseAbs().maxCoeff();
        if (rho > 0.0) res.w_rec *= spectral_radius / rho;
    }
    res.state = Eigen::VectorXd::Zero(reservoir_dim);
    return res;
}

Eigen::VectorXd reservoir_step(const Reservoir& res, const Eigen::VectorXd& state,
                               const Eigen::VectorXd& input) {
    if (input.size() != res.input_dim || state.size() != res.reservoir_dim)
        throw std::invalid_argument("reservoir_step dimension mismatch");
    return (res.w_in * input + res.w_rec * state).array().tanh();
}

void reservoir_advance(Reservoir& res, const Eigen::VectorXd& input) {
    res.state = reservoir_step(res, res.state, input);
}

Eigen::VectorXd readout_predict(const Readout& readout, const Eigen::VectorXd& input,
                                const Eigen::VectorXd& state) {
    if (!readout.trained) throw std::logic_error("readout not trained");
    Eigen::VectorXd feat(input.size() + state.size());
    feat << input, state;
    return readout.weights.transpose() * feat;
}

Eigen::MatrixXd local_dual_step(const Eigen::MatrixXd& x_shard,
                                const Eigen::MatrixXd& y_shard,
                                const Eigen::MatrixXd& a_shard,
                                const Eigen::MatrixXd& global, double kappa,
                                double xi, int q_total) {
    const auto q = x_shard.cols();
    if (q == 0) throw std::invalid_argument("empty shard");
    // (I + kappa/(xi Q) X_j^T X_j) delta = Y_j - A_j - 1/2 X_j^T V^T
    Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(q, q) +
                          (kappa / (xi * q_total)) * (x_shard.transpose() * x_shard);
    Eigen::MatrixXd rhs = y_shard - a_shard - 0.5 * x_shard.transpose() * global.transpose();
    return lhs.ldlt().solve(rhs);
}

void aggregate_round(DualState& state, const std::vector<Eigen::MatrixXd>& deltas,
                     const Eigen::MatrixXd& inputs, double xi, int round,
                     DualDamping damping) {
    if (deltas.size() != state.shards.size())
        throw std::runtime_error("aggregate_round: missing worker result, round aborted");
    const double theta =
        damping == DualDamping::Harmonic ? 1.0 / static_cast<double>(round + 1) : 1.0;
    const auto q_total = state.dual.rows();
    for (std::size_t j = 0; j < state.shards.size(); ++j) {
        const auto& rows = state.shards[j];
        if (static_cast<Eigen::Index>(deltas[j].rows()) != static_cast<Eigen::Index>(rows.size()))
            throw std::runtime_error("aggregate_round: worker result has wrong shape");
        Eigen::MatrixXd x_shard(inputs.rows(), rows.size());
        for (std::size_t c = 0; c < rows.size(); ++c) x_shard.col(c) = inputs.col(rows[c]);
        for (std::size_t c = 0; c < rows.size(); ++c)
            state.dual.row(rows[c]) += theta * deltas[j].row(c);
        state.global += (theta / (xi * q_total)) * (x_shard * deltas[j]).transpose();
    }
}

double dual_objective(const Eigen::MatrixXd& dual, const Eigen::MatrixXd& inputs,
                      const Eigen::MatrixXd& targets, double xi) {
    const auto q = dual.rows();
    // r*(C) = ||C||_F^2 / 4 at C = (1/xi Q)(X A)^T.
    const double r_star = (inputs * dual).squaredNorm() / (4.0 * xi * xi * q * q);
    double l_star = 0.0;
    for (Eigen::Index m = 0; m < q; ++m)
        for (Eigen::Index n = 0; n < dual.cols(); ++n)
            l_star += -dual(m, n) * targets(m, n) + 0.5 * dual(m, n) * dual(m, n);
    return -xi * r_star - l_star / q;
}

namespace {

std::vector<std::vector<int>> partition_shards(int q, int workers) {
    std::vector<std::vector<int>> shards(workers);
    for (int m = 0; m < q; ++m) shards[m % workers].push_back(m);
    // Drop empty shards (more workers than samples).
    std::vector<std::vector<int>> out;
    for (auto& s : shards)
        if (!s.empty()) out.push_back(std::move(s));
    return out;
}

}  // namespace

Readout train(const TrainingWindow& window, const TrainOptions& opts,
              std::mt19937_64& rng, TrainDiagnostics* diag) {
    const int q = static_cast<int>(window.inputs.cols());
    if (q == 0 || window.targets.rows() != q)
        throw std::invalid_argument("training window not filled");
    const int n_out = static_cast<int>(window.targets.cols());

    DualState state;
    state.shards = opts.shards.empty() ? partition_shards(q, opts.workers) : opts.shards;
    std::uniform_real_distribution<double> unit(-0.5, 0.5);
    state.dual = Eigen::MatrixXd::NullaryExpr(q, n_out, [&] { return unit(rng); });
    state.global = (window.inputs * state.dual).transpose() / (opts.xi * q);

    const double kappa = static_cast<double>(state.shards.size()) / opts.zeta;
    std::vector<Eigen::MatrixXd> deltas(state.shards.size());
    int round = 0;
    for (; round < opts.max_rounds; ++round) {
        double step_norm = 0.0;
        for (std::size_t j = 0; j < state.shards.size(); ++j) {
            const auto& rows = state.shards[j];
            Eigen::MatrixXd x_shard(window.inputs.rows(), rows.size());
            Eigen::MatrixXd y_shard(rows.size(), n_out);
            Eigen::MatrixXd a_shard(rows.size(), n_out);
            for (std::size_t c = 0; c < rows.size(); ++c) {
                x_shard.col(c) = window.inputs.col(rows[c]);
                y_shard.row(c) = window.targets.row(rows[c]);
                a_shard.row(c) = state.dual.row(rows[c]);
            }
            deltas[j] = local_dual_step(x_shard, y_shard, a_shard, state.global, kappa,
                                        opts.xi, q);
            step_norm += deltas[j].squaredNorm();
        }
        aggregate_round(state, deltas, window.inputs, opts.xi, round, opts.damping);
        if (diag) diag->dual_values.push_back(
            dual_objective(state.dual, window.inputs, window.targets, opts.xi));
        if (std::sqrt(step_norm) <= opts.stop_tol * (1.0 + state.dual.norm())) {
            ++round;
            break;
        }
    }
    if (diag) diag->rounds = round;

    Readout readout;
    readout.regularization = opts.xi;
    readout.strong_convexity = opts.zeta;
    readout.kappa = kappa;
    // W^T = grad r*(V(A)) = V(A)/2.
    readout.weights = 0.5 * state.global.transpose();
    readout.trained = true;
    return readout;
}

Eigen::MatrixXd ridge_readout(const Eigen::MatrixXd& inputs,
                              const Eigen::MatrixXd& targets, double xi) {
    const auto q = inputs.cols();
    const auto dim = inputs.rows();
    Eigen::MatrixXd lhs = inputs * inputs.transpose() +
                          2.0 * xi * q * Eigen::MatrixXd::Identity(dim, dim);
    return lhs.ldlt().solve(inputs * targets);
}

Eigen::MatrixXd predict_horizon(const Reservoir& res, const Eigen::VectorXd& state,
                                const Readout& readout, const Eigen::VectorXd& latest_input,
                                int horizon) {
    Eigen::MatrixXd out(horizon, res.output_dim);
    Eigen::VectorXd x = latest_input;
    Eigen::VectorXd s = state;
    for (int m = 0; m < horizon; ++m) {
        Eigen::VectorXd y = readout_predict(readout, x, s);
        out.row(m) = y.transpose();
        x = y;
        s = reservoir_step(res, s, x);
    }
    return out;
}

Nrmse nrmse(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& truth) {
    if (predicted.rows() != truth.rows() || predicted.cols() != truth.cols() ||
        truth.rows() < 1)
        throw std::invalid_argument("nrmse: shape mismatch or empty input");
    Nrmse out;
    double acc = 0.0;
    for (Eigen::Index c = 0; c < truth.cols(); ++c) {
        const double rmse =
            std::sqrt((predicted.col(c) - truth.col(c)).squaredNorm() / truth.rows());
        const double range = truth.col(c).maxCoeff() - truth.col(c).minCoeff();
        if (range > 0.0) {
            acc += rmse / range;
        } else {
            acc += rmse;
            out.normalized = false;
        }
    }
    out.value = acc / truth.cols();
    return out;
}

EsnPredictor::EsnPredictor(Reservoir reservoir, int window_len, int horizon,
                           TrainOptions train_opts)
    : reservoir_(std::move(reservoir)),
      window_len_(window_len),
      horizon_(horizon),
      opts_(train_opts) {}

void EsnPredictor::observe(const Eigen::VectorXd& position) {
    reservoir_advance(reservoir_, position);
    inputs_.push_back(position);
    states_.push_back(reservoir_.state);
    // Keep Q pairs: inputs at tau paired with the next observation, so one
    // extra input stays queued as the pending pair head.
    while (static_cast<int>(inputs_.size()) > window_len_ + 1) {
        inputs_.pop_front();
        states_.pop_front();
    }
    last_position_ = position;
}

bool EsnPredictor::window_ready() const {
    return static_cast<int>(inputs_.size()) >= window_len_ + 1;
}

TrainingWindow EsnPredictor::window() const {
    if (!window_ready()) throw std::logic_error("training window not filled");
    const int q = window_len_;
    const int dim = reservoir_.input_dim + reservoir_.reservoir_dim;
    TrainingWindow w;
    w.inputs.resize(dim, q);
    w.targets.resize(q, reservoir_.output_dim);
    w.horizon = horizon_;
    const int last = static_cast<int>(inputs_.size()) - 1;
    // Column 0 newest: input x_{t-1} paired with target y_t.
    for (int m = 0; m < q; ++m) {
        const int idx = last - 1 - m;
        w.inputs.col(m) << inputs_[idx], states_[idx];
        w.targets.row(m) = inputs_[idx + 1].transpose();
    }
    return w;
}

void EsnPredictor::retrain(std::mt19937_64& rng, TrainDiagnostics* diag) {
    readout_ = train(window(), opts_, rng, diag);
}

Eigen::MatrixXd EsnPredictor::predict(int horizon) const {
    if (!readout_.trained || inputs_.empty()) {
        Eigen::MatrixXd hold = Eigen::MatrixXd::Zero(horizon, reservoir_.output_dim);
        if (last_position_.size() > 0)
            hold.rowwise() = last_position_.transpose();
        return hold;
    }
    return predict_horizon(reservoir_, states_.back(), readout_, inputs_.back(), horizon);
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    const auto rows = j.size();
    const auto cols = rows == 0 ? 0 : j.at(0).size();
    Eigen::MatrixXd m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
    return m;
}

}  // namespace

std::string esn_to_json(const Reservoir& res, const Readout& readout) {
    json j;
    j["format"] = "fopsim-esn-v1";
    j["input_dim"] = res.input_dim;
    j["reservoir_dim"] = res.reservoir_dim;
    j["output_dim"] = res.output_dim;
    j["w_in"] = matrix_to_json(res.w_in);
    j["w_rec"] = matrix_to_json(res.w_rec);
    j["state"] = matrix_to_json(res.state);
    j["readout"]["trained"] = readout.trained;
    j["readout"]["regularization"] = readout.regularization;
    j["readout"]["strong_convexity"] = readout.strong_convexity;
    j["readout"]["smoothness"] = readout.smoothness;
    j["readout"]["kappa"] = readout.kappa;
    j["readout"]["weights"] = matrix_to_json(readout.weights);
    return j.dump();
}

void esn_from_json(const std::string& text, Reservoir& res, Readout& readout) {
    json j = json::parse(text);
    if (j.value("format", "") != "fopsim-esn-v1")
        throw std::runtime_error("unknown ESN snapshot format");
    res.input_dim = j["input_dim"].get<int>();
    res.reservoir_dim = j["reservoir_dim"].get<int>();
    res.output_dim = j["output_dim"].get<int>();
    res.w_in = matrix_from_json(j["w_in"]);
    res.w_rec = matrix_from_json(j["w_rec"]);
    res.state = matrix_from_json(j["state"]);
    readout.trained = j["readout"]["trained"].get<bool>();
    readout.regularization = j["readout"]["regularization"].get<double>();
    readout.strong_convexity = j["readout"]["strong_convexity"].get<double>();
    readout.smoothness = j["readout"]["smoothness"].get<double>();
    readout.kappa = j["readout"]["kappa"].get<double>();
    readout.weights = matrix_from_json(j["readout"]["weights"]);
}

}  // namespace fopsim
