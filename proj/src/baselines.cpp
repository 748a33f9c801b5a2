#include "fopsim/baselines.hpp"

#include <algorithm>
#include <numeric>
#include <queue>

namespace fopsim {

std::vector<Eigen::VectorXi> knn_candidates(const Eigen::VectorXd& relaxed, int count) {
    const int dim = static_cast<int>(relaxed.size());
    Eigen::VectorXi rounding(dim);
    std::vector<double> flip_cost(dim);  // squared-distance increase of a flip
    for (int i = 0; i < dim; ++i) {
        rounding(i) = relaxed(i) > 0.5 ? 1 : 0;
        const double near = std::min(relaxed(i), 1.0 - relaxed(i));
        flip_cost[i] = (1.0 - near) * (1.0 - near) - near * near;
    }
    std::vector<int> order(dim);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return flip_cost[a] < flip_cost[b]; });

    // Best-first enumeration of flip subsets by total cost; each subset is a
    // prefix-extension over the sorted order, generated exactly once.
    struct Node {
        double cost;
        int last;                 // index into `order`
        std::vector<int> subset;  // indices into `order`
        bool operator>(const Node& o) const { return cost > o.cost; }
    };
    std::priority_queue<Node, std::vector<Node>, std::greater<>> heap;
    heap.push({0.0, -1, {}});

    std::vector<Eigen::VectorXi> out;
    while (!heap.empty() && static_cast<int>(out.size()) < count) {
        Node node = heap.top();
        heap.pop();
        Eigen::VectorXi cand = rounding;
        for (int pos : node.subset) cand(order[pos]) = 1 - cand(order[pos]);
        out.push_back(std::move(cand));

        if (node.last + 1 < dim) {
            Node extend = node;
            extend.last = node.last + 1;
            extend.cost += flip_cost[order[extend.last]];
            extend.subset.push_back(extend.last);
            heap.push(std::move(extend));
            if (!node.subset.empty()) {
                Node replace = node;
                replace.cost += flip_cost[order[node.last + 1]] - flip_cost[order[node.last]];
                replace.subset.back() = node.last + 1;
                replace.last = node.last + 1;
                heap.push(std::move(replace));
            }
        }
    }
    return out;
}

std::vector<Eigen::VectorXi> order_preserving_candidates(const Eigen::VectorXd& relaxed,
                                                         int count) {
    const int dim = static_cast<int>(relaxed.size());
    std::vector<int> order(dim);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return std::abs(relaxed(a) - 0.5) < std::abs(relaxed(b) - 0.5);
    });

    std::vector<Eigen::VectorXi> out;
    Eigen::VectorXi first(dim);
    for (int i = 0; i < dim; ++i) first(i) = relaxed(i) > 0.5 ? 1 : 0;
    out.push_back(first);
    for (int v = 2; v <= count; ++v) {
        if (v - 2 >= dim) break;
        const double tau = relaxed(order[v - 2]);
        Eigen::VectorXi cand(dim);
        for (int i = 0; i < dim; ++i) {
            if (relaxed(i) > tau)
                cand(i) = 1;
            else if (relaxed(i) == tau)
                cand(i) = tau <= 0.5 ? 1 : 0;
            else
                cand(i) = 0;
        }
        out.push_back(cand);
    }
    return out;
}

UplinkActionGroups uplink_groups_from_candidates(const Eigen::MatrixXd& relaxed,
                                                 const std::vector<Eigen::VectorXi>& sel) {
    const int n = static_cast<int>(relaxed.rows());
    const int j = static_cast<int>(relaxed.cols());
    Eigen::VectorXi argmax(n);
    for (int i = 0; i < n; ++i) {
        Eigen::Index jj;
        relaxed.row(i).maxCoeff(&jj);
        argmax(i) = static_cast<int>(jj);
    }
    UplinkActionGroups out;
    for (const auto& users : sel) {
        Eigen::MatrixXi g = Eigen::MatrixXi::Zero(n, j);
        for (int i = 0; i < n; ++i)
            if (users(i) == 1) g(i, argmax(i)) = 1;
        out.groups.push_back(std::move(g));
    }
    return out;
}

DownlinkActionGroups downlink_groups_from_candidates(const std::vector<Eigen::VectorXi>& sel) {
    DownlinkActionGroups out;
    out.groups = sel;
    return out;
}

Eigen::MatrixXi greedy_uplink(const Eigen::MatrixXd& pathloss, const Eigen::MatrixXd& rayleigh,
                              const std::vector<UserState>& users, const RadioParams& radio,
                              int decode_capacity) {
    const int n = static_cast<int>(users.size());
    const int j = static_cast<int>(pathloss.cols());
    auto required = [&](int i, int a) {
        return radio.ul_snr_threshold * radio.noise_psd * radio.ul_bandwidth /
               (n * rayleigh(i, a) * pathloss(i, a));
    };
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> best_req(n);
    for (int i = 0; i < n; ++i) {
        double r = required(i, 0);
        for (int a = 1; a < j; ++a) r = std::min(r, required(i, a));
        best_req[i] = r;
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return best_req[a] < best_req[b]; });

    Eigen::MatrixXi assoc = Eigen::MatrixXi::Zero(n, j);
    Eigen::VectorXi load = Eigen::VectorXi::Zero(j);
    for (int i : order) {
        int pick = -1;
        double pick_req = 0.0;
        for (int a = 0; a < j; ++a) {
            if (load(a) >= decode_capacity) continue;
            const double r = required(i, a);
            if (pick < 0 || r < pick_req) {
                pick = a;
                pick_req = r;
            }
        }
        if (pick < 0 || pick_req > users[i].power_budget()) continue;
        assoc(i, pick) = 1;
        ++load(pick);
    }
    return assoc;
}

GreedyDownlink greedy_downlink(const ChannelRealization& channel,
                               const std::vector<ApConfig>& aps, const RadioParams& radio,
                               const SolveOptions& opts) {
    const int n = channel.num_users();
    const double gamma = std::pow(2.0, radio.dl_rate_threshold / radio.dl_bandwidth) - 1.0;
    const double noise = radio.noise_psd * radio.dl_bandwidth;
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> solo(n);  // single-user minimum power (matched filter)
    for (int i = 0; i < n; ++i) solo[i] = gamma * noise / channel.dl_channel[i].squaredNorm();
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return solo[a] < solo[b]; });

    GreedyDownlink out;
    out.serve = Eigen::VectorXi::Zero(n);
    std::vector<int> served;
    SolveOptions feas = opts;
    feas.feasibility_only = true;
    for (int i : order) {
        std::vector<int> tentative = served;
        tentative.insert(std::upper_bound(tentative.begin(), tentative.end(), i), i);
        SdpInstance inst = build_instance(tentative, channel, aps, radio);
        SdpSolution sol = solve(inst, feas);
        if (sol.status != SdpStatus::Feasible) break;  // first infeasibility stops
        served = std::move(tentative);
    }
    for (int i : served) out.serve(i) = 1;
    SdpInstance inst = build_instance(served, channel, aps, radio);
    out.solution = solve(inst, opts);
    return out;
}

}  // namespace fopsim
