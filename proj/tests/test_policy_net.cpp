#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fopsim/policy_net.hpp"

using namespace fopsim;

namespace {

Eigen::MatrixXd randn(int r, int c, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    return Eigen::MatrixXd::NullaryExpr(r, c, [&] { return g(rng); });
}

Eigen::MatrixXd random_bits(int r, int c, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> bit(0, 1);
    return Eigen::MatrixXd::NullaryExpr(r, c, [&] { return double(bit(rng)); });
}

}  // namespace

TEST_CASE("Xavier initialization") {
    std::mt19937_64 rng(1);
    SUBCASE("bound is sqrt(6/(fan_in+fan_out))") {
        PolicyNet net = init_xavier(3, 3, 3, 3, 0.1, rng);  // every bound = 1.0
        CHECK(net.w1.cwiseAbs().maxCoeff() <= 1.0);
        CHECK(net.w2.cwiseAbs().maxCoeff() <= 1.0);
        CHECK(net.w3.cwiseAbs().maxCoeff() <= 1.0);
        CHECK(net.w1.cwiseAbs().maxCoeff() > 0.5);  // draws actually span the range
        CHECK(net.b1.norm() == 0.0);
        CHECK(net.b2.norm() == 0.0);
        CHECK(net.b3.norm() == 0.0);
    }
    SUBCASE("reference hidden sizes") {
        PolicyNet net = init_xavier(67, 120, 80, 48, 0.1, rng);
        CHECK(net.w1.rows() == 120);
        CHECK(net.w2.rows() == 80);
        CHECK(net.w2.cols() == 120);
        CHECK(net.w3.rows() == 48);
        const double bound = std::sqrt(6.0 / (120 + 67));
        CHECK(net.w1.cwiseAbs().maxCoeff() <= bound);
    }
    SUBCASE("fixed seed reproduces identical weights") {
        std::mt19937_64 a(42), b(42);
        PolicyNet na = init_xavier(5, 8, 6, 4, 0.1, a);
        PolicyNet nb = init_xavier(5, 8, 6, 4, 0.1, b);
        CHECK((na.w1 - nb.w1).norm() == 0.0);
        CHECK((na.w2 - nb.w2).norm() == 0.0);
        CHECK((na.w3 - nb.w3).norm() == 0.0);
    }
}

TEST_CASE("forward pass") {
    std::mt19937_64 rng(2);
    SUBCASE("all-zero parameters output 0.5 everywhere") {
        PolicyNet net = init_xavier(4, 6, 5, 3, 0.1, rng);
        net.w1.setZero();
        net.w2.setZero();
        net.w3.setZero();
        Eigen::VectorXd y = forward(net, Eigen::VectorXd::Random(4));
        for (int i = 0; i < y.size(); ++i) CHECK(y(i) == 0.5);
    }
    SUBCASE("outputs strictly inside (0,1)") {
        PolicyNet net = init_xavier(4, 6, 5, 3, 0.1, rng);
        for (int t = 0; t < 50; ++t) {
            Eigen::VectorXd y = forward(net, 100.0 * Eigen::VectorXd::Random(4));
            CHECK(y.minCoeff() > 0.0);
            CHECK(y.maxCoeff() < 1.0);
        }
    }
    SUBCASE("1-2-1 toy composition against scalar arithmetic") {
        PolicyNet net = init_xavier(1, 2, 2, 1, 0.1, rng);
        net.w1 << 1.0, -2.0;
        net.b1 << 0.5, 0.25;
        net.w2 << 1.0, 0.0, 0.5, -1.0;
        net.b2 << 0.0, 1.0;
        net.w3 << 2.0, -1.0;
        net.b3 << 0.1;
        const double x = 0.7;
        const double h1a = std::max(0.0, 1.0 * x + 0.5);
        const double h1b = std::max(0.0, -2.0 * x + 0.25);
        const double h2a = std::max(0.0, h1a);
        const double h2b = std::max(0.0, 0.5 * h1a - 1.0 * h1b + 1.0);
        const double z = 2.0 * h2a - 1.0 * h2b + 0.1;
        const double expect = 1.0 / (1.0 + std::exp(-z));
        Eigen::VectorXd in(1);
        in << x;
        CHECK(forward(net, in)(0) == doctest::Approx(expect).epsilon(1e-14));
    }
    SUBCASE("dimension mismatch rejected") {
        PolicyNet net = init_xavier(4, 6, 5, 3, 0.1, rng);
        CHECK_THROWS_AS(forward(net, Eigen::VectorXd::Zero(5)), std::invalid_argument);
    }
}

TEST_CASE("cross-entropy loss") {
    std::mt19937_64 rng(3);
    SUBCASE("uniform outputs score dim*log(2) per sample") {
        Eigen::MatrixXd y = Eigen::MatrixXd::Constant(5, 7, 0.5);
        Eigen::MatrixXd a = random_bits(5, 7, rng);
        CHECK(cross_entropy_loss(y, a) == doctest::Approx(5.0 * std::log(2.0)).epsilon(1e-12));
    }
    SUBCASE("perfect outputs approach zero loss (down to the output clamp)") {
        Eigen::MatrixXd a = random_bits(4, 6, rng);
        Eigen::MatrixXd y = a.array() * (1.0 - 1e-6) + (1.0 - a.array()) * 1e-6;
        CHECK(cross_entropy_loss(y, a) < 1e-4);
        CHECK(cross_entropy_loss(y, a) > 0.0);
    }
    SUBCASE("always finite even at saturated outputs") {
        Eigen::MatrixXd y = Eigen::MatrixXd::Constant(3, 64, 1.0);
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 64);
        CHECK(std::isfinite(cross_entropy_loss(y, a)));
        CHECK(cross_entropy_loss(y, a) >= 0.0);
    }
    SUBCASE("empty batch rejected") {
        CHECK_THROWS_AS(cross_entropy_loss(Eigen::MatrixXd(3, 0), Eigen::MatrixXd(3, 0)),
                        std::invalid_argument);
    }
}

TEST_CASE("gradients match central finite differences") {
    std::mt19937_64 rng(4);
    PolicyNet net = init_xavier(4, 5, 4, 3, 0.1, rng);
    Eigen::MatrixXd xs = randn(4, 6, rng);
    Eigen::MatrixXd as = random_bits(3, 6, rng);
    PolicyGradients g = gradients(net, xs, as);
    const double h = 1e-6;

    auto fd_check = [&](auto get_param, const Eigen::MatrixXd& analytic, int rows, int cols) {
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) {
                PolicyNet plus = net, minus = net;
                get_param(plus)(r, c) += h;
                get_param(minus)(r, c) -= h;
                const double fd = (cross_entropy_loss(forward_batch(plus, xs), as) -
                                   cross_entropy_loss(forward_batch(minus, xs), as)) /
                                  (2.0 * h);
                const double denom = std::max({1e-7, std::abs(fd), std::abs(analytic(r, c))});
                CHECK(std::abs(fd - analytic(r, c)) / denom < 1e-4);
            }
    };
    fd_check([](PolicyNet& n) -> Eigen::MatrixXd& { return n.w1; }, g.w1, 5, 4);
    fd_check([](PolicyNet& n) -> Eigen::MatrixXd& { return n.w2; }, g.w2, 4, 5);
    fd_check([](PolicyNet& n) -> Eigen::MatrixXd& { return n.w3; }, g.w3, 3, 4);

    auto fd_bias = [&](auto get_param, const Eigen::VectorXd& analytic, int rows) {
        for (int r = 0; r < rows; ++r) {
            PolicyNet plus = net, minus = net;
            get_param(plus)(r) += h;
            get_param(minus)(r) -= h;
            const double fd = (cross_entropy_loss(forward_batch(plus, xs), as) -
                               cross_entropy_loss(forward_batch(minus, xs), as)) /
                              (2.0 * h);
            const double denom = std::max({1e-7, std::abs(fd), std::abs(analytic(r))});
            CHECK(std::abs(fd - analytic(r)) / denom < 1e-4);
        }
    };
    fd_bias([](PolicyNet& n) -> Eigen::VectorXd& { return n.b1; }, g.b1, 5);
    fd_bias([](PolicyNet& n) -> Eigen::VectorXd& { return n.b2; }, g.b2, 4);
    fd_bias([](PolicyNet& n) -> Eigen::VectorXd& { return n.b3; }, g.b3, 3);
}

TEST_CASE("ADAM updates") {
    std::mt19937_64 rng(5);
    SUBCASE("zero gradient is a fixed point") {
        PolicyNet net = init_xavier(3, 4, 4, 2, 0.1, rng);
        Eigen::MatrixXd xs = randn(3, 4, rng);
        Eigen::MatrixXd targets = forward_batch(net, xs);  // (y - a) == 0 exactly
        const Eigen::MatrixXd w1 = net.w1, w2 = net.w2, w3 = net.w3;
        adam_step(net, xs, targets);
        CHECK((net.w1 - w1).norm() == 0.0);
        CHECK((net.w2 - w2).norm() == 0.0);
        CHECK((net.w3 - w3).norm() == 0.0);
        CHECK(net.step == 1);
    }
    SUBCASE("training reduces loss on a fixed batch") {
        PolicyNet net = init_xavier(6, 10, 8, 4, 0.01, rng);
        Eigen::MatrixXd xs = randn(6, 16, rng);
        Eigen::MatrixXd as = random_bits(4, 16, rng);
        const double first = adam_step(net, xs, as);
        double last = first;
        for (int it = 0; it < 200; ++it) last = adam_step(net, xs, as);
        CHECK(last < first);
    }
    SUBCASE("identical seeds give identical trained parameters") {
        auto run = [](std::uint64_t seed) {
            std::mt19937_64 r(seed);
            PolicyNet net = init_xavier(4, 6, 5, 3, 0.05, r);
            Eigen::MatrixXd xs = randn(4, 8, r);
            Eigen::MatrixXd as = random_bits(3, 8, r);
            for (int it = 0; it < 25; ++it) adam_step(net, xs, as);
            return net;
        };
        PolicyNet a = run(77), b = run(77);
        CHECK((a.w1 - b.w1).norm() == 0.0);
        CHECK((a.w3 - b.w3).norm() == 0.0);
        CHECK((a.m_w2 - b.m_w2).norm() == 0.0);
        CHECK((a.v_b3 - b.v_b3).norm() == 0.0);
    }
}

TEST_CASE("exploration noise") {
    ExplorationSchedule sched;
    SUBCASE("epsilon decays geometrically to the floor") {
        CHECK(sched.epsilon(0) == doctest::Approx(0.99));
        CHECK(sched.epsilon(1) == doctest::Approx(0.99 * 0.999));
        CHECK(sched.epsilon(100000) == doctest::Approx(0.01));
        for (long t = 1; t < 2000; t += 97) CHECK(sched.epsilon(t) <= sched.epsilon(t - 1));
    }
    SUBCASE("epsilon 0 is the identity") {
        std::mt19937_64 rng(6);
        Eigen::VectorXd a = Eigen::VectorXd::Constant(5, 0.3);
        CHECK((explore(a, 0.0, 0.36, rng) - a).norm() == 0.0);
    }
    SUBCASE("perturbation is reproducible and clamped into (0,1)") {
        Eigen::VectorXd a = Eigen::VectorXd::Constant(64, 0.99);
        std::mt19937_64 r1(9), r2(9);
        Eigen::VectorXd p1 = explore(a, 0.99, 0.36, r1);
        Eigen::VectorXd p2 = explore(a, 0.99, 0.36, r2);
        CHECK((p1 - p2).norm() == 0.0);
        CHECK(p1.minCoeff() > 0.0);
        CHECK(p1.maxCoeff() < 1.0);
        CHECK((p1 - a).norm() > 0.0);
    }
}

TEST_CASE("replay memory") {
    auto make_transition = [](double tag) {
        Transition t;
        t.state = Eigen::VectorXd::Constant(2, tag);
        t.action = Eigen::VectorXd::Constant(1, tag);
        t.next_state = Eigen::VectorXd::Constant(2, tag + 0.5);
        return t;
    };
    SUBCASE("ring semantics: push C+1 overwrites the oldest") {
        ReplayMemory mem(4);
        for (int k = 0; k < 5; ++k) mem.push(make_transition(k));
        CHECK(mem.size() == 4);
        CHECK(mem.at(0).state(0) == 1.0);  // oldest is now tag 1
        CHECK(mem.at(3).state(0) == 4.0);
    }
    SUBCASE("FIFO window after k > C pushes") {
        ReplayMemory mem(8);
        for (int k = 0; k < 30; ++k) mem.push(make_transition(k));
        for (int i = 0; i < 8; ++i) CHECK(mem.at(i).state(0) == 22.0 + i);
    }
    SUBCASE("sampled transitions are distinct within one call") {
        ReplayMemory mem(100);
        for (int k = 0; k < 50; ++k) mem.push(make_transition(k));
        std::mt19937_64 rng(8);
        auto batch = mem.sample(32, rng);
        std::set<const Transition*> unique(batch.begin(), batch.end());
        CHECK(unique.size() == 32);
    }
    SUBCASE("underfilled memory refuses to sample") {
        ReplayMemory mem(100);
        mem.push(make_transition(0));
        CHECK_FALSE(mem.can_sample(2));
        std::mt19937_64 rng(8);
        CHECK_THROWS_AS(mem.sample(2, rng), std::logic_error);
    }
}

TEST_CASE("checkpoint round trip") {
    std::mt19937_64 rng(10);
    PolicyNet net = init_xavier(4, 6, 5, 3, 0.05, rng);
    Eigen::MatrixXd xs = randn(4, 8, rng);
    Eigen::MatrixXd as = random_bits(3, 8, rng);
    for (int it = 0; it < 5; ++it) adam_step(net, xs, as);

    const std::string text = policy_to_json(net, 0.42);
    double eps = 0.0;
    PolicyNet back = policy_from_json(text, &eps);
    CHECK(eps == 0.42);
    CHECK(back.step == net.step);
    CHECK((back.w1 - net.w1).norm() == 0.0);
    CHECK((back.m_w1 - net.m_w1).norm() == 0.0);
    CHECK((back.v_b2 - net.v_b2).norm() == 0.0);
    CHECK((forward(back, xs.col(0)) - forward(net, xs.col(0))).norm() == 0.0);
    CHECK_THROWS(policy_from_json("{\"format\":\"bogus\"}"));
}
