#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "fopsim/esn.hpp"

using namespace fopsim;

namespace {

Eigen::MatrixXd randn(int r, int c, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    return Eigen::MatrixXd::NullaryExpr(r, c, [&] { return g(rng); });
}

TrainingWindow toy_window(int dim, int q, int n_out, std::mt19937_64& rng) {
    TrainingWindow w;
    w.inputs = randn(dim, q, rng);
    w.targets = randn(q, n_out, rng);
    return w;
}

// Eq.-(25) objective assembled from its parts, independent of the
// closed-form step in local_dual_step.
double delta_d_objective(const Eigen::MatrixXd& x_shard, const Eigen::MatrixXd& y_shard,
                         const Eigen::MatrixXd& a_shard, const Eigen::MatrixXd& global,
                         const Eigen::MatrixXd& delta, double kappa, double xi, int q) {
    double r_j = 0.0;  // R_j(A + delta) over the shard rows
    const Eigen::MatrixXd a_new = a_shard + delta;
    for (Eigen::Index m = 0; m < a_new.rows(); ++m)
        for (Eigen::Index n = 0; n < a_new.cols(); ++n)
            r_j += -a_new(m, n) * y_shard(m, n) + 0.5 * a_new(m, n) * a_new(m, n);
    r_j /= q;
    const Eigen::MatrixXd grad_r_star = 0.5 * global;  // grad r*(V) = V/2
    const double linear = (grad_r_star * (x_shard * delta)).trace() / q;
    const double quad = kappa / (2.0 * xi * q * q) * (x_shard * delta).squaredNorm();
    return -r_j - linear - quad;
}

}  // namespace

TEST_CASE("reservoir state update") {
    std::mt19937_64 rng(1);

    SUBCASE("zero weights give a zero state") {
        Reservoir res = make_reservoir(2, 4, 2, rng);
        res.w_in.setZero();
        res.w_rec.setZero();
        CHECK(reservoir_step(res, res.state, Eigen::Vector2d(3.0, -1.0)).norm() == 0.0);
    }
    SUBCASE("weights drawn inside (0,1)") {
        Reservoir res = make_reservoir(2, 300, 2, rng);
        CHECK(res.w_in.minCoeff() > 0.0);
        CHECK(res.w_in.maxCoeff() < 1.0);
        CHECK(res.w_rec.minCoeff() > 0.0);
        CHECK(res.w_rec.maxCoeff() < 1.0);
        CHECK(res.reservoir_dim == 300);
    }
    SUBCASE("2x2 toy weights against scalar arithmetic") {
        Reservoir res = make_reservoir(2, 2, 2, rng);
        res.w_in << 0.5, -0.25, 0.1, 0.8;
        res.w_rec << 0.3, 0.2, -0.1, 0.4;
        res.state << 0.5, -0.5;
        const Eigen::Vector2d x(1.0, 2.0);
        Eigen::VectorXd next = reservoir_step(res, res.state, x);
        CHECK(next(0) == doctest::Approx(std::tanh(0.5 - 0.5 + 0.15 - 0.1)).epsilon(1e-14));
        CHECK(next(1) == doctest::Approx(std::tanh(0.1 + 1.6 - 0.05 - 0.2)).epsilon(1e-14));
    }
    SUBCASE("state entries stay in (-1,1)") {
        Reservoir res = make_reservoir(2, 50, 2, rng);
        for (int t = 0; t < 20; ++t) {
            reservoir_advance(res, Eigen::Vector2d(300.0, 250.0));
            CHECK(res.state.maxCoeff() <= 1.0);
            CHECK(res.state.minCoeff() >= -1.0);
        }
    }
    SUBCASE("dimension mismatch rejected") {
        Reservoir res = make_reservoir(2, 4, 2, rng);
        CHECK_THROWS_AS(reservoir_step(res, res.state, Eigen::Vector3d(1, 2, 3)),
                        std::invalid_argument);
    }
    SUBCASE("convergence to a fixed state under zero input on a toy reservoir") {
        Reservoir res = make_reservoir(2, 8, 2, rng);
        Eigen::VectorXd prev = Eigen::VectorXd::Constant(8, 0.1);
        const Eigen::Vector2d zero(0.0, 0.0);
        for (int k = 0; k < 5; ++k) prev = reservoir_step(res, prev, zero);  // burn-in
        double prev_delta = 1e300;
        for (int k = 0; k < 30; ++k) {
            Eigen::VectorXd next = reservoir_step(res, prev, zero);
            const double delta = (next - prev).norm();
            CHECK(delta <= prev_delta + 1e-15);  // decreasing toward the fixed point
            prev_delta = delta;
            prev = next;
        }
        CHECK(prev_delta < 1e-8);
    }
}

TEST_CASE("readout prediction") {
    std::mt19937_64 rng(2);
    Reservoir res = make_reservoir(2, 3, 2, rng);
    res.state << 0.1, -0.2, 0.3;
    const Eigen::Vector2d x(1.5, -2.5);

    Readout ro;
    ro.trained = true;
    SUBCASE("zero weights predict zero") {
        ro.weights = Eigen::MatrixXd::Zero(5, 2);
        CHECK(readout_predict(ro, x, res.state).norm() == 0.0);
    }
    SUBCASE("selector weights return the input components") {
        ro.weights = Eigen::MatrixXd::Zero(5, 2);
        ro.weights(0, 0) = 1.0;
        ro.weights(1, 1) = 1.0;
        Eigen::VectorXd y = readout_predict(ro, x, res.state);
        CHECK(y(0) == doctest::Approx(1.5));
        CHECK(y(1) == doctest::Approx(-2.5));
    }
    SUBCASE("toy case against an explicit product") {
        ro.weights = randn(5, 2, rng);
        Eigen::VectorXd feat(5);
        feat << x, res.state;
        CHECK((readout_predict(ro, x, res.state) - ro.weights.transpose() * feat).norm() ==
              doctest::Approx(0.0));
    }
    SUBCASE("untrained readout rejected") {
        ro.trained = false;
        ro.weights = Eigen::MatrixXd::Zero(5, 2);
        CHECK_THROWS_AS(readout_predict(ro, x, res.state), std::logic_error);
    }
}

TEST_CASE("local dual step") {
    std::mt19937_64 rng(3);

    SUBCASE("zero right-hand side gives a zero step") {
        Eigen::MatrixXd x = randn(4, 2, rng);
        Eigen::MatrixXd y = randn(2, 2, rng);
        Eigen::MatrixXd v = Eigen::MatrixXd::Zero(2, 4);
        CHECK(local_dual_step(x, y, y, v, 3.0, 0.25, 6).norm() == doctest::Approx(0.0));
    }
    SUBCASE("matches a gradient-ascent maximizer of the local surrogate") {
        const int q_total = 6;
        const double xi = 0.25, kappa = 3.0;
        Eigen::MatrixXd x = randn(5, 2, rng);
        Eigen::MatrixXd y = randn(2, 2, rng);
        Eigen::MatrixXd a = randn(2, 2, rng);
        Eigen::MatrixXd v = randn(2, 5, rng);

        Eigen::MatrixXd closed = local_dual_step(x, y, a, v, kappa, xi, q_total);

        // Independent route: plain gradient ascent on the assembled objective.
        Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(2, 2);
        const double lr = 0.05;
        for (int it = 0; it < 60000; ++it) {
            Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(2, 2);
            const double h = 1e-7;
            for (int r = 0; r < 2; ++r)
                for (int c = 0; c < 2; ++c) {
                    Eigen::MatrixXd dp = delta, dm = delta;
                    dp(r, c) += h;
                    dm(r, c) -= h;
                    grad(r, c) = (delta_d_objective(x, y, a, v, dp, kappa, xi, q_total) -
                                  delta_d_objective(x, y, a, v, dm, kappa, xi, q_total)) /
                                 (2.0 * h);
                }
            delta += lr * grad;
            if (grad.norm() < 1e-12) break;
        }
        CHECK((closed - delta).norm() / std::max(1.0, closed.norm()) < 1e-6);
        CHECK(delta_d_objective(x, y, a, v, closed, kappa, xi, q_total) >=
              delta_d_objective(x, y, a, v, delta, kappa, xi, q_total) - 1e-9);
    }
    SUBCASE("empty shard rejected") {
        Eigen::MatrixXd empty(4, 0);
        CHECK_THROWS_AS(
            local_dual_step(empty, Eigen::MatrixXd(0, 2), Eigen::MatrixXd(0, 2),
                            Eigen::MatrixXd::Zero(2, 4), 3.0, 0.25, 6),
            std::invalid_argument);
    }
}

TEST_CASE("aggregation round") {
    std::mt19937_64 rng(4);
    const int q = 6, dim = 5, n_out = 2;
    Eigen::MatrixXd inputs = randn(dim, q, rng);
    DualState state;
    state.shards = {{0, 3}, {1, 4}, {2, 5}};
    state.dual = randn(q, n_out, rng);
    state.global = (inputs * state.dual).transpose() / (0.25 * q);

    SUBCASE("zero deltas leave the state unchanged") {
        const Eigen::MatrixXd dual_before = state.dual;
        const Eigen::MatrixXd global_before = state.global;
        std::vector<Eigen::MatrixXd> zeros(3, Eigen::MatrixXd::Zero(2, n_out));
        aggregate_round(state, zeros, inputs, 0.25, 0, DualDamping::Full);
        CHECK((state.dual - dual_before).norm() == 0.0);
        CHECK((state.global - global_before).norm() == 0.0);
    }
    SUBCASE("round 0 takes the full step under harmonic damping") {
        DualState a = state, b = state;
        std::vector<Eigen::MatrixXd> deltas;
        for (int j = 0; j < 3; ++j) deltas.push_back(randn(2, n_out, rng));
        aggregate_round(a, deltas, inputs, 0.25, 0, DualDamping::Harmonic);
        aggregate_round(b, deltas, inputs, 0.25, 0, DualDamping::Full);
        CHECK((a.dual - b.dual).norm() == 0.0);
        CHECK((a.global - b.global).norm() == 0.0);
    }
    SUBCASE("incremental V matches a from-scratch recomputation") {
        std::vector<Eigen::MatrixXd> deltas;
        for (int j = 0; j < 3; ++j) deltas.push_back(randn(2, n_out, rng));
        aggregate_round(state, deltas, inputs, 0.25, 2, DualDamping::Harmonic);
        const Eigen::MatrixXd recomputed = (inputs * state.dual).transpose() / (0.25 * q);
        CHECK((recomputed - state.global).norm() < 1e-10);
    }
    SUBCASE("missing worker aborts the round") {
        std::vector<Eigen::MatrixXd> short_deltas(2, Eigen::MatrixXd::Zero(2, n_out));
        CHECK_THROWS_AS(aggregate_round(state, short_deltas, inputs, 0.25, 0,
                                        DualDamping::Full),
                        std::runtime_error);
    }
}

TEST_CASE("parallel training equals the centralized ridge closed form") {
    std::mt19937_64 rng(5);

    SUBCASE("single sample, single worker") {
        TrainingWindow w = toy_window(6, 1, 2, rng);
        TrainOptions opts;
        opts.workers = 1;
        Readout ro = train(w, opts, rng);
        Eigen::MatrixXd ridge = ridge_readout(w.inputs, w.targets, opts.xi);
        CHECK((ro.weights - ridge).norm() / ridge.norm() < 1e-6);
        CHECK(ro.kappa == doctest::Approx(1.0));  // J/zeta
    }
    SUBCASE("three shards over six samples") {
        TrainingWindow w = toy_window(10, 6, 2, rng);
        TrainOptions opts;
        Readout ro = train(w, opts, rng);
        Eigen::MatrixXd ridge = ridge_readout(w.inputs, w.targets, opts.xi);
        CHECK((ro.weights - ridge).norm() / ridge.norm() < 1e-6);
    }
    SUBCASE("shard-permutation invariance") {
        TrainingWindow w = toy_window(8, 6, 2, rng);
        TrainOptions a, b;
        a.shards = {{0, 1}, {2, 3}, {4, 5}};
        b.shards = {{5, 0}, {3, 1}, {2, 4}};
        std::mt19937_64 ra(7), rb(7);
        Readout wa = train(w, a, ra);
        Readout wb = train(w, b, rb);
        CHECK((wa.weights - wb.weights).norm() / wa.weights.norm() < 1e-6);
    }
    SUBCASE("dual objective is non-decreasing across rounds") {
        TrainingWindow w = toy_window(10, 6, 2, rng);
        TrainOptions opts;
        TrainDiagnostics diag;
        train(w, opts, rng, &diag);
        for (std::size_t r = 1; r < diag.dual_values.size(); ++r)
            CHECK(diag.dual_values[r] >= diag.dual_values[r - 1] - 1e-9);
    }
    SUBCASE("harmonic damping also ascends, round 0 at full step") {
        TrainingWindow w = toy_window(10, 6, 2, rng);
        TrainOptions opts;
        opts.damping = DualDamping::Harmonic;
        opts.max_rounds = 200;
        TrainDiagnostics diag;
        train(w, opts, rng, &diag);
        for (std::size_t r = 1; r < diag.dual_values.size(); ++r)
            CHECK(diag.dual_values[r] >= diag.dual_values[r - 1] - 1e-9);
    }
}

TEST_CASE("horizon rollout") {
    std::mt19937_64 rng(6);

    SUBCASE("horizon 1 equals a single readout prediction") {
        Reservoir res = make_reservoir(2, 4, 2, rng);
        Readout ro;
        ro.trained = true;
        ro.weights = randn(6, 2, rng, 0.1);
        const Eigen::Vector2d x(0.3, 0.7);
        Eigen::MatrixXd roll = predict_horizon(res, res.state, ro, x, 1);
        CHECK((roll.row(0).transpose() - readout_predict(ro, x, res.state)).norm() ==
              doctest::Approx(0.0));
    }
    SUBCASE("constant trajectory stays near the fixed point") {
        // Stream a constant position, train, and roll out.
        std::mt19937_64 kr(9);
        Reservoir res = make_reservoir(2, 8, 2, kr);
        TrainOptions opts;
        EsnPredictor pred(res, 6, 8, opts);
        const Eigen::Vector2d pos(400.0, 300.0);
        for (int t = 0; t < 10; ++t) pred.observe(pos);
        pred.retrain(kr);
        Eigen::MatrixXd roll = pred.predict(8);
        for (int m = 0; m < 8; ++m)
            CHECK((roll.row(m).transpose() - pos).norm() < 1e-2);
    }
    SUBCASE("zero-order hold before the window fills") {
        std::mt19937_64 kr(10);
        Reservoir res = make_reservoir(2, 8, 2, kr);
        EsnPredictor pred(res, 6, 4, TrainOptions{});
        pred.observe(Eigen::Vector2d(1.0, 2.0));
        pred.observe(Eigen::Vector2d(3.0, 4.0));
        CHECK_FALSE(pred.window_ready());
        Eigen::MatrixXd hold = pred.predict(4);
        for (int m = 0; m < 4; ++m) {
            CHECK(hold(m, 0) == 3.0);
            CHECK(hold(m, 1) == 4.0);
        }
    }
}

TEST_CASE("NRMSE") {
    SUBCASE("perfect prediction scores zero") {
        Eigen::MatrixXd t = Eigen::MatrixXd::Random(20, 2);
        Nrmse r = nrmse(t, t);
        CHECK(r.value == 0.0);
        CHECK(r.normalized);
    }
    SUBCASE("constant offset over a known range") {
        Eigen::MatrixXd truth(3, 1);
        truth << 0.0, 5.0, 10.0;  // range 10
        Eigen::MatrixXd pred = truth.array() + 2.0;
        Nrmse r = nrmse(pred, truth);
        CHECK(r.value == doctest::Approx(0.2));
    }
    SUBCASE("zero range falls back to the raw RMSE, flagged") {
        Eigen::MatrixXd truth = Eigen::MatrixXd::Constant(4, 1, 3.0);
        Eigen::MatrixXd pred = Eigen::MatrixXd::Constant(4, 1, 4.0);
        Nrmse r = nrmse(pred, truth);
        CHECK_FALSE(r.normalized);
        CHECK(r.value == doctest::Approx(1.0));
    }
    SUBCASE("shape mismatch rejected") {
        CHECK_THROWS_AS(nrmse(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(3, 2)),
                        std::invalid_argument);
    }
}

TEST_CASE("snapshot round trip") {
    std::mt19937_64 rng(11);
    Reservoir res = make_reservoir(2, 5, 2, rng);
    reservoir_advance(res, Eigen::Vector2d(0.2, -0.4));
    Readout ro;
    ro.trained = true;
    ro.weights = randn(7, 2, rng);
    ro.kappa = 3.0;

    const std::string text = esn_to_json(res, ro);
    Reservoir res2;
    Readout ro2;
    esn_from_json(text, res2, ro2);
    CHECK((res.w_in - res2.w_in).norm() == 0.0);
    CHECK((res.w_rec - res2.w_rec).norm() == 0.0);
    CHECK((res.state - res2.state).norm() == 0.0);
    CHECK((ro.weights - ro2.weights).norm() == 0.0);
    CHECK(ro2.trained);
    CHECK(ro2.kappa == 3.0);
    CHECK_THROWS(esn_from_json("{\"format\":\"bogus\"}", res2, ro2));
}
