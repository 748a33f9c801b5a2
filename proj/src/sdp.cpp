#include "fopsim/sdp.hpp"

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace fopsim {

using nlohmann::json;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using Cplx = std::complex<double>;

namespace {

// ---- Minimal block-diagonal SDP in standard primal form -----------------
//   minimize <C,X>  s.t.  <A_k,X> = b_k,  X >= 0 (Hermitian blocks)
// solved by an infeasible-start Mehrotra predictor-corrector IPM with the
// HKM direction. Scalar slacks are 1x1 blocks.

struct Term {
    int block;
    MatrixXcd coef;  // Hermitian
};

struct Constraint {
    std::vector<Term> terms;
    double rhs = 0.0;
};

struct BlockSdp {
    std::vector<int> dims;
    std::vector<MatrixXcd> cost;  // C per block (Hermitian)
    std::vector<Constraint> constraints;
};

struct IpmResult {
    bool converged = false;
    std::vector<MatrixXcd> x;
    VectorXd y;
    double pobj = 0.0;
    double dobj = 0.0;
    int iterations = 0;
};

double inner(const MatrixXcd& a, const MatrixXcd& b) {
    return (a.array() * b.transpose().array()).sum().real();  // Re tr(a b)
}

MatrixXcd hermitize(const MatrixXcd& m) { return 0.5 * (m + m.adjoint()); }

// Largest step alpha with S + alpha*dS staying PSD; S must be PD.
double max_step(const MatrixXcd& s, const MatrixXcd& ds) {
    Eigen::LLT<MatrixXcd> llt(s);
    if (llt.info() != Eigen::Success) return 0.0;
    MatrixXcd b = llt.matrixL().solve(ds);
    MatrixXcd w = llt.matrixL().solve(b.adjoint()).adjoint();
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(hermitize(w), Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    if (lmin >= -1e-14) return 1e30;
    return -1.0 / lmin;
}

IpmResult ipm_solve(const BlockSdp& prob, double tol, int max_iters) {
    const int nblocks = static_cast<int>(prob.dims.size());
    const int m = static_cast<int>(prob.constraints.size());
    int ntotal = 0;
    for (int d : prob.dims) ntotal += d;

    // Which constraints touch each block, with the term index.
    std::vector<std::vector<std::pair<int, int>>> touching(nblocks);
    for (int k = 0; k < m; ++k)
        for (int t = 0; t < static_cast<int>(prob.constraints[k].terms.size()); ++t)
            touching[prob.constraints[k].terms[t].block].push_back({k, t});

    double bmax = 1.0, anorm = 1.0, cnorm = 1.0;
    for (const auto& con : prob.constraints) {
        bmax = std::max(bmax, std::abs(con.rhs));
        for (const auto& t : con.terms) anorm = std::max(anorm, t.coef.norm());
    }
    for (const auto& c : prob.cost) cnorm = std::max(cnorm, c.norm());

    std::vector<MatrixXcd> X(nblocks), Z(nblocks);
    for (int b = 0; b < nblocks; ++b) {
        X[b] = 10.0 * bmax * MatrixXcd::Identity(prob.dims[b], prob.dims[b]);
        Z[b] = 10.0 * std::max(anorm, cnorm) * MatrixXcd::Identity(prob.dims[b], prob.dims[b]);
    }
    VectorXd y = VectorXd::Zero(m);

    IpmResult res;
    std::vector<MatrixXcd> Zinv(nblocks), Rd(nblocks), Rc(nblocks), U(nblocks);
    std::vector<MatrixXcd> dX(nblocks), dZ(nblocks), dXa(nblocks), dZa(nblocks);
    VectorXd rp(m);

    for (int iter = 0; iter < max_iters; ++iter) {
        // Residuals and objective values.
        double pobj = 0.0;
        for (int b = 0; b < nblocks; ++b) pobj += inner(prob.cost[b], X[b]);
        const double dobj = [&] {
            double v = 0.0;
            for (int k = 0; k < m; ++k) v += prob.constraints[k].rhs * y(k);
            return v;
        }();
        for (int k = 0; k < m; ++k) {
            double ax = 0.0;
            for (const auto& t : prob.constraints[k].terms) ax += inner(t.coef, X[t.block]);
            rp(k) = prob.constraints[k].rhs - ax;
        }
        double mu = 0.0;
        for (int b = 0; b < nblocks; ++b) mu += (X[b].array() * Z[b].transpose().array()).sum().real();
        mu /= ntotal;
        double rd_norm = 0.0;
        for (int b = 0; b < nblocks; ++b) {
            Rd[b] = prob.cost[b] - Z[b];
            for (const auto& [k, t] : touching[b])
                Rd[b] -= y(k) * prob.constraints[k].terms[t].coef;
            rd_norm = std::max(rd_norm, Rd[b].norm());
        }
        const double rel_p = rp.cwiseAbs().maxCoeff() / (1.0 + bmax);
        const double rel_d = rd_norm / (1.0 + cnorm);
        const double rel_g = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
        res.pobj = pobj;
        res.dobj = dobj;
        res.iterations = iter;
        if (rel_p <= tol && rel_d <= tol && rel_g <= tol) {
            res.converged = true;
            break;
        }
        if (mu < 1e-30) break;

        for (int b = 0; b < nblocks; ++b) {
            Eigen::LLT<MatrixXcd> llt(Z[b]);
            if (llt.info() != Eigen::Success) { res.converged = false; goto done; }
            Zinv[b] = llt.solve(MatrixXcd::Identity(prob.dims[b], prob.dims[b]));
        }

        {
            // Schur complement M_kl = Re tr(A_k X A_l Zinv), shared by both
            // predictor and corrector solves.
            Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m, m);
            for (int b = 0; b < nblocks; ++b) {
                for (const auto& [l, tl] : touching[b]) {
                    const MatrixXcd t_lb =
                        X[b] * prob.constraints[l].terms[tl].coef * Zinv[b];
                    for (const auto& [k, tk] : touching[b])
                        M(k, l) += inner(prob.constraints[k].terms[tk].coef, t_lb);
                }
            }
            M = 0.5 * (M + M.transpose()).eval();
            Eigen::LDLT<Eigen::MatrixXd> mldlt;
            double ridge = 0.0;
            for (int attempt = 0; attempt < 4; ++attempt) {
                Eigen::MatrixXd reg = M;
                if (attempt > 0) {
                    ridge = std::pow(10.0, attempt - 14) * (1.0 + M.diagonal().maxCoeff());
                    reg += ridge * Eigen::MatrixXd::Identity(m, m);
                }
                mldlt.compute(reg);
                if (mldlt.info() == Eigen::Success) break;
            }

            auto solve_direction = [&](std::vector<MatrixXcd>& dx, std::vector<MatrixXcd>& dz,
                                       VectorXd& dy) {
                VectorXd rhs(m);
                for (int b = 0; b < nblocks; ++b) U[b] = (Rc[b] - X[b] * Rd[b]) * Zinv[b];
                for (int k = 0; k < m; ++k) {
                    double acc = 0.0;
                    for (const auto& t : prob.constraints[k].terms)
                        acc += inner(t.coef, U[t.block]);
                    rhs(k) = rp(k) - acc;
                }
                dy = mldlt.solve(rhs);
                for (int b = 0; b < nblocks; ++b) {
                    dz[b] = Rd[b];
                    for (const auto& [k, t] : touching[b])
                        dz[b] -= dy(k) * prob.constraints[k].terms[t].coef;
                    dz[b] = hermitize(dz[b]);
                    dx[b] = hermitize((Rc[b] - X[b] * dz[b]) * Zinv[b]);
                }
            };

            // Predictor (affine scaling, sigma = 0).
            for (int b = 0; b < nblocks; ++b) Rc[b] = -X[b] * Z[b];
            VectorXd dya;
            solve_direction(dXa, dZa, dya);
            double ap = 1.0, ad = 1.0;
            for (int b = 0; b < nblocks; ++b) {
                ap = std::min(ap, max_step(X[b], dXa[b]));
                ad = std::min(ad, max_step(Z[b], dZa[b]));
            }
            double mu_aff = 0.0;
            for (int b = 0; b < nblocks; ++b)
                mu_aff += ((X[b] + ap * dXa[b]).array() *
                           (Z[b] + ad * dZa[b]).transpose().array())
                              .sum()
                              .real();
            mu_aff /= ntotal;
            double sigma = std::pow(std::max(mu_aff, 0.0) / mu, 3.0);
            sigma = std::clamp(sigma, 1e-8, 1.0);

            // Corrector.
            for (int b = 0; b < nblocks; ++b)
                Rc[b] = sigma * mu * MatrixXcd::Identity(prob.dims[b], prob.dims[b]) -
                        X[b] * Z[b] - dXa[b] * dZa[b];
            VectorXd dy;
            solve_direction(dX, dZ, dy);

            double sp = 1.0, sd = 1.0;
            for (int b = 0; b < nblocks; ++b) {
                sp = std::min(sp, 0.98 * max_step(X[b], dX[b]));
                sd = std::min(sd, 0.98 * max_step(Z[b], dZ[b]));
            }
            sp = std::min(sp, 1.0);
            sd = std::min(sd, 1.0);
            for (int b = 0; b < nblocks; ++b) {
                X[b] = hermitize(X[b] + sp * dX[b]);
                Z[b] = hermitize(Z[b] + sd * dZ[b]);
            }
            y += sd * dy;
        }
    }
done:
    res.x = std::move(X);
    res.y = y;
    return res;
}

// ---- Downlink power-control instance in scaled form ---------------------

// Per-user variable scaling G_i = t_i * G~_i with t_i = Gamma*noise/||h_i||^2
// and unit-norm channels; SINR rows become O(1) with rhs 1, power rows are
// divided by their caps.
struct ScaledProblem {
    BlockSdp prob;        // blocks: |S| Gram blocks, then slacks (all phases)
    std::vector<double> t;     // per-user variable scale
    int n_users = 0;
    int n_sinr = 0;
    int n_power = 0;
    int tau_block = -1;   // phase-1 violation variable, -1 in phase 2
};

ScaledProblem build_scaled(const SdpInstance& inst, bool phase1) {
    const int n = static_cast<int>(inst.served.size());
    const int d = inst.dim();
    const int jn = inst.num_aps;
    ScaledProblem sp;
    sp.n_users = n;
    sp.n_sinr = n;
    sp.n_power = jn;

    std::vector<VectorXcd> hn(n);
    sp.t.resize(n);
    for (int i = 0; i < n; ++i) {
        const double nrm2 = inst.channels[i].squaredNorm();
        if (nrm2 <= 0.0) throw std::invalid_argument("zero channel for served user");
        hn[i] = inst.channels[i] / std::sqrt(nrm2);
        sp.t[i] = inst.gamma_lin * inst.noise_w / nrm2;
    }

    auto& prob = sp.prob;
    // Blocks: n Gram blocks, n SINR slacks, J power slacks, optional tau.
    for (int i = 0; i < n; ++i) prob.dims.push_back(d);
    const int slack0 = n;
    for (int i = 0; i < n; ++i) prob.dims.push_back(1);
    const int power0 = slack0 + n;
    for (int j = 0; j < jn; ++j) prob.dims.push_back(1);
    if (phase1) {
        sp.tau_block = power0 + jn;
        prob.dims.push_back(1);
    }

    const double tmax = n > 0 ? *std::max_element(sp.t.begin(), sp.t.end()) : 1.0;
    prob.cost.resize(prob.dims.size());
    for (std::size_t b = 0; b < prob.dims.size(); ++b)
        prob.cost[b] = MatrixXcd::Zero(prob.dims[b], prob.dims[b]);
    if (phase1) {
        prob.cost[sp.tau_block](0, 0) = 1.0;
    } else {
        for (int i = 0; i < n; ++i)
            prob.cost[i] = (sp.t[i] / tmax) * MatrixXcd::Identity(d, d);
    }

    const MatrixXcd one = MatrixXcd::Constant(1, 1, 1.0);
    // SINR rows: <H~_i,G~_i> - Gamma sum_m <H~_m,G~_m> - s_i (+ tau) = 1.
    for (int i = 0; i < n; ++i) {
        Constraint con;
        con.rhs = 1.0;
        con.terms.push_back({i, hn[i] * hn[i].adjoint()});
        for (int mloc : inst.interferers[i])
            con.terms.push_back({mloc, -inst.gamma_lin * (hn[mloc] * hn[mloc].adjoint())});
        con.terms.push_back({slack0 + i, -one});
        if (phase1) con.terms.push_back({sp.tau_block, one});
        prob.constraints.push_back(std::move(con));
    }
    // Power rows: sum_i (t_i/P_j) <Z_j,G~_i> + u_j = 1.
    for (int j = 0; j < jn; ++j) {
        Constraint con;
        con.rhs = 1.0;
        const double cap = inst.power_caps(j);
        if (cap <= 0.0) throw std::invalid_argument("nonpositive AP power cap");
        for (int i = 0; i < n; ++i) {
            MatrixXcd zsel = MatrixXcd::Zero(d, d);
            for (int k = 0; k < inst.num_elements; ++k)
                zsel(j * inst.num_elements + k, j * inst.num_elements + k) = sp.t[i] / cap;
            con.terms.push_back({i, std::move(zsel)});
        }
        con.terms.push_back({power0 + j, one});
        prob.constraints.push_back(std::move(con));
    }
    return sp;
}

// Worst relative violation of the original inequalities at the scaled point.
double scaled_residual(const SdpInstance& inst, const ScaledProblem& sp,
                       const std::vector<MatrixXcd>& x) {
    const int n = sp.n_users;
    double worst = 0.0;
    std::vector<double> recv(n);
    std::vector<VectorXcd> hn(n);
    for (int i = 0; i < n; ++i) {
        hn[i] = inst.channels[i].normalized();
        recv[i] = (hn[i].adjoint() * x[i] * hn[i]).real().value();
    }
    for (int i = 0; i < n; ++i) {
        double lhs = recv[i];
        for (int mloc : inst.interferers[i]) lhs -= inst.gamma_lin * recv[mloc];
        worst = std::max(worst, 1.0 - lhs);
    }
    for (int j = 0; j < inst.num_aps; ++j) {
        double used = 0.0;
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < inst.num_elements; ++k)
                used += sp.t[i] *
                        x[i](j * inst.num_elements + k, j * inst.num_elements + k).real();
        worst = std::max(worst, used / inst.power_caps(j) - 1.0);
    }
    return std::max(worst, 0.0);
}

}  // namespace

SdpInstance build_instance(const std::vector<int>& served, const ChannelRealization& channel,
                           const std::vector<ApConfig>& aps, const RadioParams& radio) {
    SdpInstance inst;
    inst.served = served;
    inst.num_aps = static_cast<int>(aps.size());
    inst.num_elements = aps.empty() ? 0 : aps.front().num_elements;
    inst.gamma_lin = std::pow(2.0, radio.dl_rate_threshold / radio.dl_bandwidth) - 1.0;
    inst.noise_w = radio.noise_psd * radio.dl_bandwidth;
    inst.power_caps.resize(inst.num_aps);
    for (int j = 0; j < inst.num_aps; ++j)
        inst.power_caps(j) = aps[j].max_power - aps[j].circuit_power;
    std::vector<int> local(channel.num_users(), -1);
    for (std::size_t s = 0; s < served.size(); ++s) {
        local[served[s]] = static_cast<int>(s);
        inst.channels.push_back(channel.dl_channel[served[s]]);
    }
    inst.interferers.resize(served.size());
    for (std::size_t s = 0; s < served.size(); ++s)
        for (int m : channel.interferers[served[s]])
            if (local[m] >= 0) inst.interferers[s].push_back(local[m]);
    return inst;
}

SdpSolution solve(const SdpInstance& instance, const SolveOptions& opts) {
    SdpSolution sol;
    if (instance.served.empty()) {
        sol.status = SdpStatus::Feasible;
        sol.objective = 0.0;
        return sol;
    }

    // Phase 1: minimize the common SINR violation tau (always strictly
    // feasible, so non-convergence here is a numerical failure, not
    // infeasibility).
    ScaledProblem p1 = build_scaled(instance, /*phase1=*/true);
    IpmResult r1 = ipm_solve(p1.prob, opts.tol, opts.max_iterations);
    sol.iterations = r1.iterations;
    if (!r1.converged) {
        sol.status = SdpStatus::NumericalFailure;
        return sol;
    }
    const double tau = r1.x[p1.tau_block](0, 0).real();
    sol.feasibility_gap = tau;
    if (tau > opts.feas_tol && r1.dobj > opts.feas_tol) {
        sol.status = SdpStatus::Infeasible;  // dual bound certifies tau* > 0
        return sol;
    }
    if (tau > opts.feas_tol) {
        sol.status = SdpStatus::NumericalFailure;  // converged but inconsistent
        return sol;
    }
    if (opts.feasibility_only) {
        sol.status = SdpStatus::Feasible;
        return sol;
    }

    // Phase 2: total-power minimisation.
    ScaledProblem p2 = build_scaled(instance, /*phase1=*/false);
    IpmResult r2 = ipm_solve(p2.prob, opts.tol, opts.max_iterations);
    sol.iterations += r2.iterations;
    if (!r2.converged) {
        sol.status = SdpStatus::NumericalFailure;
        return sol;
    }
    sol.status = SdpStatus::Feasible;
    sol.max_residual = scaled_residual(instance, p2, r2.x);
    sol.gram.resize(p2.n_users);
    sol.objective = 0.0;
    double min_eig = 0.0;
    for (int i = 0; i < p2.n_users; ++i) {
        sol.gram[i] = p2.t[i] * r2.x[i];
        sol.objective += sol.gram[i].trace().real();
        Eigen::SelfAdjointEigenSolver<MatrixXcd> es(sol.gram[i], Eigen::EigenvaluesOnly);
        min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
    }
    sol.min_eigenvalue = min_eig;
    return sol;
}

RankCheck check_rank(const MatrixXcd& gram, double tol) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(gram, Eigen::EigenvaluesOnly);
    VectorXd ev = es.eigenvalues().reverse();  // descending
    RankCheck out;
    if (ev.size() == 0 || ev(0) <= 0.0) {
        out.rank1 = true;
        out.ratio = 0.0;
        return out;
    }
    out.ratio = ev.size() > 1 ? std::max(ev(1), 0.0) / ev(0) : 0.0;
    out.rank1 = out.ratio <= tol;
    return out;
}

VectorXcd recover_beamformer(const MatrixXcd& gram) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(gram);
    const auto last = es.eigenvalues().size() - 1;
    const double lead = std::max(es.eigenvalues()(last), 0.0);
    return std::sqrt(lead) * es.eigenvectors().col(last);
}

RecoveredBeams recover_beamformers(const SdpInstance& instance, const SdpSolution& sol,
                                   const RecoveryOptions& opts, std::mt19937_64& rng) {
    RecoveredBeams out;
    const int n = static_cast<int>(instance.served.size());
    if (sol.status != SdpStatus::Feasible) return out;
    out.beams.resize(n);

    std::vector<int> randomized;
    for (int i = 0; i < n; ++i) {
        if (check_rank(sol.gram[i], opts.rank_tol).rank1)
            out.beams[i] = recover_beamformer(sol.gram[i]);
        else
            randomized.push_back(i);
    }

    auto satisfies = [&](const std::vector<VectorXcd>& beams) {
        std::vector<double> recv(n);
        for (int i = 0; i < n; ++i)
            recv[i] = std::norm(instance.channels[i].dot(beams[i]));
        for (int i = 0; i < n; ++i) {
            double need = instance.noise_w;
            for (int mloc : instance.interferers[i]) need += recv[mloc];
            need *= instance.gamma_lin;
            if (recv[i] < need * (1.0 - opts.sinr_slack)) return false;
        }
        for (int j = 0; j < instance.num_aps; ++j) {
            double used = 0.0;
            for (int i = 0; i < n; ++i)
                used += beams[i]
                            .segment(j * instance.num_elements, instance.num_elements)
                            .squaredNorm();
            if (used > instance.power_caps(j) * (1.0 + opts.sinr_slack)) return false;
        }
        return true;
    };

    if (randomized.empty()) {
        out.ok = satisfies(out.beams);
        return out;
    }

    std::normal_distribution<double> gauss(0.0, M_SQRT1_2);
    for (int round = 0; round < opts.candidates; ++round) {
        for (int i : randomized) {
            Eigen::SelfAdjointEigenSolver<MatrixXcd> es(sol.gram[i]);
            MatrixXcd root = es.eigenvectors() *
                             es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                             es.eigenvectors().adjoint();
            VectorXcd zeta(instance.dim());
            for (int k = 0; k < instance.dim(); ++k) zeta(k) = Cplx(gauss(rng), gauss(rng));
            VectorXcd cand = root * zeta;
            // Scale so the candidate never uses more per-AP power than its
            // Gram block was allotted.
            double beta = 1e30;
            for (int j = 0; j < instance.num_aps; ++j) {
                const double cand_p =
                    cand.segment(j * instance.num_elements, instance.num_elements)
                        .squaredNorm();
                double gram_p = 0.0;
                for (int k = 0; k < instance.num_elements; ++k)
                    gram_p += sol.gram[i](j * instance.num_elements + k,
                                          j * instance.num_elements + k)
                                  .real();
                if (cand_p > 0.0) beta = std::min(beta, gram_p / cand_p);
            }
            out.beams[i] = std::sqrt(std::max(beta, 0.0)) * cand;
        }
        if (satisfies(out.beams)) {
            out.ok = true;
            return out;
        }
    }
    out.ok = false;  // recovery failure, distinct from infeasibility
    return out;
}

VectorXd lp_power_oracle(const Eigen::MatrixXi& assoc, const Eigen::MatrixXd& pathloss,
                         const Eigen::MatrixXd& rayleigh,
                         const std::vector<UserState>& users, const RadioParams& radio) {
    const int n = static_cast<int>(users.size());
    VectorXd powers = VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
        if (assoc.row(i).sum() == 0) continue;
        if (assoc.row(i).sum() > 1) throw std::invalid_argument("multiple APs per user");
        int j = 0;
        while (assoc(i, j) == 0) ++j;
        const double budget = users[i].power_budget();
        auto snr_ok = [&](double p) {
            return ul_snr(true, p, rayleigh(i, j), pathloss(i, j), radio, n) >=
                   radio.ul_snr_threshold;
        };
        if (!snr_ok(budget)) continue;  // unreachable within budget -> 0
        double lo = 0.0, hi = budget;
        for (int it = 0; it < 200 && (hi - lo) > 1e-16 * budget; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (snr_ok(mid))
                hi = mid;
            else
                lo = mid;
        }
        powers(i) = hi;
    }
    return powers;
}

// ---- Fixture serialization ----------------------------------------------

namespace {

json cvec_json(const VectorXcd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back({v(i).real(), v(i).imag()});
    return out;
}

VectorXcd cvec_load(const json& j) {
    VectorXcd v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i)
        v(i) = Cplx(j.at(i).at(0).get<double>(), j.at(i).at(1).get<double>());
    return v;
}

}  // namespace

std::string sdp_instance_to_json(const SdpInstance& inst) {
    json j;
    j["format"] = "fopsim-sdp-instance-v1";
    j["served"] = inst.served;
    j["gamma_lin"] = inst.gamma_lin;
    j["noise_w"] = inst.noise_w;
    j["num_aps"] = inst.num_aps;
    j["num_elements"] = inst.num_elements;
    j["power_caps"] = std::vector<double>(inst.power_caps.data(),
                                          inst.power_caps.data() + inst.power_caps.size());
    j["interferers"] = inst.interferers;
    json ch = json::array();
    for (const auto& h : inst.channels) ch.push_back(cvec_json(h));
    j["channels"] = std::move(ch);
    return j.dump();
}

SdpInstance sdp_instance_from_json(const std::string& text) {
    json j = json::parse(text);
    if (j.value("format", "") != "fopsim-sdp-instance-v1")
        throw std::runtime_error("unknown SDP instance format");
    SdpInstance inst;
    inst.served = j["served"].get<std::vector<int>>();
    inst.gamma_lin = j["gamma_lin"].get<double>();
    inst.noise_w = j["noise_w"].get<double>();
    inst.num_aps = j["num_aps"].get<int>();
    inst.num_elements = j["num_elements"].get<int>();
    const auto caps = j["power_caps"].get<std::vector<double>>();
    inst.power_caps = Eigen::Map<const VectorXd>(caps.data(), caps.size());
    inst.interferers = j["interferers"].get<std::vector<std::vector<int>>>();
    for (const auto& h : j["channels"]) inst.channels.push_back(cvec_load(h));
    return inst;
}

std::string sdp_solution_to_json(const SdpSolution& sol) {
    json j;
    j["format"] = "fopsim-sdp-solution-v1";
    j["status"] = sol.status == SdpStatus::Feasible     ? "feasible"
                  : sol.status == SdpStatus::Infeasible ? "infeasible"
                                                        : "numerical-failure";
    j["objective"] = sol.objective;
    j["max_residual"] = sol.max_residual;
    j["min_eigenvalue"] = sol.min_eigenvalue;
    j["feasibility_gap"] = sol.feasibility_gap;
    j["iterations"] = sol.iterations;
    json grams = json::array();
    for (const auto& g : sol.gram) {
        json rows = json::array();
        for (Eigen::Index r = 0; r < g.rows(); ++r) {
            json row = json::array();
            for (Eigen::Index c = 0; c < g.cols(); ++c)
                row.push_back({g(r, c).real(), g(r, c).imag()});
            rows.push_back(std::move(row));
        }
        grams.push_back(std::move(rows));
    }
    j["gram"] = std::move(grams);
    return j.dump();
}

}  // namespace fopsim
