#include "wlanfair/fairness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace wlanfair {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// The optimizer works on logit(tau); these bounds keep the map invertible
// and the objective finite.
constexpr double kTauFloor = 1e-9;
constexpr double kTauCeil = 1.0 - 1e-7;

double clamp_tau(double t) { return std::clamp(t, kTauFloor, kTauCeil); }
double logit(double t) { return std::log(t / (1.0 - t)); }
double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

// Reduced maximization target over the active stations:
//   U(tau) = sum_j [ w_j ln tau_j + (C - w_j) ln(1 - tau_j) ] - C ln T_av
// which is the weighted log throughput up to a tau-independent constant.
// T_av is affine in each tau_j, so the partial derivative is the exact
// two-point slice T_av(tau_j := 1) - T_av(tau_j := 0); no finite differences
// inside the optimizer.
struct Objective {
    const NetworkScenario& sc;
    const DurationClassing& cl;
    std::vector<int> active;
    std::vector<double> w_active;
    double c_total;

    Objective(const NetworkScenario& sc_, const DurationClassing& cl_, const FairnessWeights& fw)
        : sc(sc_), cl(cl_), c_total(0.0) {
        for (size_t j = 0; j < fw.w.size(); ++j) {
            if (fw.w[j] > 0) {
                active.push_back(static_cast<int>(j));
                w_active.push_back(fw.w[j]);
                c_total += fw.w[j];
            }
        }
    }

    size_t dim() const { return active.size(); }

    std::vector<double> full_tau(const std::vector<double>& x) const {
        std::vector<double> tau(sc.stations.size(), 0.0);
        for (size_t k = 0; k < active.size(); ++k)
            tau[static_cast<size_t>(active[k])] = clamp_tau(sigmoid(x[k]));
        return tau;
    }

    double t_av(const std::vector<double>& tau) const {
        return expected_slot(tau, sc, cl).t_av_us;
    }

    // Value of U at tau (maximization form).
    double value_tau(const std::vector<double>& tau) const {
        double u = 0.0;
        for (size_t k = 0; k < active.size(); ++k) {
            double t = tau[static_cast<size_t>(active[k])];
            u += w_active[k] * std::log(t) + (c_total - w_active[k]) * std::log1p(-t);
        }
        return u - c_total * std::log(t_av(tau));
    }

    // dU/dtau_j for the active stations, exact.
    std::vector<double> grad_tau(const std::vector<double>& tau) const {
        double tav = t_av(tau);
        std::vector<double> g(active.size());
        std::vector<double> probe = tau;
        for (size_t k = 0; k < active.size(); ++k) {
            size_t j = static_cast<size_t>(active[k]);
            double t = tau[j];
            probe[j] = 1.0;
            double t1 = t_av(probe);
            probe[j] = 0.0;
            double t0 = t_av(probe);
            probe[j] = t;
            g[k] = w_active[k] / t - (c_total - w_active[k]) / (1.0 - t) -
                   c_total / tav * (t1 - t0);
        }
        return g;
    }

    // Minimization value/gradient in logit coordinates.
    double eval(const std::vector<double>& x, std::vector<double>* grad_x) const {
        std::vector<double> tau = full_tau(x);
        double f = -value_tau(tau);
        if (!std::isfinite(f)) f = 1e18;
        if (grad_x) {
            std::vector<double> gt = grad_tau(tau);
            grad_x->resize(active.size());
            for (size_t k = 0; k < active.size(); ++k) {
                double t = tau[static_cast<size_t>(active[k])];
                (*grad_x)[k] = -gt[k] * t * (1.0 - t);
            }
        }
        return f;
    }
};

double inf_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// Dense BFGS with Armijo backtracking. Small n, no need for L-BFGS.
bool bfgs_minimize(const Objective& obj, std::vector<double>& x, double& f_out) {
    size_t n = x.size();
    std::vector<double> g(n), g_new(n), x_new(n), s(n), y(n);
    std::vector<std::vector<double>> h(n, std::vector<double>(n, 0.0));
    for (size_t i = 0; i < n; ++i) h[i][i] = 1.0;

    double f = obj.eval(x, &g);
    bool moved = false;
    for (int iter = 0; iter < 600; ++iter) {
        if (inf_norm(g) < 1e-11) break;
        std::vector<double> d(n, 0.0);
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < n; ++j) d[i] -= h[i][j] * g[j];
        double slope = 0.0;
        for (size_t i = 0; i < n; ++i) slope += d[i] * g[i];
        if (slope >= 0) { // reset to steepest descent if curvature went bad
            for (size_t i = 0; i < n; ++i) {
                for (size_t j = 0; j < n; ++j) h[i][j] = 0.0;
                h[i][i] = 1.0;
                d[i] = -g[i];
            }
            slope = 0.0;
            for (size_t i = 0; i < n; ++i) slope -= g[i] * g[i];
            if (slope >= 0) break;
        }
        double step = 1.0;
        double f_new = f;
        bool ok = false;
        for (int bt = 0; bt < 60; ++bt) {
            for (size_t i = 0; i < n; ++i) x_new[i] = x[i] + step * d[i];
            f_new = obj.eval(x_new, nullptr);
            if (f_new <= f + 1e-4 * step * slope) {
                ok = true;
                break;
            }
            step *= 0.5;
        }
        if (!ok) break;
        obj.eval(x_new, &g_new);
        double sy = 0.0;
        for (size_t i = 0; i < n; ++i) {
            s[i] = x_new[i] - x[i];
            y[i] = g_new[i] - g[i];
            sy += s[i] * y[i];
        }
        if (sy > 1e-14) {
            double rho = 1.0 / sy;
            // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            std::vector<double> hy(n, 0.0);
            for (size_t i = 0; i < n; ++i)
                for (size_t j = 0; j < n; ++j) hy[i] += h[i][j] * y[j];
            double yhy = 0.0;
            for (size_t i = 0; i < n; ++i) yhy += y[i] * hy[i];
            for (size_t i = 0; i < n; ++i)
                for (size_t j = 0; j < n; ++j)
                    h[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) +
                               rho * rho * yhy * s[i] * s[j] + rho * s[i] * s[j];
        }
        x = x_new;
        g = g_new;
        double df = f - f_new;
        f = f_new;
        moved = true;
        if (df < 1e-14 * (std::abs(f) + 1.0)) break;
    }
    f_out = f;
    return moved || std::isfinite(f);
}

// Gaussian elimination with partial pivoting; returns false on a singular
// system.
bool solve_linear(std::vector<std::vector<double>> a, std::vector<double> b,
                  std::vector<double>& out) {
    size_t n = b.size();
    for (size_t col = 0; col < n; ++col) {
        size_t piv = col;
        for (size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) < 1e-300) return false;
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        for (size_t r = col + 1; r < n; ++r) {
            double fac = a[r][col] / a[col][col];
            for (size_t c = col; c < n; ++c) a[r][c] -= fac * a[col][c];
            b[r] -= fac * b[col];
        }
    }
    out.assign(n, 0.0);
    for (size_t i = n; i-- > 0;) {
        double acc = b[i];
        for (size_t j = i + 1; j < n; ++j) acc -= a[i][j] * out[j];
        out[i] = acc / a[i][i];
    }
    return true;
}

// Newton iteration on the first-order conditions, started from the BFGS
// winner. The Jacobian is cheap finite differences of the exact gradient;
// the polish typically lands machine-accurate in a handful of steps.
void newton_polish(const Objective& obj, std::vector<double>& tau_active) {
    size_t n = tau_active.size();
    auto to_full = [&](const std::vector<double>& ta) {
        std::vector<double> tau(obj.sc.stations.size(), 0.0);
        for (size_t k = 0; k < n; ++k)
            tau[static_cast<size_t>(obj.active[k])] = ta[k];
        return tau;
    };
    auto grad_at = [&](const std::vector<double>& ta) { return obj.grad_tau(to_full(ta)); };

    std::vector<double> g = grad_at(tau_active);
    for (int iter = 0; iter < 40; ++iter) {
        double gn = inf_norm(g);
        if (gn < 1e-10) break;
        std::vector<std::vector<double>> jac(n, std::vector<double>(n));
        std::vector<double> probe = tau_active;
        for (size_t k = 0; k < n; ++k) {
            double h = 1e-7 * std::max(tau_active[k], 1e-3);
            probe[k] = tau_active[k] + h;
            std::vector<double> gp = grad_at(probe);
            probe[k] = tau_active[k] - h;
            std::vector<double> gm = grad_at(probe);
            probe[k] = tau_active[k];
            for (size_t r = 0; r < n; ++r) jac[r][k] = (gp[r] - gm[r]) / (2.0 * h);
        }
        std::vector<double> rhs(n), delta;
        for (size_t r = 0; r < n; ++r) rhs[r] = -g[r];
        if (!solve_linear(jac, rhs, delta)) return;
        double step = 1.0;
        bool accepted = false;
        for (int bt = 0; bt < 30; ++bt) {
            std::vector<double> cand(n);
            bool in_bounds = true;
            for (size_t k = 0; k < n; ++k) {
                cand[k] = tau_active[k] + step * delta[k];
                if (cand[k] <= kTauFloor || cand[k] >= kTauCeil) in_bounds = false;
            }
            if (in_bounds) {
                std::vector<double> g_cand = grad_at(cand);
                if (inf_norm(g_cand) < gn) {
                    tau_active = cand;
                    g = g_cand;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if (!accepted) return;
    }
}

} // namespace

const char* criterion_name(Criterion c) {
    switch (c) {
        case Criterion::DCF: return "dcf";
        case Criterion::PF: return "pf";
        case Criterion::LPF: return "lpf";
        case Criterion::MLPF: return "mlpf";
    }
    return "?";
}

bool criterion_from_name(const std::string& name, Criterion& out) {
    std::string low;
    low.reserve(name.size());
    for (char ch : name) low.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    if (low == "dcf") out = Criterion::DCF;
    else if (low == "pf") out = Criterion::PF;
    else if (low == "lpf") out = Criterion::LPF;
    else if (low == "mlpf") out = Criterion::MLPF;
    else return false;
    return true;
}

double FairnessWeights::sum() const {
    double c = 0.0;
    for (double x : w) c += x;
    return c;
}

FairnessWeights effective_lambdas(const NetworkScenario& sc, Criterion crit) {
    size_t n = sc.stations.size();
    FairnessWeights fw;
    fw.criterion = crit;
    fw.w.assign(n, 0.0);
    fw.lambda_eff.assign(n, 0.0);
    for (size_t j = 0; j < n; ++j) {
        const auto& st = sc.stations[j];
        double lam = st.lambda_pkt_s;
        if (crit == Criterion::MLPF) {
            // A station can never carry more than its own line rate; offered
            // load beyond that must not buy extra weight.
            double cap = st.rate_bps / (8.0 * st.payload_bytes);
            lam = std::min(lam, cap);
        }
        fw.lambda_eff[j] = lam;
        fw.lambda_max = std::max(fw.lambda_max, lam);
    }
    if (!(fw.lambda_max > 0))
        throw std::invalid_argument("effective_lambdas: every station has lambda = 0");
    for (size_t j = 0; j < n; ++j) {
        double lam = fw.lambda_eff[j];
        if (crit == Criterion::DCF || crit == Criterion::PF) {
            fw.w[j] = lam > 0 ? 1.0 : 0.0;
        } else if (std::isinf(fw.lambda_max)) {
            fw.w[j] = std::isinf(lam) ? 1.0 : 0.0;
        } else {
            fw.w[j] = lam / fw.lambda_max;
        }
    }
    return fw;
}

double utility(const std::vector<double>& s_bps, const FairnessWeights& w) {
    if (s_bps.size() != w.w.size())
        throw std::invalid_argument("utility: size mismatch");
    double u = 0.0;
    for (size_t j = 0; j < s_bps.size(); ++j) {
        if (w.w[j] <= 0) continue;
        if (s_bps[j] <= 0) return -kInf;
        u += w.w[j] * std::log(s_bps[j]);
    }
    return u;
}

double jain_index(const std::vector<double>& xs) {
    if (xs.empty()) throw std::invalid_argument("jain_index: empty input");
    double sum = 0.0, sum2 = 0.0;
    for (double x : xs) {
        if (x < 0) throw std::invalid_argument("jain_index: negative share");
        sum += x;
        sum2 += x * x;
    }
    if (sum2 == 0.0) throw std::invalid_argument("jain_index: all-zero input");
    return sum * sum / (static_cast<double>(xs.size()) * sum2);
}

double stationarity_residual(const std::vector<double>& taus, const FairnessWeights& w,
                             const NetworkScenario& sc, const DurationClassing& cl) {
    if (taus.size() != sc.stations.size() || w.w.size() != taus.size())
        throw std::invalid_argument("stationarity_residual: size mismatch");
    double c_total = w.sum();
    double t_av = expected_slot(taus, sc, cl).t_av_us;
    double worst = 0.0;
    std::vector<double> probe = taus;
    for (size_t j = 0; j < taus.size(); ++j) {
        if (w.w[j] <= 0) continue;
        double t = taus[j];
        if (t < 1e-12 || t > 1.0 - 1e-12) return kInf;
        double h = std::min({1e-6, t / 2.0, (1.0 - t) / 2.0});
        probe[j] = t + h;
        double tp = expected_slot(probe, sc, cl).t_av_us;
        probe[j] = t - h;
        double tm = expected_slot(probe, sc, cl).t_av_us;
        probe[j] = t;
        double rhs = c_total / t_av * (tp - tm) / (2.0 * h);
        double lhs = w.w[j] / t - (c_total - w.w[j]) / (1.0 - t);
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

AllocationResult optimize(const NetworkScenario& sc, Criterion crit) {
    sc.validate();
    DurationClassing cl = classify_stations(sc);
    size_t n = sc.stations.size();
    AllocationResult out;
    out.criterion = crit;

    if (crit == Criterion::DCF) {
        EquilibriumSolution eq = solve_equilibrium(sc);
        out.tau_opt = eq.tau;
        out.s_bps = eq.throughput_bps;
        out.aggregate_bps = eq.aggregate_bps;
        out.p_eq = eq.p_eq;
        out.b_idle = eq.b_idle;
        out.cw_out.resize(n);
        for (size_t j = 0; j < n; ++j) out.cw_out[j] = sc.cw_min_of(static_cast<int>(j));
        FairnessWeights unit = effective_lambdas(sc, Criterion::DCF);
        out.utility = utility(out.s_bps, unit);
        std::vector<double> norm(n);
        for (size_t j = 0; j < n; ++j) norm[j] = out.s_bps[j] / sc.stations[j].rate_bps;
        out.jain = jain_index(norm);
        out.stationarity_residual = std::numeric_limits<double>::quiet_NaN();
        return out;
    }

    FairnessWeights fw = effective_lambdas(sc, crit);
    Objective obj(sc, cl, fw);
    if (obj.dim() == 0)
        throw SolverError("optimize: no station carries weight");

    // Multi-start: the plain-DCF operating point plus a spread of uniform
    // attempt rates. The landscape is mildly multimodal when rates differ a
    // lot; five starts has been enough everywhere it was checked.
    std::vector<std::vector<double>> starts;
    try {
        EquilibriumSolution eq = solve_equilibrium(sc);
        std::vector<double> x0(obj.dim());
        for (size_t k = 0; k < obj.dim(); ++k)
            x0[k] = logit(std::clamp(eq.tau[static_cast<size_t>(obj.active[k])], 1e-6, 0.9));
        starts.push_back(std::move(x0));
    } catch (const SolverError&) {
        // fall through to the uniform starts
    }
    for (double t0 : {0.02, 0.06, 0.15, 0.30})
        starts.emplace_back(obj.dim(), logit(t0));

    double best_f = kInf;
    std::vector<double> best_x;
    for (auto& x : starts) {
        double f = kInf;
        if (!bfgs_minimize(obj, x, f)) continue;
        if (f < best_f) {
            best_f = f;
            best_x = x;
        }
    }
    if (!std::isfinite(best_f))
        throw SolverError("optimize: no start produced a finite utility");

    std::vector<double> tau_active(obj.dim());
    for (size_t k = 0; k < obj.dim(); ++k) tau_active[k] = clamp_tau(sigmoid(best_x[k]));
    {
        std::vector<double> polished = tau_active;
        newton_polish(obj, polished);
        auto full_of = [&](const std::vector<double>& ta) {
            std::vector<double> tau(n, 0.0);
            for (size_t k = 0; k < obj.dim(); ++k)
                tau[static_cast<size_t>(obj.active[k])] = ta[k];
            return tau;
        };
        if (obj.value_tau(full_of(polished)) >= obj.value_tau(full_of(tau_active)) - 1e-9)
            tau_active = polished;
    }

    out.tau_opt.assign(n, 0.0);
    for (size_t k = 0; k < obj.dim(); ++k)
        out.tau_opt[static_cast<size_t>(obj.active[k])] = tau_active[k];

    ThroughputResult thr = throughput(out.tau_opt, sc, cl);
    out.s_bps = thr.per_station_bps;
    out.aggregate_bps = thr.aggregate_bps;
    out.utility = utility(out.s_bps, fw);
    std::vector<double> norm(n);
    for (size_t j = 0; j < n; ++j) norm[j] = out.s_bps[j] / sc.stations[j].rate_bps;
    out.jain = jain_index(norm);
    out.stationarity_residual = stationarity_residual(out.tau_opt, fw, sc, cl);

    OperatingPoint op = operating_point_at(sc, out.tau_opt);
    out.p_eq = op.p_eq;
    out.b_idle = op.b_idle;
    out.cw_out.resize(n);
    for (size_t j = 0; j < n; ++j) {
        if (out.tau_opt[j] > 0)
            out.cw_out[j] = invert_to_w0(out.tau_opt[j], sc.phy.max_backoff_stage, op.p_eq[j],
                                         op.b_idle[j]);
        else
            out.cw_out[j] = sc.cw_min_of(static_cast<int>(j));
    }
    return out;
}

} // namespace wlanfair
