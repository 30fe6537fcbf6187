#include "wlanfair/analytic.hpp"

#include <algorithm>
#include <cmath>

namespace wlanfair {

namespace {

constexpr double kPicardDamping = 0.5;
constexpr double kConvergenceTol = 1e-9;
constexpr int kMaxSweeps = 10000;

// Paced-smear transition sharpness and the empty-share scale below which the
// smear fades out; see queue_occupancy callers. Calibrated against
// slot-level simulator measurements of per-station empty-queue shares.
constexpr double kPaceRate = 2.0;
constexpr double kPaceFade = 0.3;

// Factor shortening busy-run persistence as seen from the empty-queue state
// in the occupancy-facing chain solve; see queue_occupancy. Calibrated
// against slot-level simulator measurements of per-station empty shares.
constexpr double kEmptyRunPersist = 0.5;

double w_at_stage(int w0, int m, int stage) {
    int capped = std::min(stage, m);
    return std::ldexp(static_cast<double>(w0), capped); // 2^capped * w0
}

struct SlotMix {
    double p_tr = 0;
    std::vector<double> p_succ;         // solo-transmission probability per station
    std::vector<double> p_coll;         // per duration class
    SlotTimeBreakdown slot;
};

SlotMix slot_mix(const std::vector<double>& taus, const NetworkScenario& sc,
                 const DurationClassing& cl, const std::vector<FrameTimes>& frames) {
    int n = static_cast<int>(taus.size());
    SlotMix mix;
    mix.p_tr = p_transmit_any(taus);
    mix.p_succ.resize(static_cast<size_t>(n));
    for (int s = 0; s < n; ++s) mix.p_succ[static_cast<size_t>(s)] = p_success(taus, s);
    mix.p_coll.resize(static_cast<size_t>(cl.n_classes()));
    for (int d = 0; d < cl.n_classes(); ++d)
        mix.p_coll[static_cast<size_t>(d)] = class_collision_prob(taus, cl, d).total;

    auto& sl = mix.slot;
    sl.t_idle_us = (1.0 - mix.p_tr) * sc.phy.slot_us;
    for (int s = 0; s < n; ++s) {
        double pe = sc.stations[static_cast<size_t>(s)].p_err;
        sl.t_success_us += mix.p_succ[static_cast<size_t>(s)] * (1.0 - pe) * frames[static_cast<size_t>(s)].t_success_us;
        sl.t_error_us += mix.p_succ[static_cast<size_t>(s)] * pe * frames[static_cast<size_t>(s)].t_error_us;
    }
    for (int d = 0; d < cl.n_classes(); ++d)
        sl.t_collision_us += mix.p_coll[static_cast<size_t>(d)] * cl.t_collision_us[static_cast<size_t>(d)];
    sl.t_av_us = sl.t_idle_us + sl.t_collision_us + sl.t_success_us + sl.t_error_us;
    return mix;
}

// E[attempts] and E[backoff slots] per service of the retry chain.
void chain_slots(int w0, int m, double p_eq, double& e_att, double& e_a) {
    e_att = 1.0 / (1.0 - p_eq);
    e_a = 0.0;
    double pk = 1.0;
    for (int i = 0; i < m; ++i) {
        e_a += pk * ((w_at_stage(w0, m, i) - 1.0) / 2.0 + 1.0);
        pk *= p_eq;
    }
    e_a += pk / (1.0 - p_eq) * ((w_at_stage(w0, m, m) - 1.0) / 2.0 + 1.0);
}

// Poisson batch over one slot of duration t: no-arrival and one-arrival
// probabilities plus the expected overflow past one or two free queue places.
struct BatchTerms {
    double mean, p0, p1, ov1, ov2;
};

BatchTerms batch_terms(double lam_us, double t_us) {
    BatchTerms b;
    b.mean = lam_us * t_us;
    b.p0 = std::exp(-b.mean);
    b.p1 = b.mean * b.p0;
    b.ov1 = b.mean - (1.0 - b.p0);                 // E[(A-1)+]
    b.ov2 = b.ov1 - (1.0 - b.p0 - b.p1);           // E[(A-2)+]
    return b;
}

// Chain inputs for station s at the current iterate. quiet is
// prod_{j != s}(1 - tau_j); t_av_excl_us the slot mean with s silenced.
// Partner queues split into a clustered share (weight b_k: busy slots
// breed refills, geometric runs) and a paced share (weight 1 - b_k:
// backlogged partners recur regularly, smeared when the tagged station is
// loaded enough for the regularity to matter).
IdleModelInputs chain_inputs(const NetworkScenario& sc, const std::vector<FrameTimes>& frames,
                             const std::vector<double>& taus, const std::vector<double>& b_idle,
                             int s, double quiet, double p_eq, double t_av_excl_us) {
    const auto& st = sc.stations[static_cast<size_t>(s)];
    int n = static_cast<int>(sc.stations.size());
    IdleModelInputs in;
    in.lambda_pkt_s = st.lambda_pkt_s;
    in.p_err = st.p_err;
    in.p_eq = p_eq;
    in.w0 = sc.cw_min_of(s);
    in.m = sc.phy.max_backoff_stage;
    in.slot_us = sc.phy.slot_us;
    in.quiet_others = quiet;
    in.t_success_us = frames[static_cast<size_t>(s)].t_success_us;
    in.t_error_us = frames[static_cast<size_t>(s)].t_error_us;
    in.t_busy_us =
        quiet < 1.0 - 1e-12
            ? std::max(sc.phy.slot_us, (t_av_excl_us - quiet * sc.phy.slot_us) / (1.0 - quiet))
            : sc.phy.slot_us;
    double w_p = 0.0, t_p = 0.0, rho = 0.0, co = 0.0;
    for (int k = 0; k < n; ++k) {
        if (k == s) continue;
        const auto& pk = sc.stations[static_cast<size_t>(k)];
        if (pk.lambda_pkt_s <= 0.0) continue;
        double dur = (1.0 - pk.p_err) * frames[static_cast<size_t>(k)].t_success_us +
                     pk.p_err * frames[static_cast<size_t>(k)].t_error_us;
        double bk = b_idle[static_cast<size_t>(k)];
        w_p += (1.0 - bk) * taus[static_cast<size_t>(k)];
        t_p += (1.0 - bk) * taus[static_cast<size_t>(k)] * dur;
        if (std::isfinite(pk.lambda_pkt_s)) {
            rho += bk * (1.0 - std::exp(-pk.lambda_pkt_s * 1e-6 * in.t_busy_us));
            co += bk * (1.0 - std::exp(-pk.lambda_pkt_s * 1e-6 * in.t_success_us));
        }
    }
    in.run_len = 1.0 / (1.0 - std::min(rho, 0.95));
    in.c_own = std::min(1.0, co);
    if (w_p > 1e-12 && std::isfinite(st.lambda_pkt_s)) {
        t_p /= w_p;
        double theta = (1.0 - std::exp(-kPaceRate * st.lambda_pkt_s * 1e-6 * t_p)) *
                       std::min(1.0, b_idle[static_cast<size_t>(s)] / kPaceFade);
        in.p_smear = std::min(theta * w_p, 0.95 * (1.0 - quiet));
        in.t_pace_us = t_p;
    }
    return in;
}

// Stationary distribution of a 6-state row-stochastic matrix: one balance
// equation traded for normalization, then Gaussian elimination.
void stationary6(const double P[6][6], double pi[6]) {
    double A[6][7];
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) A[i][j] = P[j][i] - (i == j ? 1.0 : 0.0);
        A[i][6] = 0.0;
    }
    for (int j = 0; j < 6; ++j) A[5][j] = 1.0;
    A[5][6] = 1.0;
    for (int c = 0; c < 6; ++c) {
        int piv = c;
        for (int r = c + 1; r < 6; ++r)
            if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
        if (piv != c)
            for (int j = c; j < 7; ++j) std::swap(A[c][j], A[piv][j]);
        if (std::abs(A[c][c]) < 1e-300) continue;
        for (int r = 0; r < 6; ++r) {
            if (r == c) continue;
            double f = A[r][c] / A[c][c];
            for (int j = c; j < 7; ++j) A[r][j] -= f * A[c][j];
        }
    }
    double sum = 0.0;
    for (int i = 0; i < 6; ++i) {
        pi[i] = std::abs(A[i][i]) < 1e-300 ? 0.0 : A[i][6] / A[i][i];
        if (pi[i] < 0.0) pi[i] = 0.0;
        sum += pi[i];
    }
    if (sum <= 0.0) {
        for (int i = 0; i < 6; ++i) pi[i] = 1.0 / 6.0;
        return;
    }
    for (int i = 0; i < 6; ++i) pi[i] /= sum;
}

} // namespace

double tau_from_chain(int w0, int m, double p_eq, double b_idle) {
    if (w0 < 1 || m < 1 || p_eq < 0.0 || p_eq >= 1.0 || b_idle < 0.0 || b_idle > 1.0)
        throw std::domain_error("tau_from_chain: inputs out of range");
    double one_minus_2p = 1.0 - 2.0 * p_eq;
    if (std::abs(one_minus_2p) < 1e-9) {
        // removable singularity at p_eq = 1/2
        return 2.0 * (1.0 - b_idle) / ((w0 + 1.0) + w0 * m / 2.0);
    }
    double denom = one_minus_2p * (w0 + 1.0) +
                   p_eq * w0 * (1.0 - std::pow(2.0 * p_eq, m));
    return 2.0 * (1.0 - b_idle) * one_minus_2p / denom;
}

double w0_from_tau(double tau, int m, double p_eq, double b_idle) {
    if (tau <= 0.0 || tau > 1.0 || m < 1 || p_eq < 0.0 || p_eq >= 1.0 || b_idle < 0.0 ||
        b_idle >= 1.0)
        throw std::domain_error("w0_from_tau: inputs out of range");
    double one_minus_2p = 1.0 - 2.0 * p_eq;
    if (std::abs(one_minus_2p) < 1e-9) {
        double a = 2.0 * (1.0 - b_idle) / tau; // = w0 (1 + m/2) + 1
        return (a - 1.0) / (1.0 + m / 2.0);
    }
    double a = 2.0 * (1.0 - b_idle) * one_minus_2p / tau;
    return (a - one_minus_2p) /
           (one_minus_2p + p_eq * (1.0 - std::pow(2.0 * p_eq, m)));
}

int invert_to_w0(double tau, int m, double p_eq, double b_idle) {
    double w = w0_from_tau(tau, m, p_eq, b_idle);
    long rounded = std::lround(w);
    return static_cast<int>(std::max(2L, rounded));
}

double p_transmit_any(const std::vector<double>& taus) {
    double quiet = 1.0;
    for (double t : taus) quiet *= 1.0 - t;
    return 1.0 - quiet;
}

double p_success(const std::vector<double>& taus, int s) {
    if (s < 0 || s >= static_cast<int>(taus.size()))
        throw std::out_of_range("p_success: station index");
    double p = taus[static_cast<size_t>(s)];
    for (int j = 0; j < static_cast<int>(taus.size()); ++j)
        if (j != s) p *= 1.0 - taus[static_cast<size_t>(j)];
    return p;
}

ClassTxProbs class_tx_probs(const std::vector<double>& taus, const DurationClassing& cl, int d) {
    if (d < 0 || d >= cl.n_classes()) throw std::out_of_range("class_tx_probs: class index");
    auto quiet_of = [&](int c) {
        double quiet = 1.0;
        for (int s : cl.members[static_cast<size_t>(c)]) quiet *= 1.0 - taus[static_cast<size_t>(s)];
        return quiet;
    };
    ClassTxProbs out;
    double quiet_lower = 1.0, quiet_higher = 1.0;
    for (int c = 0; c < d; ++c) quiet_lower *= quiet_of(c);
    for (int c = d + 1; c < cl.n_classes(); ++c) quiet_higher *= quiet_of(c);
    out.lower = 1.0 - quiet_lower;   // 0 when d is the slowest class
    out.higher = 1.0 - quiet_higher; // 0 when d is the fastest
    out.same = 1.0 - quiet_of(d);
    return out;
}

ClassCollisionProbs class_collision_prob(const std::vector<double>& taus,
                                         const DurationClassing& cl, int d) {
    ClassTxProbs tx = class_tx_probs(taus, cl, d);
    // P(exactly one station of class d transmits)
    double solo = 0.0;
    for (int s : cl.members[static_cast<size_t>(d)]) {
        double p = taus[static_cast<size_t>(s)];
        for (int j : cl.members[static_cast<size_t>(d)])
            if (j != s) p *= 1.0 - taus[static_cast<size_t>(j)];
        solo += p;
    }
    ClassCollisionProbs out;
    out.internal = (tx.same - solo) * (1.0 - tx.lower) * (1.0 - tx.higher);
    out.external = tx.same * tx.higher * (1.0 - tx.lower);
    out.total = out.internal + out.external;
    return out;
}

SlotTimeBreakdown expected_slot(const std::vector<double>& taus, const NetworkScenario& sc,
                                const DurationClassing& cl) {
    std::vector<FrameTimes> frames;
    frames.reserve(sc.stations.size());
    for (const auto& st : sc.stations) frames.push_back(frame_durations(st, sc.phy));
    return slot_mix(taus, sc, cl, frames).slot;
}

TrafficProbs traffic_probs(double lambda_pkt_s, double t_av_us, double t_av_excl_us) {
    TrafficProbs out;
    out.q = 1.0 - std::exp(-lambda_pkt_s * 1e-6 * t_av_us);
    out.p_i0 = 1.0 - std::exp(-lambda_pkt_s * 1e-6 * t_av_excl_us);
    return out;
}

QueueChainResult queue_occupancy(const IdleModelInputs& in) {
    if (in.p_eq < 0.0 || in.p_eq > 1.0 || in.quiet_others < 0.0 || in.quiet_others > 1.0 ||
        in.lambda_pkt_s < 0.0)
        throw std::domain_error("queue_occupancy: inputs out of range");
    if (in.lambda_pkt_s <= 0.0) return {1.0, 0.0};
    if (!std::isfinite(in.lambda_pkt_s)) return {0.0, 1.0};

    double e_att, e_a;
    chain_slots(in.w0, in.m, std::min(in.p_eq, 0.999999), e_att, e_a);
    double alpha = std::min(1.0, e_att / e_a);
    double lam_us = in.lambda_pkt_s * 1e-6;
    double q_o = in.quiet_others;
    double p_sm = std::clamp(in.p_smear, 0.0, std::max(0.0, 1.0 - q_o));

    // Paced transmissions recur too regularly for a per-slot lottery: their
    // airtime is smeared into the tick and attempts are charged the matching
    // overlap share, which keeps the per-attempt failure split exact.
    double sig = in.slot_us + p_sm * in.t_pace_us / std::max(q_o, 1e-9);
    double kap = (p_sm + q_o) > 1e-12 ? p_sm / (p_sm + q_o) : 0.0;

    BatchTerms bI = batch_terms(lam_us, sig);
    BatchTerms bB = batch_terms(lam_us, in.t_busy_us);
    BatchTerms bS = batch_terms(lam_us, in.t_success_us);
    BatchTerms bE = batch_terms(lam_us, in.t_error_us);
    BatchTerms bC = batch_terms(lam_us, std::max(in.t_error_us, in.t_busy_us));
    BatchTerms bP = batch_terms(lam_us, std::max(in.t_error_us, in.t_pace_us));

    double run = std::max(in.run_len, 1.0);
    double cb = 1.0 - 1.0 / run;
    double pb = q_o > 1e-9 ? std::clamp((1.0 - q_o - p_sm) / (run * q_o), 0.0, 1.0) : 1.0;
    double co = std::clamp(in.c_own, 0.0, 1.0);

    double a_s = alpha * (1.0 - kap) * (1.0 - in.p_err);
    double a_e = alpha * (1.0 - kap) * in.p_err;
    double a_p = alpha * kap;

    // cb0 is the busy-run persistence seen from the empty-queue state.
    auto solve_chain = [&](double cb0) {
        // state order: queue {0,1,2} x context {others-idle, others-busy}
        double P[6][6] = {};
        auto spread = [&](int row, double w, const BatchTerms& t, int base_q, double ctx_b) {
            double q2 = std::max(0.0, 1.0 - t.p0 - t.p1);
            double to[3] = {0, 0, 0};
            if (base_q == 0) {
                to[0] = t.p0;
                to[1] = t.p1;
                to[2] = q2;
            } else if (base_q == 1) {
                to[1] = t.p0;
                to[2] = 1.0 - t.p0;
            } else {
                to[2] = 1.0;
            }
            for (int qn = 0; qn < 3; ++qn) {
                P[row][qn] += w * to[qn] * (1.0 - ctx_b);
                P[row][3 + qn] += w * to[qn] * ctx_b;
            }
        };

        // idle-context rows: attempts succeed unless a paced overlap or error
        spread(0, 1.0, bI, 0, pb);
        spread(1, a_s, bS, 0, co);
        spread(1, a_e, bE, 1, co);
        spread(1, a_p, bP, 1, pb);
        spread(1, 1.0 - alpha, bI, 1, pb);
        spread(2, a_s, bS, 1, co);
        spread(2, a_e, bE, 2, co);
        spread(2, a_p, bP, 2, pb);
        spread(2, 1.0 - alpha, bI, 2, pb);
        // busy-context rows: attempts collide, no departure
        spread(3, 1.0, bB, 0, cb0);
        spread(4, alpha, bC, 1, cb);
        spread(4, 1.0 - alpha, bB, 1, cb);
        spread(5, alpha, bC, 2, cb);
        spread(5, 1.0 - alpha, bB, 2, cb);

        double pi[6];
        stationary6(P, pi);

        double drops =
            pi[0] * bI.ov2 + pi[3] * bB.ov2 +
            pi[1] * (a_s * bS.ov2 + a_e * bE.ov1 + a_p * bP.ov1 + (1.0 - alpha) * bI.ov1) +
            pi[4] * (alpha * bC.ov1 + (1.0 - alpha) * bB.ov1) +
            pi[2] * (a_s * bS.ov1 + a_e * bE.mean + a_p * bP.mean + (1.0 - alpha) * bI.mean) +
            pi[5] * (alpha * bC.mean + (1.0 - alpha) * bB.mean);
        double arrivals =
            pi[0] * bI.mean + pi[3] * bB.mean +
            (pi[1] + pi[2]) *
                (a_s * bS.mean + a_e * bE.mean + a_p * bP.mean + (1.0 - alpha) * bI.mean) +
            (pi[4] + pi[5]) * (alpha * bC.mean + (1.0 - alpha) * bB.mean);

        QueueChainResult r;
        r.b_idle = std::clamp(pi[0] + pi[3], 0.0, 1.0);
        r.p_loss = arrivals > 0.0 ? std::clamp(drops / arrivals, 0.0, 1.0) : 0.0;
        return r;
    };

    // Queue depth and busy bursts are positively correlated: deep excursions
    // ride the bursts, empty stretches the lulls. A single six-state solve
    // cannot carry both, so the chain is solved twice. The full-persistence
    // solve weights runs the way arriving packets meet them and supplies the
    // loss flow; the solve with empty-state persistence shortened (an empty
    // tagged queue is itself evidence the neighbourhood has drained) supplies
    // the slot-marginal empty share that deflates the attempt rate.
    QueueChainResult out;
    out.p_loss = solve_chain(cb).p_loss;
    out.b_idle = solve_chain(cb * kEmptyRunPersist).b_idle;
    return out;
}

double idle_prob(const IdleModelInputs& in) { return queue_occupancy(in).b_idle; }

OperatingPoint operating_point_at(const NetworkScenario& sc, const std::vector<double>& taus) {
    int n = static_cast<int>(sc.stations.size());
    DurationClassing cl = classify_stations(sc);
    std::vector<FrameTimes> frames;
    frames.reserve(sc.stations.size());
    for (const auto& st : sc.stations) frames.push_back(frame_durations(st, sc.phy));
    SlotMix mix = slot_mix(taus, sc, cl, frames);

    OperatingPoint op;
    op.p_eq.assign(static_cast<size_t>(n), 0.0);
    op.q.assign(static_cast<size_t>(n), 0.0);
    op.p_i0.assign(static_cast<size_t>(n), 0.0);
    op.b_idle.assign(static_cast<size_t>(n), 1.0);
    std::vector<double> quiet(static_cast<size_t>(n), 1.0);
    std::vector<double> t_excl(static_cast<size_t>(n), 0.0);
    std::vector<double> taus_excl;
    for (int s = 0; s < n; ++s) {
        const auto& st = sc.stations[static_cast<size_t>(s)];
        for (int j = 0; j < n; ++j)
            if (j != s) quiet[static_cast<size_t>(s)] *= 1.0 - taus[static_cast<size_t>(j)];
        double p_col = 1.0 - quiet[static_cast<size_t>(s)];
        op.p_eq[static_cast<size_t>(s)] = std::min(p_col + st.p_err - st.p_err * p_col, 0.999999);
        taus_excl = taus;
        taus_excl[static_cast<size_t>(s)] = 0.0;
        t_excl[static_cast<size_t>(s)] = slot_mix(taus_excl, sc, cl, frames).slot.t_av_us;
        TrafficProbs tp = traffic_probs(st.lambda_pkt_s, mix.slot.t_av_us,
                                        t_excl[static_cast<size_t>(s)]);
        op.q[static_cast<size_t>(s)] = tp.q;
        op.p_i0[static_cast<size_t>(s)] = tp.p_i0;
        if (st.lambda_pkt_s > 0 && !std::isfinite(st.lambda_pkt_s))
            op.b_idle[static_cast<size_t>(s)] = 0.0;
    }
    // b-only fixed point at frozen taus; the coupling through the partner
    // shares is weak, a short damped loop settles it.
    for (int sweep = 0; sweep < 500; ++sweep) {
        double delta = 0.0;
        for (int s = 0; s < n; ++s) {
            const auto& st = sc.stations[static_cast<size_t>(s)];
            if (st.lambda_pkt_s <= 0) continue;
            IdleModelInputs in =
                chain_inputs(sc, frames, taus, op.b_idle, s, quiet[static_cast<size_t>(s)],
                             op.p_eq[static_cast<size_t>(s)], t_excl[static_cast<size_t>(s)]);
            double b = queue_occupancy(in).b_idle;
            delta = std::max(delta, std::abs(b - op.b_idle[static_cast<size_t>(s)]));
            op.b_idle[static_cast<size_t>(s)] = 0.5 * op.b_idle[static_cast<size_t>(s)] + 0.5 * b;
        }
        if (delta < 1e-12) break;
    }
    return op;
}

ThroughputResult throughput(const std::vector<double>& taus, const NetworkScenario& sc,
                            const DurationClassing& cl) {
    std::vector<FrameTimes> frames;
    frames.reserve(sc.stations.size());
    for (const auto& st : sc.stations) frames.push_back(frame_durations(st, sc.phy));
    SlotMix mix = slot_mix(taus, sc, cl, frames);
    ThroughputResult out;
    out.per_station_bps.resize(sc.stations.size());
    for (size_t s = 0; s < sc.stations.size(); ++s) {
        const auto& st = sc.stations[s];
        out.per_station_bps[s] =
            mix.p_succ[s] * (1.0 - st.p_err) * 8.0 * st.payload_bytes / (mix.slot.t_av_us * 1e-6);
        out.aggregate_bps += out.per_station_bps[s];
    }
    return out;
}

EquilibriumSolution solve_equilibrium(const NetworkScenario& sc) {
    sc.validate();
    int n = static_cast<int>(sc.stations.size());
    DurationClassing cl = classify_stations(sc);
    std::vector<FrameTimes> frames;
    frames.reserve(sc.stations.size());
    for (const auto& st : sc.stations) frames.push_back(frame_durations(st, sc.phy));

    EquilibriumSolution sol;
    sol.tau.assign(static_cast<size_t>(n), 0.0);
    sol.b_idle.assign(static_cast<size_t>(n), 1.0);
    sol.p_loss.assign(static_cast<size_t>(n), 0.0);
    sol.p_col.assign(static_cast<size_t>(n), 0.0);
    sol.p_eq.assign(static_cast<size_t>(n), 0.0);
    sol.q.assign(static_cast<size_t>(n), 0.0);
    sol.p_i0.assign(static_cast<size_t>(n), 0.0);
    for (int s = 0; s < n; ++s) {
        const auto& st = sc.stations[static_cast<size_t>(s)];
        if (st.lambda_pkt_s > 0) sol.tau[static_cast<size_t>(s)] = 2.0 / (sc.cw_min_of(s) + 1.0);
        if (!std::isfinite(st.lambda_pkt_s)) sol.b_idle[static_cast<size_t>(s)] = 0.0;
    }

    std::vector<double> taus_excl(static_cast<size_t>(n));
    double residual = 0.0;
    int it = 0;
    for (; it < kMaxSweeps; ++it) {
        SlotMix mix = slot_mix(sol.tau, sc, cl, frames);
        std::vector<double> next(static_cast<size_t>(n), 0.0);
        for (int s = 0; s < n; ++s) {
            const auto& st = sc.stations[static_cast<size_t>(s)];
            if (st.lambda_pkt_s <= 0) {
                sol.b_idle[static_cast<size_t>(s)] = 1.0;
                continue;
            }
            double quiet = 1.0;
            for (int j = 0; j < n; ++j)
                if (j != s) quiet *= 1.0 - sol.tau[static_cast<size_t>(j)];
            double p_col = 1.0 - quiet;
            double p_eq = std::min(p_col + st.p_err - st.p_err * p_col, 0.999999);

            taus_excl = sol.tau;
            taus_excl[static_cast<size_t>(s)] = 0.0;
            SlotMix mex = slot_mix(taus_excl, sc, cl, frames);
            TrafficProbs tp =
                traffic_probs(st.lambda_pkt_s, mix.slot.t_av_us, mex.slot.t_av_us);
            IdleModelInputs in = chain_inputs(sc, frames, sol.tau, sol.b_idle, s, quiet, p_eq,
                                              mex.slot.t_av_us);
            QueueChainResult qc = queue_occupancy(in);

            sol.p_col[static_cast<size_t>(s)] = p_col;
            sol.p_eq[static_cast<size_t>(s)] = p_eq;
            sol.q[static_cast<size_t>(s)] = tp.q;
            sol.p_i0[static_cast<size_t>(s)] = tp.p_i0;
            sol.b_idle[static_cast<size_t>(s)] = qc.b_idle;
            sol.p_loss[static_cast<size_t>(s)] = qc.p_loss;
            next[static_cast<size_t>(s)] = tau_from_chain(in.w0, in.m, p_eq, qc.b_idle);
        }
        residual = 0.0;
        for (int s = 0; s < n; ++s) {
            residual = std::max(residual, std::abs(next[static_cast<size_t>(s)] - sol.tau[static_cast<size_t>(s)]));
            sol.tau[static_cast<size_t>(s)] = (1.0 - kPicardDamping) * sol.tau[static_cast<size_t>(s)] +
                                              kPicardDamping * next[static_cast<size_t>(s)];
        }
        if (residual < kConvergenceTol) break;
    }
    sol.iterations = it + 1;
    sol.residual = residual;
    if (residual >= kConvergenceTol)
        throw SolverError("equilibrium solver did not converge: residual " +
                          std::to_string(residual));

    SlotMix mix = slot_mix(sol.tau, sc, cl, frames);
    sol.slot = mix.slot;
    sol.p_tr = mix.p_tr;
    sol.p_succ = mix.p_succ;
    ThroughputResult thr = throughput(sol.tau, sc, cl);
    sol.throughput_bps = thr.per_station_bps;
    sol.aggregate_bps = 0.0;
    for (int s = 0; s < n; ++s) {
        const auto& st = sc.stations[static_cast<size_t>(s)];
        if (st.lambda_pkt_s > 0 && std::isfinite(st.lambda_pkt_s)) {
            // interpolate between queue admission (exact for rare loss) and
            // the airtime equation of state (exact for a backlogged queue)
            double offered = st.lambda_pkt_s * 8.0 * st.payload_bytes;
            double pl = sol.p_loss[static_cast<size_t>(s)];
            double cons = offered * (1.0 - pl);
            double air = thr.per_station_bps[static_cast<size_t>(s)];
            sol.throughput_bps[static_cast<size_t>(s)] =
                std::min((1.0 - pl) * cons + pl * air, offered);
        }
        sol.aggregate_bps += sol.throughput_bps[static_cast<size_t>(s)];
    }
    return sol;
}

} // namespace wlanfair
