#pragma once

#include <stdexcept>
#include <vector>

#include "wlanfair/scenario.hpp"

namespace wlanfair {

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Expected slot time split by outcome; t_av_us is the exact sum of the four
// components.
struct SlotTimeBreakdown {
    double t_idle_us = 0;
    double t_success_us = 0;
    double t_collision_us = 0;
    double t_error_us = 0;
    double t_av_us = 0;
};

// Per-attempt transmission probability of the backoff chain. w0 >= 1,
// m >= 1, p_eq in [0,1), b_idle in [0,1]. Continuous at p_eq = 1/2
// (removable singularity, closed-form limit).
double tau_from_chain(int w0, int m, double p_eq, double b_idle);

// Inverse of tau_from_chain in w0 at fixed (m, p_eq, b_idle). The chain
// formula is linear in w0, so this is exact; returns the real-valued w0.
double w0_from_tau(double tau, int m, double p_eq, double b_idle);
// Same, rounded to the nearest integer and clamped to >= 2.
int invert_to_w0(double tau, int m, double p_eq, double b_idle);

// P(at least one station transmits) = 1 - prod(1 - tau).
double p_transmit_any(const std::vector<double>& taus);
// P(station s transmits alone) = tau_s * prod_{j != s}(1 - tau_j).
double p_success(const std::vector<double>& taus, int s);

// Transmission events seen from duration class d (index 0 = slowest):
// lower = P(someone in a slower class transmits), higher = same for faster
// classes, same = P(someone in class d transmits). Empty class ranges give 0.
struct ClassTxProbs {
    double lower = 0, higher = 0, same = 0;
};
ClassTxProbs class_tx_probs(const std::vector<double>& taus, const DurationClassing& cl, int d);

// Collision charged to class d: internal (>= 2 transmitters within d, all
// slower classes silent, all faster silent) and external (>= 1 in d, >= 1
// faster, all slower silent). A collision is charged to its slowest
// participating class, which sets the wire time.
struct ClassCollisionProbs {
    double internal = 0, external = 0, total = 0;
};
ClassCollisionProbs class_collision_prob(const std::vector<double>& taus,
                                         const DurationClassing& cl, int d);

SlotTimeBreakdown expected_slot(const std::vector<double>& taus, const NetworkScenario& sc,
                                const DurationClassing& cl);

// Arrival probabilities of a Poisson source over one average slot: q uses the
// full mix, p_i0 the mix with the tagged station removed.
struct TrafficProbs {
    double q = 0, p_i0 = 0;
};
TrafficProbs traffic_probs(double lambda_pkt_s, double t_av_us, double t_av_excl_us);

// Inputs of the idle-state share sub-model. The solver fills these from the
// current iterate; the struct keeps the sub-model replaceable without
// touching the solver.
struct IdleModelInputs {
    double lambda_pkt_s = 0;   // tagged Poisson arrival rate (inf = saturated)
    double p_err = 0;          // channel error probability of own frames
    double p_eq = 0;           // per-attempt failure probability
    int w0 = 32;
    int m = 5;
    double slot_us = 20.0;     // physical slot duration
    double quiet_others = 1.0; // P(no other station transmits in a slot)
    double t_busy_us = 0;      // mean busy-slot duration, tagged excluded
    double t_success_us = 0;   // own successful-transmission slot duration
    double t_error_us = 0;     // own errored-transmission slot duration
    double run_len = 1.0;      // mean busy-run length in slots (clustering)
    double c_own = 0;          // P(own transmission refills a partner queue)
    double p_smear = 0;        // paced-airtime share folded into the tick
    double t_pace_us = 0;      // mean paced-transmission duration
};

struct QueueChainResult {
    double b_idle = 0;  // stationary empty-queue slot share
    double p_loss = 0;  // arrival drop probability at the full queue
};

// Embedded queue/context chain of the tagged station: occupancy {empty,
// head-of-line, head-of-line + waiting} crossed with the channel context
// {others idle, others busy}. Busy contexts persist for runs of mean
// run_len slots; an attempt inside one is the collision case. Arrivals in
// a slot are Poisson over its realized duration; overflow past the single
// waiting slot is dropped.
QueueChainResult queue_occupancy(const IdleModelInputs& in);

// Stationary idle share b of the tagged station, queue_occupancy().b_idle.
// Limits: saturated -> 0; load -> 0 -> 1; non-increasing in load.
double idle_prob(const IdleModelInputs& in);

struct EquilibriumSolution {
    std::vector<double> tau;
    std::vector<double> p_col;
    std::vector<double> p_eq;
    std::vector<double> q;
    std::vector<double> p_i0;
    std::vector<double> b_idle;
    std::vector<double> p_loss;
    SlotTimeBreakdown slot;
    double p_tr = 0;
    std::vector<double> p_succ;
    std::vector<double> throughput_bps;
    double aggregate_bps = 0;
    int iterations = 0;
    double residual = 0;
};

// Damped Picard iteration on tau (alpha = 0.5), convergence at
// max |dtau| < 1e-9, cap 1e4 sweeps. Throws SolverError on non-convergence.
// Reported per-station throughput interpolates between the queue-admission
// rate lambda (1 - p_loss) (exact as p_loss -> 0) and the airtime equation
// of state (exact when the queue never drains), weighted by p_loss, and is
// capped at the offered load.
EquilibriumSolution solve_equilibrium(const NetworkScenario& sc);

// Traffic-model operating point with the attempt probabilities pinned at
// taus: failure probabilities plus the idle-share fixed point at that mix.
// Used when translating an optimized tau vector into CW_min values.
struct OperatingPoint {
    std::vector<double> p_eq;
    std::vector<double> q;
    std::vector<double> p_i0;
    std::vector<double> b_idle;
};
OperatingPoint operating_point_at(const NetworkScenario& sc, const std::vector<double>& taus);

// Eq.-of-state throughput at a given tau vector: S_s = P_s (1-P_e) 8 PL / T_av.
struct ThroughputResult {
    std::vector<double> per_station_bps;
    double aggregate_bps = 0;
};
ThroughputResult throughput(const std::vector<double>& taus, const NetworkScenario& sc,
                            const DurationClassing& cl);

} // namespace wlanfair
