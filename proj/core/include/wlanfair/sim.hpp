#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "wlanfair/scenario.hpp"

namespace wlanfair {

// Slot-synchronous CSMA/CA simulation. Stations decrement their backoff
// counter on idle slots only and freeze while the medium is busy; a station
// transmits in the slot where its counter sits at zero. A busy slot lasts as
// long as the slowest participant's frame exchange.

struct TraceEvent {
    enum class Kind { Arrival, Drop, TxOk, TxError, Collision };
    double t_us = 0;
    int station = -1;
    Kind kind = Kind::Arrival;
};

struct StationCounters {
    std::uint64_t arrivals = 0; // accepted + dropped offers
    std::uint64_t drops = 0;
    std::uint64_t successes = 0;
    std::uint64_t collisions = 0;     // attempts that overlapped another station
    std::uint64_t channel_errors = 0; // solo attempts killed by the error draw
    std::uint64_t attempts = 0;
    std::uint64_t queued_at_end = 0;
};

struct SimResult {
    std::vector<double> throughput_bps; // measured after warm-up
    double aggregate_bps = 0;
    std::vector<StationCounters> counters; // whole run, including warm-up
    std::uint64_t slots_total = 0;
    double sim_time_us = 0;
    double warmup_us = 0;
    double busy_fraction = 0; // share of virtual time the medium was not idle
};

struct SimOptions {
    double warmup_frac = 0.05;
    std::vector<int> cw_overrides; // per station; empty = use scenario values
    std::function<void(const TraceEvent&)> on_event; // optional
};

// Deterministic for a fixed (scenario, duration, seed): every station owns
// two RNG streams (arrival times, backoff draws) derived from the run seed,
// so event order never depends on wall-clock or container iteration order.
// lambda = inf marks a saturated station that always holds a frame.
SimResult simulate(const NetworkScenario& sc, double duration_s, std::uint64_t seed,
                   const SimOptions& opt = {});

} // namespace wlanfair
