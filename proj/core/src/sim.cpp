#include "wlanfair/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace wlanfair {

namespace {

// Seed scrambler so that nearby run seeds give unrelated streams.
std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double u53(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct StationState {
    // timing
    double t_success_us = 0;
    double t_error_us = 0;
    int w0 = 32;
    double lambda = 0; // pkt/s
    double p_err = 0;
    bool saturated = false;

    // dynamic
    int queue = 0; // HOL + at most one waiting
    int stage = 0;
    int counter = -1;
    double next_arrival_us = std::numeric_limits<double>::infinity();

    std::mt19937_64 arr_rng;
    std::mt19937_64 bo_rng;

    int cw_at_stage(int m) const {
        int s = stage < m ? stage : m;
        return w0 << s;
    }
    void draw_backoff(int m) { counter = static_cast<int>(bo_rng() % static_cast<std::uint64_t>(cw_at_stage(m))); }
    double next_gap_us() { return -std::log1p(-u53(arr_rng)) / lambda * 1e6; }
};

} // namespace

SimResult simulate(const NetworkScenario& sc, double duration_s, std::uint64_t seed,
                   const SimOptions& opt) {
    sc.validate();
    if (!(duration_s > 0)) throw std::invalid_argument("simulate: duration must be positive");
    const int n = static_cast<int>(sc.stations.size());
    const int m = sc.phy.max_backoff_stage;
    const double sigma = sc.phy.slot_us;
    const double dur_us = duration_s * 1e6;
    const double warmup_us = opt.warmup_frac * dur_us;

    if (!opt.cw_overrides.empty() && opt.cw_overrides.size() != static_cast<size_t>(n))
        throw std::invalid_argument("simulate: cw_overrides size mismatch");

    std::vector<StationState> st(static_cast<size_t>(n));
    const std::uint64_t base = splitmix64(seed);
    for (int s = 0; s < n; ++s) {
        auto& x = st[static_cast<size_t>(s)];
        const auto& cfg = sc.stations[static_cast<size_t>(s)];
        FrameTimes ft = frame_durations(cfg, sc.phy);
        x.t_success_us = ft.t_success_us;
        x.t_error_us = ft.t_error_us;
        x.w0 = opt.cw_overrides.empty() ? sc.cw_min_of(s) : opt.cw_overrides[static_cast<size_t>(s)];
        if (x.w0 < 2) throw std::invalid_argument("simulate: cw override below 2");
        x.lambda = cfg.lambda_pkt_s;
        x.p_err = cfg.p_err;
        x.saturated = std::isinf(cfg.lambda_pkt_s);
        x.arr_rng.seed(splitmix64(base + 2 * static_cast<std::uint64_t>(s)));
        x.bo_rng.seed(splitmix64(base + 2 * static_cast<std::uint64_t>(s) + 1));
        if (x.saturated) {
            x.queue = 1;
            x.stage = 0;
            x.draw_backoff(m);
        } else if (x.lambda > 0) {
            x.next_arrival_us = x.next_gap_us();
        }
    }

    SimResult res;
    res.counters.assign(static_cast<size_t>(n), StationCounters{});
    res.throughput_bps.assign(static_cast<size_t>(n), 0.0);
    res.warmup_us = warmup_us;
    std::vector<double> bits(static_cast<size_t>(n), 0.0);
    std::vector<int> tx;
    tx.reserve(static_cast<size_t>(n));

    const bool tracing = static_cast<bool>(opt.on_event);
    auto emit = [&](double t, int s, TraceEvent::Kind k) {
        if (tracing) opt.on_event(TraceEvent{t, s, k});
    };
    // Arrivals are ingested per station, so a batch spanning a long busy slot
    // interleaves out of order across stations; buffer and sort before
    // emitting to keep the trace time-ordered.
    std::vector<TraceEvent> batch;
    auto emit_batched = [&](double t, int s, TraceEvent::Kind k) {
        if (tracing) batch.push_back(TraceEvent{t, s, k});
    };
    auto flush_batch = [&] {
        if (batch.empty()) return;
        std::stable_sort(batch.begin(), batch.end(),
                         [](const TraceEvent& a, const TraceEvent& b) { return a.t_us < b.t_us; });
        for (const auto& ev : batch) opt.on_event(ev);
        batch.clear();
    };

    double t = 0;
    double busy_us = 0;
    while (t < dur_us) {
        // arrivals up to the slot boundary
        for (int s = 0; s < n; ++s) {
            auto& x = st[static_cast<size_t>(s)];
            while (x.next_arrival_us <= t) {
                res.counters[static_cast<size_t>(s)].arrivals++;
                emit_batched(x.next_arrival_us, s, TraceEvent::Kind::Arrival);
                if (x.queue >= 2) {
                    res.counters[static_cast<size_t>(s)].drops++;
                    emit_batched(x.next_arrival_us, s, TraceEvent::Kind::Drop);
                } else {
                    if (x.queue == 0) {
                        x.stage = 0;
                        x.draw_backoff(m);
                    }
                    x.queue++;
                }
                x.next_arrival_us += x.next_gap_us();
            }
        }
        flush_batch();

        tx.clear();
        for (int s = 0; s < n; ++s)
            if (st[static_cast<size_t>(s)].queue > 0 && st[static_cast<size_t>(s)].counter == 0)
                tx.push_back(s);

        res.slots_total++;
        if (tx.empty()) {
            for (int s = 0; s < n; ++s) {
                auto& x = st[static_cast<size_t>(s)];
                if (x.queue > 0) x.counter--;
            }
            t += sigma;
            continue;
        }

        double slot_len = 0;
        if (tx.size() == 1) {
            int s = tx[0];
            auto& x = st[static_cast<size_t>(s)];
            res.counters[static_cast<size_t>(s)].attempts++;
            bool err = u53(x.bo_rng) < x.p_err;
            if (err) {
                res.counters[static_cast<size_t>(s)].channel_errors++;
                emit(t, s, TraceEvent::Kind::TxError);
                x.stage = x.stage < m ? x.stage + 1 : m;
                x.draw_backoff(m);
                slot_len = x.t_error_us;
            } else {
                res.counters[static_cast<size_t>(s)].successes++;
                emit(t, s, TraceEvent::Kind::TxOk);
                if (t >= warmup_us)
                    bits[static_cast<size_t>(s)] +=
                        8.0 * sc.stations[static_cast<size_t>(s)].payload_bytes;
                x.stage = 0;
                if (x.saturated) {
                    x.draw_backoff(m);
                } else {
                    x.queue--;
                    if (x.queue > 0) x.draw_backoff(m);
                }
                slot_len = x.t_success_us;
            }
        } else {
            // the wire stays busy for as long as the slowest frame runs
            for (int s : tx) {
                auto& x = st[static_cast<size_t>(s)];
                res.counters[static_cast<size_t>(s)].attempts++;
                res.counters[static_cast<size_t>(s)].collisions++;
                emit(t, s, TraceEvent::Kind::Collision);
                x.stage = x.stage < m ? x.stage + 1 : m;
                x.draw_backoff(m);
                slot_len = std::max(slot_len, x.t_error_us);
            }
        }
        t += slot_len;
        busy_us += slot_len;
    }

    res.sim_time_us = t;
    res.busy_fraction = busy_us / t;
    const double window_s = (dur_us - warmup_us) * 1e-6;
    for (int s = 0; s < n; ++s) {
        res.counters[static_cast<size_t>(s)].queued_at_end =
            static_cast<std::uint64_t>(st[static_cast<size_t>(s)].queue);
        res.throughput_bps[static_cast<size_t>(s)] = bits[static_cast<size_t>(s)] / window_s;
        res.aggregate_bps += res.throughput_bps[static_cast<size_t>(s)];
    }
    return res;
}

} // namespace wlanfair
