#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "wlanfair/analytic.hpp"
#include "wlanfair/scenario.hpp"

using namespace wlanfair;

namespace {

StationConfig station(const std::string& id, double lam, double rate, double pe = 0.0) {
    StationConfig st;
    st.id = id;
    st.lambda_pkt_s = lam;
    st.rate_bps = rate;
    st.p_err = pe;
    return st;
}

// All 2^N transmit patterns, each weighted by prod tau / (1 - tau), classified
// by outcome. Deliberately ignorant of the product-form shortcuts used by the
// library.
struct Enumerated {
    double p_idle = 0;
    std::vector<double> p_succ;
    std::vector<double> p_coll; // per class, charged to the slowest participant
};

Enumerated enumerate_outcomes(const std::vector<double>& taus, const DurationClassing& cl) {
    int n = static_cast<int>(taus.size());
    Enumerated e;
    e.p_succ.assign(taus.size(), 0.0);
    e.p_coll.assign(static_cast<size_t>(cl.n_classes()), 0.0);
    for (int mask = 0; mask < (1 << n); ++mask) {
        double p = 1.0;
        int count = 0, last = -1, slowest_class = cl.n_classes();
        for (int j = 0; j < n; ++j) {
            if (mask & (1 << j)) {
                p *= taus[static_cast<size_t>(j)];
                ++count;
                last = j;
                slowest_class = std::min(slowest_class, cl.station_class[static_cast<size_t>(j)]);
            } else {
                p *= 1.0 - taus[static_cast<size_t>(j)];
            }
        }
        if (count == 0)
            e.p_idle += p;
        else if (count == 1)
            e.p_succ[static_cast<size_t>(last)] += p;
        else
            e.p_coll[static_cast<size_t>(slowest_class)] += p;
    }
    return e;
}

NetworkScenario random_net(std::mt19937& rng, int n) {
    static const double rates[] = {1e6, 2e6, 5.5e6, 11e6};
    std::uniform_real_distribution<double> u(0.0, 1.0);
    NetworkScenario sc;
    for (int j = 0; j < n; ++j)
        sc.stations.push_back(
            station("s" + std::to_string(j), 100, rates[rng() % 4], 0.0));
    (void)u;
    return sc;
}

} // namespace

TEST_CASE("chain attempt probability, closed forms") {
    // p = 0, b = 0 collapses to 2 / (W0 + 1)
    CHECK(tau_from_chain(32, 5, 0.0, 0.0) == doctest::Approx(2.0 / 33.0).epsilon(1e-12));
    CHECK(tau_from_chain(16, 5, 0.0, 0.0) == doctest::Approx(2.0 / 17.0).epsilon(1e-12));
    // at p = 1/2 the generic expression is 0/0; the limit is
    // 2 (1 - b) / ((W0 + 1) + W0 m / 2)
    CHECK(tau_from_chain(32, 5, 0.5, 0.0) == doctest::Approx(2.0 / 113.0).epsilon(1e-12));
    // idle share scales the whole chain down
    CHECK(tau_from_chain(32, 5, 0.0, 1.0) == doctest::Approx(0.0));
    CHECK(tau_from_chain(32, 5, 0.2, 0.5) ==
          doctest::Approx(0.5 * tau_from_chain(32, 5, 0.2, 0.0)).epsilon(1e-12));
}

TEST_CASE("chain attempt probability is continuous at p = 1/2") {
    for (int w0 : {8, 32, 256, 1024})
        for (double b : {0.0, 0.4, 0.9}) {
            double mid = tau_from_chain(w0, 5, 0.5, b);
            CHECK(std::abs(tau_from_chain(w0, 5, 0.5 - 1e-9, b) - mid) < 1e-8);
            CHECK(std::abs(tau_from_chain(w0, 5, 0.5 + 1e-9, b) - mid) < 1e-8);
        }
}

TEST_CASE("w0 inversion is exact") {
    for (int w0 : {2, 8, 32, 128, 1024})
        for (double p : {0.0, 0.2, 0.5, 0.7})
            for (double b : {0.0, 0.3, 0.8}) {
                double tau = tau_from_chain(w0, 5, p, b);
                CHECK(w0_from_tau(tau, 5, p, b) == doctest::Approx(w0).epsilon(1e-9));
                CHECK(invert_to_w0(tau, 5, p, b) == w0);
            }
}

TEST_CASE("unreachable tau clamps to the most aggressive window") {
    // tau beyond 2(1 - b) cannot be met by any W0; emit W0 = 2
    CHECK(invert_to_w0(0.9, 5, 0.1, 0.6) == 2);
}

TEST_CASE("transmission probabilities") {
    CHECK(p_transmit_any({0.0, 0.0}) == doctest::Approx(0.0));
    CHECK(p_transmit_any({0.3, 1.0}) == doctest::Approx(1.0));
    CHECK(p_transmit_any({0.1, 0.2}) == doctest::Approx(0.28).epsilon(1e-12));
    CHECK(p_success({0.7}, 0) == doctest::Approx(0.7));
    CHECK(p_success({0.5, 0.5}, 1) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(p_success({0.3, 1.0}, 0) == doctest::Approx(0.0));
    CHECK_THROWS(p_success({0.5}, 3));
}

TEST_CASE("class transmission and collision splits") {
    NetworkScenario sc;
    sc.stations = {station("slow", 1, 1e6), station("f1", 1, 11e6), station("f2", 1, 11e6)};
    DurationClassing cl = classify_stations(sc);
    REQUIRE(cl.n_classes() == 2);
    std::vector<double> taus = {0.1, 0.2, 0.2};

    ClassTxProbs fast = class_tx_probs(taus, cl, 1);
    CHECK(fast.lower == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(fast.higher == doctest::Approx(0.0));
    CHECK(fast.same == doctest::Approx(0.36).epsilon(1e-12));

    ClassTxProbs slow = class_tx_probs(taus, cl, 0);
    CHECK(slow.lower == doctest::Approx(0.0));
    CHECK(slow.higher == doctest::Approx(0.36).epsilon(1e-12));

    ClassCollisionProbs c0 = class_collision_prob(taus, cl, 0);
    CHECK(c0.internal == doctest::Approx(0.0));
    CHECK(c0.external == doctest::Approx(0.036).epsilon(1e-12));
    CHECK(c0.total == doctest::Approx(0.036).epsilon(1e-12));

    ClassCollisionProbs c1 = class_collision_prob(taus, cl, 1);
    CHECK(c1.internal == doctest::Approx(0.036).epsilon(1e-12));
    CHECK(c1.external == doctest::Approx(0.0));
    CHECK(c1.total == doctest::Approx(0.036).epsilon(1e-12));
}

TEST_CASE("slot-event probabilities partition unity") {
    std::mt19937 rng(7021);
    std::uniform_real_distribution<double> u(0.0, 0.95);
    for (int trial = 0; trial < 1000; ++trial) {
        int n = 1 + static_cast<int>(rng() % 8);
        NetworkScenario sc = random_net(rng, n);
        DurationClassing cl = classify_stations(sc);
        std::vector<double> taus(static_cast<size_t>(n));
        for (auto& t : taus) t = u(rng);
        double total = 1.0 - p_transmit_any(taus);
        for (int j = 0; j < n; ++j) total += p_success(taus, j);
        for (int d = 0; d < cl.n_classes(); ++d) total += class_collision_prob(taus, cl, d).total;
        CHECK(std::abs(total - 1.0) < 1e-12);
    }
}

TEST_CASE("collision split matches exhaustive subset enumeration") {
    std::mt19937 rng(40117);
    std::uniform_real_distribution<double> u(0.0, 0.95);
    for (int trial = 0; trial < 300; ++trial) {
        int n = 2 + static_cast<int>(rng() % 5); // N <= 6
        NetworkScenario sc = random_net(rng, n);
        DurationClassing cl = classify_stations(sc);
        std::vector<double> taus(static_cast<size_t>(n));
        for (auto& t : taus) t = u(rng);
        Enumerated e = enumerate_outcomes(taus, cl);
        CHECK(std::abs(e.p_idle - (1.0 - p_transmit_any(taus))) < 1e-12);
        for (int j = 0; j < n; ++j)
            CHECK(std::abs(e.p_succ[static_cast<size_t>(j)] - p_success(taus, j)) < 1e-12);
        for (int d = 0; d < cl.n_classes(); ++d)
            CHECK(std::abs(e.p_coll[static_cast<size_t>(d)] -
                           class_collision_prob(taus, cl, d).total) < 1e-12);
    }
}

TEST_CASE("expected slot matches the duration-weighted enumeration") {
    NetworkScenario sc;
    sc.stations = {station("slow", 1, 1e6), station("f1", 1, 11e6), station("f2", 1, 11e6)};
    DurationClassing cl = classify_stations(sc);
    std::vector<double> taus = {0.1, 0.2, 0.2};
    SlotTimeBreakdown b = expected_slot(taus, sc, cl);
    Enumerated e = enumerate_outcomes(taus, cl);
    double oracle = e.p_idle * sc.phy.slot_us;
    for (size_t j = 0; j < sc.stations.size(); ++j)
        oracle += e.p_succ[j] * frame_durations(sc.stations[j], sc.phy).t_success_us;
    for (int d = 0; d < cl.n_classes(); ++d)
        oracle += e.p_coll[static_cast<size_t>(d)] * cl.t_collision_us[static_cast<size_t>(d)];
    CHECK(b.t_av_us == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(b.t_av_us ==
          doctest::Approx(b.t_idle_us + b.t_success_us + b.t_collision_us + b.t_error_us)
              .epsilon(1e-12));
}

TEST_CASE("expected slot degenerate cases") {
    NetworkScenario sc;
    sc.stations = {station("a", 1, 1e6)};
    DurationClassing cl = classify_stations(sc);
    CHECK(expected_slot({0.0}, sc, cl).t_av_us == doctest::Approx(sc.phy.slot_us));
    CHECK(expected_slot({1.0}, sc, cl).t_av_us == doctest::Approx(9006.0));
}

TEST_CASE("arrival probabilities over a slot") {
    TrafficProbs t0 = traffic_probs(0.0, 1000.0, 900.0);
    CHECK(t0.q == doctest::Approx(0.0));
    CHECK(t0.p_i0 == doctest::Approx(0.0));
    TrafficProbs t = traffic_probs(500.0, 1000.0, 1000.0);
    CHECK(t.q == doctest::Approx(1.0 - std::exp(-0.5)).epsilon(1e-12));
    TrafficProbs sat = traffic_probs(std::numeric_limits<double>::infinity(), 1000.0, 900.0);
    CHECK(sat.q == doctest::Approx(1.0));
    CHECK(sat.p_i0 == doctest::Approx(1.0));
}

TEST_CASE("idle share contract") {
    IdleModelInputs in;
    in.p_eq = 0.1;
    in.p_err = 0.05;
    in.w0 = 32;
    in.m = 5;
    in.quiet_others = 0.9;
    in.t_busy_us = 2000.0;
    in.t_success_us = 1529.0;
    in.t_error_us = 1529.0;

    // saturated station never idles
    in.lambda_pkt_s = std::numeric_limits<double>::infinity();
    CHECK(idle_prob(in) == doctest::Approx(0.0));
    CHECK(queue_occupancy(in).p_loss == doctest::Approx(1.0));

    // unloaded station is idle almost always and never overflows
    in.lambda_pkt_s = 1e-4;
    CHECK(idle_prob(in) > 0.999);
    CHECK(queue_occupancy(in).p_loss < 1e-6);

    // non-increasing in load; loss non-decreasing
    double prev_b = 2.0, prev_pl = -1.0;
    for (double lam : {1.0, 5.0, 20.0, 80.0, 300.0, 1000.0, 5000.0}) {
        in.lambda_pkt_s = lam;
        QueueChainResult qc = queue_occupancy(in);
        CHECK(qc.b_idle <= prev_b + 1e-12);
        CHECK(qc.p_loss >= prev_pl - 1e-12);
        CHECK(qc.b_idle >= 0.0);
        CHECK(qc.b_idle <= 1.0);
        CHECK(qc.p_loss >= 0.0);
        CHECK(qc.p_loss <= 1.0);
        prev_b = qc.b_idle;
        prev_pl = qc.p_loss;
    }

    // clustering and pacing stay inside the probability simplex
    in.lambda_pkt_s = 120.0;
    in.run_len = 2.5;
    in.c_own = 0.3;
    in.p_smear = 0.05;
    in.t_pace_us = 4000.0;
    QueueChainResult qc = queue_occupancy(in);
    CHECK(qc.b_idle > 0.0);
    CHECK(qc.b_idle < 1.0);
    CHECK(qc.p_loss > 0.0);
    CHECK(qc.p_loss < 1.0);
}

TEST_CASE("saturated homogeneous equilibrium matches the standard fixed point") {
    // independent oracle: p = 1 - (1 - tau)^(N-1) with the b = 0 chain,
    // solved by bisection on p
    auto bianchi_tau = [](int n, int w, int m) {
        auto tau_of = [&](double p) {
            if (std::abs(1.0 - 2.0 * p) < 1e-12)
                return 2.0 / (static_cast<double>(w + 1) + 0.5 * w * m);
            double num = 2.0 * (1.0 - 2.0 * p);
            double den = (1.0 - 2.0 * p) * (w + 1) + p * w * (1.0 - std::pow(2.0 * p, m));
            return num / den;
        };
        double lo = 0.0, hi = 0.999999;
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            double f = mid - (1.0 - std::pow(1.0 - tau_of(mid), n - 1));
            (f > 0 ? hi : lo) = mid;
        }
        return tau_of(0.5 * (lo + hi));
    };

    for (int n : {2, 5, 10}) {
        NetworkScenario sc;
        for (int j = 0; j < n; ++j) {
            StationConfig st = station("s" + std::to_string(j),
                                       std::numeric_limits<double>::infinity(), 1e6);
            sc.stations.push_back(st);
        }
        EquilibriumSolution eq = solve_equilibrium(sc);
        double expect = bianchi_tau(n, 32, 5);
        for (int j = 0; j < n; ++j) {
            CHECK(std::abs(eq.tau[static_cast<size_t>(j)] - expect) < 1e-6);
            CHECK(eq.b_idle[static_cast<size_t>(j)] == doctest::Approx(0.0));
            CHECK(eq.q[static_cast<size_t>(j)] == doctest::Approx(1.0));
        }
    }
}

TEST_CASE("single lightly loaded station carries its offered load") {
    NetworkScenario sc;
    sc.stations = {station("a", 10, 1e6)};
    EquilibriumSolution eq = solve_equilibrium(sc);
    double offered = 10.0 * 8.0 * 1028;
    CHECK(eq.throughput_bps[0] == doctest::Approx(offered).epsilon(0.02));
}

TEST_CASE("single station at half utilization stays near its offered load") {
    // At ~half utilization the single waiting slot overflows for a small
    // share of arrivals, so delivery sits a little under the offered load.
    NetworkScenario sc;
    sc.stations = {station("a", 50, 1e6)};
    EquilibriumSolution eq = solve_equilibrium(sc);
    double offered = 50.0 * 8.0 * 1028;
    CHECK(eq.throughput_bps[0] == doctest::Approx(offered).epsilon(0.10));
}

TEST_CASE("equilibrium rejects stationless scenarios") {
    NetworkScenario sc;
    CHECK_THROWS(solve_equilibrium(sc));
}

TEST_CASE("operating point tracks frozen attempt rates") {
    NetworkScenario sc;
    sc.stations = {station("a", 500, 11e6), station("b", 500, 11e6), station("c", 1000, 1e6)};
    EquilibriumSolution eq = solve_equilibrium(sc);
    OperatingPoint op = operating_point_at(sc, eq.tau);
    for (size_t j = 0; j < sc.stations.size(); ++j) {
        CHECK(op.p_eq[j] == doctest::Approx(eq.p_eq[j]).epsilon(1e-6));
        CHECK(op.b_idle[j] == doctest::Approx(eq.b_idle[j]).epsilon(1e-4));
    }
}
