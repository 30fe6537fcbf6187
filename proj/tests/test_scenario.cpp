#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <stdexcept>

#include "wlanfair/scenario.hpp"
#include "wlanfair/scenario_io.hpp"

using namespace wlanfair;

namespace {

StationConfig station(const std::string& id, double lam, double rate, double pl = 1028,
                      double pe = 0.0) {
    StationConfig st;
    st.id = id;
    st.lambda_pkt_s = lam;
    st.rate_bps = rate;
    st.payload_bytes = pl;
    st.p_err = pe;
    return st;
}

NetworkScenario three_rate_net() {
    NetworkScenario sc;
    sc.name = "t";
    sc.stations = {station("a", 100, 11e6), station("b", 100, 5.5e6), station("c", 100, 1e6)};
    return sc;
}

} // namespace

TEST_CASE("frame durations, hand-summed") {
    PhyMacParams phy;
    // preamble 192 + MAC header 224 bits at 1 Mbit/s + payload, then
    // SIFS + ACK (192 + 112 bits at 1 Mbit/s) + DIFS + 2 propagation
    FrameTimes f11 = frame_durations(station("x", 0, 11e6), phy);
    double data11 = 192.0 + 224.0 / 1.0 + 8.0 * 1028 / 11.0;
    double ack = 192.0 + 112.0 / 1.0;
    CHECK(f11.t_success_us == doctest::Approx(data11 + 10 + ack + 50 + 2).epsilon(1e-12));
    CHECK(f11.t_success_us == doctest::Approx(1529.636363636).epsilon(1e-9));
    CHECK(f11.t_error_us == doctest::Approx(f11.t_success_us).epsilon(1e-12));

    FrameTimes f1 = frame_durations(station("y", 0, 1e6), phy);
    CHECK(f1.t_success_us == doctest::Approx(9006.0).epsilon(1e-12));

    FrameTimes f55 = frame_durations(station("z", 0, 5.5e6), phy);
    CHECK(f55.t_success_us == doctest::Approx(2277.272727273).epsilon(1e-9));
}

TEST_CASE("frame durations, MAC header at data rate") {
    PhyMacParams phy;
    phy.mac_header_at_data_rate = true;
    FrameTimes f = frame_durations(station("x", 0, 11e6), phy);
    double data = 192.0 + (224.0 + 8.0 * 1028) / 11.0;
    CHECK(f.t_success_us == doctest::Approx(data + 10 + 304 + 50 + 2).epsilon(1e-12));
    CHECK(f.t_success_us == doctest::Approx(1326.0).epsilon(1e-9));
}

TEST_CASE("classification groups by duration, slowest first") {
    NetworkScenario sc = three_rate_net();
    DurationClassing cl = classify_stations(sc);
    REQUIRE(cl.n_classes() == 3);
    CHECK(cl.members[0] == std::vector<int>{2}); // 1 Mbit/s is the slowest
    CHECK(cl.members[1] == std::vector<int>{1});
    CHECK(cl.members[2] == std::vector<int>{0});
    CHECK(cl.station_class[0] == 2);
    CHECK(cl.station_class[2] == 0);
    for (int d = 1; d < cl.n_classes(); ++d)
        CHECK(cl.t_collision_us[d] < cl.t_collision_us[d - 1]);
    CHECK(cl.t_collision_us[0] == doctest::Approx(9006.0));
}

TEST_CASE("classification merges equal rates") {
    NetworkScenario sc;
    sc.stations = {station("f1", 500, 11e6), station("f2", 500, 11e6), station("s", 1000, 1e6)};
    DurationClassing cl = classify_stations(sc);
    REQUIRE(cl.n_classes() == 2);
    CHECK(cl.members[0] == std::vector<int>{2});
    CHECK(cl.members[1] == std::vector<int>{0, 1});
}

TEST_CASE("classification is stable under station permutation") {
    NetworkScenario sc = three_rate_net();
    NetworkScenario sp = sc;
    std::swap(sp.stations[0], sp.stations[2]);
    DurationClassing a = classify_stations(sc);
    DurationClassing b = classify_stations(sp);
    REQUIRE(a.n_classes() == b.n_classes());
    // station "c" (1 Mbit/s) must land in class 0 in both orderings
    CHECK(a.station_class[2] == 0);
    CHECK(b.station_class[0] == 0);
    for (int d = 0; d < a.n_classes(); ++d)
        CHECK(a.t_collision_us[d] == doctest::Approx(b.t_collision_us[d]).epsilon(1e-12));
}

TEST_CASE("near-equal durations share a class") {
    NetworkScenario sc;
    sc.stations = {station("a", 10, 1e6), station("b", 10, 1e6)};
    sc.stations[1].payload_bytes = 1028.00001; // far below the 0.5 us resolution
    DurationClassing cl = classify_stations(sc);
    CHECK(cl.n_classes() == 1);
}

TEST_CASE("homogeneous network is a single class") {
    NetworkScenario sc;
    sc.stations = {station("a", 10, 2e6), station("b", 20, 2e6), station("c", 30, 2e6)};
    CHECK(classify_stations(sc).n_classes() == 1);
}

TEST_CASE("validation rejects broken configs") {
    NetworkScenario sc = three_rate_net();
    CHECK_NOTHROW(sc.validate());

    NetworkScenario dup = sc;
    dup.stations[1].id = "a";
    CHECK_THROWS_AS(dup.validate(), std::invalid_argument);

    NetworkScenario pe = sc;
    pe.stations[0].p_err = 1.0; // certainty of loss never converges
    CHECK_THROWS_AS(pe.validate(), std::invalid_argument);

    NetworkScenario neg = sc;
    neg.stations[0].lambda_pkt_s = -1;
    CHECK_THROWS_AS(neg.validate(), std::invalid_argument);

    NetworkScenario cw = sc;
    cw.stations[0].cw_min = 1;
    CHECK_THROWS_AS(cw.validate(), std::invalid_argument);

    NetworkScenario pl = sc;
    pl.stations[0].payload_bytes = 0;
    CHECK_THROWS_AS(pl.validate(), std::invalid_argument);

    NetworkScenario phy = sc;
    phy.phy.difs_us = 5; // DIFS below SIFS is not a valid IFS ladder
    CHECK_THROWS_AS(phy.validate(), std::invalid_argument);
}

TEST_CASE("cw_min_of falls back to the phy default") {
    NetworkScenario sc = three_rate_net();
    CHECK(sc.cw_min_of(0) == 32);
    sc.stations[0].cw_min = 64;
    CHECK(sc.cw_min_of(0) == 64);
}

TEST_CASE("json round trip") {
    NetworkScenario sc = three_rate_net();
    sc.stations[1].cw_min = 128;
    sc.stations[2].p_err = 0.05;
    std::string text = scenario_to_json(sc);
    NetworkScenario back = parse_scenario(text, sc.name);
    REQUIRE(back.stations.size() == sc.stations.size());
    for (size_t j = 0; j < sc.stations.size(); ++j) {
        CHECK(back.stations[j].id == sc.stations[j].id);
        CHECK(back.stations[j].lambda_pkt_s == doctest::Approx(sc.stations[j].lambda_pkt_s));
        CHECK(back.stations[j].cw_min == sc.stations[j].cw_min);
        CHECK(back.stations[j].p_err == doctest::Approx(sc.stations[j].p_err));
    }
}

TEST_CASE("parser rejects unknown keys but passes annotations") {
    CHECK_THROWS_AS(
        parse_scenario(R"({"stations":[{"id":"a","lambda_pkt_s":1,"rate_bps":1e6,)"
                       R"("payload_bytes":1000,"spelling_mistake":1}]})",
                       "x"),
        ScenarioError);
    CHECK_THROWS_AS(parse_scenario(R"({"stations":[],"extra":{}})", "x"), ScenarioError);
    CHECK_NOTHROW(
        parse_scenario(R"({"_note":"ok","stations":[{"id":"a","lambda_pkt_s":1,)"
                       R"("rate_bps":1e6,"payload_bytes":1000,"_why":"ok"}]})",
                       "x"));
}

TEST_CASE("parser reports missing required keys") {
    CHECK_THROWS_AS(parse_scenario(R"({"stations":[{"id":"a","lambda_pkt_s":1}]})", "x"),
                    ScenarioError);
    CHECK_THROWS_AS(parse_scenario("not json", "x"), ScenarioError);
}
