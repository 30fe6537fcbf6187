#include "wlanfair/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace wlanfair {

namespace {
void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}
} // namespace

void PhyMacParams::validate() const {
    require(slot_us > 0 && sifs_us > 0 && difs_us > 0, "phy: durations must be positive");
    require(difs_us > sifs_us, "phy: difs must exceed sifs");
    require(phy_header_us > 0 && mac_header_bits > 0 && ack_bits > 0, "phy: header/ack sizes must be positive");
    require(ack_rate_bps > 0, "phy: ack_rate_bps must be positive");
    require(max_backoff_stage >= 1, "phy: max_backoff_stage must be >= 1");
    require(default_cw_min >= 2, "phy: default_cw_min must be >= 2");
    require(propagation_us >= 0, "phy: propagation_us must be >= 0");
}

void StationConfig::validate() const {
    require(!id.empty(), "station: id must be non-empty");
    require(lambda_pkt_s >= 0, "station '" + id + "': lambda_pkt_s must be >= 0");
    require(rate_bps > 0, "station '" + id + "': rate_bps must be positive");
    require(payload_bytes > 0, "station '" + id + "': payload_bytes must be positive");
    require(cw_min == 0 || cw_min >= 2, "station '" + id + "': cw_min must be >= 2");
    require(p_err >= 0 && p_err < 1, "station '" + id + "': p_err must be in [0,1)");
}

void NetworkScenario::validate() const {
    require(!stations.empty(), "scenario: needs at least one station");
    phy.validate();
    std::set<std::string> ids;
    for (const auto& st : stations) {
        st.validate();
        require(ids.insert(st.id).second, "scenario: duplicate station id '" + st.id + "'");
    }
}

int NetworkScenario::cw_min_of(int s) const {
    int w = stations[static_cast<size_t>(s)].cw_min;
    return w > 0 ? w : phy.default_cw_min;
}

FrameTimes frame_durations(const StationConfig& st, const PhyMacParams& phy) {
    double header_rate = phy.mac_header_at_data_rate ? st.rate_bps : phy.ack_rate_bps;
    double data_us = phy.phy_header_us
                   + phy.mac_header_bits / header_rate * 1e6
                   + 8.0 * st.payload_bytes / st.rate_bps * 1e6;
    double ack_us = phy.phy_header_us + phy.ack_bits / phy.ack_rate_bps * 1e6;
    double ts = data_us + phy.sifs_us + ack_us + phy.difs_us + 2.0 * phy.propagation_us;
    // ACK timeout = SIFS + ACK duration, so the error slot spans the same time
    return FrameTimes{ts, ts};
}

DurationClassing classify_stations(const NetworkScenario& sc) {
    const double tol_us = 0.5;
    int n = static_cast<int>(sc.stations.size());
    std::vector<double> occ(static_cast<size_t>(n));
    for (int s = 0; s < n; ++s)
        occ[static_cast<size_t>(s)] = frame_durations(sc.stations[static_cast<size_t>(s)], sc.phy).t_error_us;

    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        double da = occ[static_cast<size_t>(a)], db = occ[static_cast<size_t>(b)];
        if (da != db) return da > db; // slowest first
        return a < b;
    });

    DurationClassing cl;
    cl.station_class.assign(static_cast<size_t>(n), -1);
    for (int idx : order) {
        double d = occ[static_cast<size_t>(idx)];
        if (cl.members.empty() || cl.t_collision_us.back() - d > tol_us) {
            cl.members.push_back({});
            cl.t_collision_us.push_back(d); // class duration = slowest member
        }
        cl.members.back().push_back(idx);
        cl.station_class[static_cast<size_t>(idx)] = cl.n_classes() - 1;
    }
    for (auto& m : cl.members) std::sort(m.begin(), m.end());
    return cl;
}

} // namespace wlanfair
