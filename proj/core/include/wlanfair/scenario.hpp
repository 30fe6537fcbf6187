#pragma once

#include <string>
#include <vector>

namespace wlanfair {

// 802.11b long-preamble DSSS defaults. All times in microseconds, sizes in
// bits, rates in bit/s.
struct PhyMacParams {
    double slot_us = 20.0;
    double sifs_us = 10.0;
    double difs_us = 50.0;
    double phy_header_us = 192.0;   // PLCP preamble + header
    double mac_header_bits = 224.0; // MAC header + FCS, 28 bytes
    double ack_bits = 112.0;        // 14-byte ACK frame
    double ack_rate_bps = 1e6;      // basic rate; also carries the MAC header
                                    // unless mac_header_at_data_rate is set
    int max_backoff_stage = 5;      // m: CW doubles up to 2^m * W0
    int default_cw_min = 32;
    double propagation_us = 1.0;
    bool mac_header_at_data_rate = false;

    void validate() const; // throws std::invalid_argument
};

struct StationConfig {
    std::string id;
    double lambda_pkt_s = 0.0; // Poisson packet arrival rate
    double rate_bps = 1e6;     // PHY data rate for the payload
    double payload_bytes = 1028.0;
    int cw_min = 0;            // 0: use PhyMacParams::default_cw_min
    double p_err = 0.0;        // frame error probability, independent per tx

    void validate() const;
};

struct NetworkScenario {
    std::string name; // report label, not part of the on-disk schema
    std::vector<StationConfig> stations;
    PhyMacParams phy;

    void validate() const; // ids unique, every member valid
    int cw_min_of(int s) const;
};

struct FrameTimes {
    double t_success_us; // data + SIFS + ACK + DIFS, headers included
    double t_error_us;   // data + ACK timeout + DIFS; equals t_success_us
                         // with the timeout fixed at SIFS + ACK duration
};

FrameTimes frame_durations(const StationConfig& st, const PhyMacParams& phy);

// Stations are grouped by channel occupancy duration; class 0 is the slowest.
// A collision involving class d lasts t_collision_us[d] (the slowest
// participant dominates the wire time).
struct DurationClassing {
    std::vector<std::vector<int>> members; // class -> station indices
    std::vector<double> t_collision_us;    // strictly decreasing over classes
    std::vector<int> station_class;        // station -> class
    int n_classes() const { return static_cast<int>(members.size()); }
};

// Durations within 0.5 us share a class (sub-slot float noise).
DurationClassing classify_stations(const NetworkScenario& sc);

} // namespace wlanfair
