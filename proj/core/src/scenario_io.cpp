#include "wlanfair/scenario_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace wlanfair {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ScenarioError(msg); }

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed,
                    const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!it.key().empty() && it.key()[0] == '_') continue; // annotation, ignored
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) { known = true; break; }
        if (!known) fail(where + ": unknown key '" + it.key() + "'");
    }
}

double num(const json& obj, const char* key, const std::string& where) {
    const auto& v = obj.at(key);
    if (!v.is_number()) fail(where + ": '" + std::string(key) + "' must be a number");
    return v.get<double>();
}

double num_or(const json& obj, const char* key, double dflt, const std::string& where) {
    if (!obj.contains(key)) return dflt;
    return num(obj, key, where);
}

int int_field(const json& obj, const char* key, int dflt, const std::string& where) {
    if (!obj.contains(key)) return dflt;
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) fail(where + ": '" + std::string(key) + "' must be an integer");
    return v.get<int>();
}

} // namespace

NetworkScenario parse_scenario(const std::string& json_text, const std::string& name) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        fail("scenario parse error: " + std::string(e.what()));
    }
    if (!root.is_object()) fail("scenario: top level must be an object");
    reject_unknown(root, {"phy", "stations"}, "scenario");
    if (!root.contains("stations") || !root.at("stations").is_array() ||
        root.at("stations").empty())
        fail("scenario: 'stations' must be a non-empty array");

    NetworkScenario sc;
    sc.name = name;

    if (root.contains("phy")) {
        const auto& p = root.at("phy");
        if (!p.is_object()) fail("phy: must be an object");
        reject_unknown(p,
                       {"slot_us", "sifs_us", "difs_us", "phy_header_us", "mac_header_bits",
                        "ack_bits", "ack_rate_bps", "max_backoff_stage", "default_cw_min",
                        "propagation_us", "mac_header_at_data_rate"},
                       "phy");
        auto& ph = sc.phy;
        ph.slot_us = num_or(p, "slot_us", ph.slot_us, "phy");
        ph.sifs_us = num_or(p, "sifs_us", ph.sifs_us, "phy");
        ph.difs_us = num_or(p, "difs_us", ph.difs_us, "phy");
        ph.phy_header_us = num_or(p, "phy_header_us", ph.phy_header_us, "phy");
        ph.mac_header_bits = num_or(p, "mac_header_bits", ph.mac_header_bits, "phy");
        ph.ack_bits = num_or(p, "ack_bits", ph.ack_bits, "phy");
        ph.ack_rate_bps = num_or(p, "ack_rate_bps", ph.ack_rate_bps, "phy");
        ph.max_backoff_stage = int_field(p, "max_backoff_stage", ph.max_backoff_stage, "phy");
        ph.default_cw_min = int_field(p, "default_cw_min", ph.default_cw_min, "phy");
        ph.propagation_us = num_or(p, "propagation_us", ph.propagation_us, "phy");
        if (p.contains("mac_header_at_data_rate")) {
            const auto& v = p.at("mac_header_at_data_rate");
            if (!v.is_boolean()) fail("phy: 'mac_header_at_data_rate' must be a boolean");
            ph.mac_header_at_data_rate = v.get<bool>();
        }
    }

    for (const auto& s : root.at("stations")) {
        if (!s.is_object()) fail("stations: entries must be objects");
        std::string where = "station";
        if (s.contains("id") && s.at("id").is_string())
            where += " '" + s.at("id").get<std::string>() + "'";
        reject_unknown(s, {"id", "lambda_pkt_s", "rate_bps", "payload_bytes", "cw_min", "p_err"},
                       where);
        for (const char* req : {"id", "lambda_pkt_s", "rate_bps", "payload_bytes"})
            if (!s.contains(req)) fail(where + ": missing key '" + std::string(req) + "'");
        if (!s.at("id").is_string()) fail("station: 'id' must be a string");
        StationConfig st;
        st.id = s.at("id").get<std::string>();
        st.lambda_pkt_s = num(s, "lambda_pkt_s", where);
        st.rate_bps = num(s, "rate_bps", where);
        st.payload_bytes = num(s, "payload_bytes", where);
        st.cw_min = int_field(s, "cw_min", 0, where);
        st.p_err = num_or(s, "p_err", 0.0, where);
        sc.stations.push_back(std::move(st));
    }

    try {
        sc.validate();
    } catch (const std::invalid_argument& e) {
        fail(std::string("scenario: ") + e.what());
    }
    return sc;
}

NetworkScenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open scenario file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), std::filesystem::path(path).stem().string());
}

std::string scenario_to_json(const NetworkScenario& sc) {
    PhyMacParams dflt;
    json root = json::object();
    json phy = json::object();
    auto& p = sc.phy;
    if (p.slot_us != dflt.slot_us) phy["slot_us"] = p.slot_us;
    if (p.sifs_us != dflt.sifs_us) phy["sifs_us"] = p.sifs_us;
    if (p.difs_us != dflt.difs_us) phy["difs_us"] = p.difs_us;
    if (p.phy_header_us != dflt.phy_header_us) phy["phy_header_us"] = p.phy_header_us;
    if (p.mac_header_bits != dflt.mac_header_bits) phy["mac_header_bits"] = p.mac_header_bits;
    if (p.ack_bits != dflt.ack_bits) phy["ack_bits"] = p.ack_bits;
    if (p.ack_rate_bps != dflt.ack_rate_bps) phy["ack_rate_bps"] = p.ack_rate_bps;
    if (p.max_backoff_stage != dflt.max_backoff_stage)
        phy["max_backoff_stage"] = p.max_backoff_stage;
    if (p.default_cw_min != dflt.default_cw_min) phy["default_cw_min"] = p.default_cw_min;
    if (p.propagation_us != dflt.propagation_us) phy["propagation_us"] = p.propagation_us;
    if (p.mac_header_at_data_rate != dflt.mac_header_at_data_rate)
        phy["mac_header_at_data_rate"] = p.mac_header_at_data_rate;
    if (!phy.empty()) root["phy"] = phy;

    root["stations"] = json::array();
    for (const auto& st : sc.stations) {
        json s;
        s["id"] = st.id;
        s["lambda_pkt_s"] = st.lambda_pkt_s;
        s["rate_bps"] = st.rate_bps;
        s["payload_bytes"] = st.payload_bytes;
        if (st.cw_min > 0) s["cw_min"] = st.cw_min;
        if (st.p_err != 0.0) s["p_err"] = st.p_err;
        root["stations"].push_back(s);
    }
    return root.dump(2) + "\n";
}

void write_scenario(const NetworkScenario& sc, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("cannot write scenario file: " + path);
    out << scenario_to_json(sc);
}

} // namespace wlanfair
