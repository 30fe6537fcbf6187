// Command-line front end: scenario analysis, CW allocation, simulation and
// rate sweeps, with table or fixed-schema CSV output.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wlanfair/analytic.hpp"
#include "wlanfair/fairness.hpp"
#include "wlanfair/scenario.hpp"
#include "wlanfair/scenario_io.hpp"
#include "wlanfair/sim.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr const char* kCsvHeader =
    "scenario,criterion,source,station_id,lambda_pkt_s,rate_bps,throughput_bps,"
    "normalized,w0,jain,aggregate_bps";

std::string fmt6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

struct CsvRow {
    std::string scenario, criterion, source, station_id;
    double lambda_pkt_s = 0, rate_bps = 0, throughput_bps = 0, normalized = 0;
    int w0 = 0;
    double jain = 0, aggregate_bps = 0;
};

void append_csv(std::string& out, const CsvRow& r) {
    out += r.scenario + ',' + r.criterion + ',' + r.source + ',' + r.station_id + ',' +
           fmt6(r.lambda_pkt_s) + ',' + fmt6(r.rate_bps) + ',' + fmt6(r.throughput_bps) + ',' +
           fmt6(r.normalized) + ',' + std::to_string(r.w0) + ',' + fmt6(r.jain) + ',' +
           fmt6(r.aggregate_bps) + '\n';
}

struct SimSummary {
    std::vector<double> mean_bps, sd_bps;
    double agg_mean = 0, agg_sd = 0, jain = 0;
};

SimSummary summarize_runs(const wlanfair::NetworkScenario& sc,
                          const std::vector<wlanfair::SimResult>& runs) {
    size_t n = sc.stations.size();
    SimSummary s;
    s.mean_bps.assign(n, 0.0);
    s.sd_bps.assign(n, 0.0);
    for (const auto& r : runs) {
        for (size_t j = 0; j < n; ++j) s.mean_bps[j] += r.throughput_bps[j];
        s.agg_mean += r.aggregate_bps;
    }
    double k = static_cast<double>(runs.size());
    for (size_t j = 0; j < n; ++j) s.mean_bps[j] /= k;
    s.agg_mean /= k;
    if (runs.size() > 1) {
        double agg_acc = 0;
        std::vector<double> acc(n, 0.0);
        for (const auto& r : runs) {
            for (size_t j = 0; j < n; ++j) {
                double d = r.throughput_bps[j] - s.mean_bps[j];
                acc[j] += d * d;
            }
            double d = r.aggregate_bps - s.agg_mean;
            agg_acc += d * d;
        }
        for (size_t j = 0; j < n; ++j) s.sd_bps[j] = std::sqrt(acc[j] / (k - 1.0));
        s.agg_sd = std::sqrt(agg_acc / (k - 1.0));
    }
    std::vector<double> norm(n);
    for (size_t j = 0; j < n; ++j) norm[j] = s.mean_bps[j] / sc.stations[j].rate_bps;
    s.jain = wlanfair::jain_index(norm);
    return s;
}

std::vector<wlanfair::SimResult> run_sims(const wlanfair::NetworkScenario& sc, double duration_s,
                                          std::uint64_t seed, int runs) {
    std::vector<std::future<wlanfair::SimResult>> futs;
    futs.reserve(static_cast<size_t>(runs));
    for (int r = 0; r < runs; ++r)
        futs.push_back(std::async(std::launch::async, [&sc, duration_s, seed, r] {
            return wlanfair::simulate(sc, duration_s, seed + static_cast<std::uint64_t>(r));
        }));
    std::vector<wlanfair::SimResult> out;
    out.reserve(static_cast<size_t>(runs));
    for (auto& f : futs) out.push_back(f.get());
    return out;
}

struct CommonOpts {
    std::string scenario_path;
    std::string format = "table";
    std::string out_path;
    std::string criterion = "pf";
    double duration_s = 100.0;
    std::uint64_t seed = 1;
    int runs = 3;
    std::string trace_path;
};

void add_io_opts(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("scenario", o.scenario_path, "scenario JSON file")->required();
    cmd->add_option("--format", o.format, "table | csv")
        ->check(CLI::IsMember({"table", "csv"}));
    cmd->add_option("--out", o.out_path, "write output to PATH instead of stdout");
}

void deliver(const CommonOpts& o, const std::string& text) {
    if (o.out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(o.out_path, std::ios::binary);
    if (!f) throw wlanfair::ScenarioError("cannot open output file: " + o.out_path);
    f << text;
}

std::string digest_of(const wlanfair::NetworkScenario& sc) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%08llx",
                  static_cast<unsigned long long>(fnv1a(wlanfair::scenario_to_json(sc)) & 0xffffffffULL));
    return buf;
}

std::string table_header(const wlanfair::NetworkScenario& sc) {
    std::ostringstream os;
    os << "wlanfair " << kVersion << "  scenario '" << sc.name << "' (" << sc.stations.size()
       << " stations, digest " << digest_of(sc) << ")\n";
    return os.str();
}

int cmd_analyze(const CommonOpts& o) {
    wlanfair::NetworkScenario sc = wlanfair::load_scenario(o.scenario_path);
    wlanfair::EquilibriumSolution eq = wlanfair::solve_equilibrium(sc);
    std::vector<double> norm(sc.stations.size());
    for (size_t j = 0; j < sc.stations.size(); ++j)
        norm[j] = eq.throughput_bps[j] / sc.stations[j].rate_bps;
    double jain = wlanfair::jain_index(norm);

    std::string out;
    if (o.format == "csv") {
        out += kCsvHeader;
        out += '\n';
        for (size_t j = 0; j < sc.stations.size(); ++j) {
            CsvRow r{sc.name,
                     "dcf",
                     "analytic",
                     sc.stations[j].id,
                     sc.stations[j].lambda_pkt_s,
                     sc.stations[j].rate_bps,
                     eq.throughput_bps[j],
                     norm[j],
                     sc.cw_min_of(static_cast<int>(j)),
                     jain,
                     eq.aggregate_bps};
            append_csv(out, r);
        }
    } else {
        std::ostringstream os;
        os << table_header(sc);
        os << "DCF equilibrium (" << eq.iterations << " sweeps, residual " << fmt6(eq.residual)
           << ")\n";
        char line[256];
        os << "  station      lambda/s    rate_bps       tau      b_idle     S_bps       S/R\n";
        for (size_t j = 0; j < sc.stations.size(); ++j) {
            std::snprintf(line, sizeof line, "  %-10s %9.6g %11.6g %9.6f %9.6f %11.6g %9.6f\n",
                          sc.stations[j].id.c_str(), sc.stations[j].lambda_pkt_s,
                          sc.stations[j].rate_bps, eq.tau[j], eq.b_idle[j], eq.throughput_bps[j],
                          norm[j]);
            os << line;
        }
        std::snprintf(line, sizeof line,
                      "  slot avg %.6g us = idle %.6g + success %.6g + collision %.6g + error "
                      "%.6g\n",
                      eq.slot.t_av_us, eq.slot.t_idle_us, eq.slot.t_success_us,
                      eq.slot.t_collision_us, eq.slot.t_error_us);
        os << line;
        std::snprintf(line, sizeof line, "  aggregate %.6g bit/s   Jain %.6g\n", eq.aggregate_bps,
                      jain);
        os << line;
        out = os.str();
    }
    deliver(o, out);
    return 0;
}

int cmd_optimize(const CommonOpts& o, const std::string& emit_path) {
    wlanfair::Criterion crit;
    if (!wlanfair::criterion_from_name(o.criterion, crit))
        throw wlanfair::ScenarioError("unknown criterion: " + o.criterion);
    wlanfair::NetworkScenario sc = wlanfair::load_scenario(o.scenario_path);
    wlanfair::AllocationResult res = wlanfair::optimize(sc, crit);

    if (!emit_path.empty()) {
        wlanfair::NetworkScenario derived = sc;
        derived.name = sc.name + "-" + wlanfair::criterion_name(crit);
        for (size_t j = 0; j < derived.stations.size(); ++j)
            derived.stations[j].cw_min = res.cw_out[j];
        wlanfair::write_scenario(derived, emit_path);
    }

    std::string out;
    if (o.format == "csv") {
        out += kCsvHeader;
        out += '\n';
        for (size_t j = 0; j < sc.stations.size(); ++j) {
            CsvRow r{sc.name,
                     wlanfair::criterion_name(crit),
                     "analytic",
                     sc.stations[j].id,
                     sc.stations[j].lambda_pkt_s,
                     sc.stations[j].rate_bps,
                     res.s_bps[j],
                     res.s_bps[j] / sc.stations[j].rate_bps,
                     res.cw_out[j],
                     res.jain,
                     res.aggregate_bps};
            append_csv(out, r);
        }
    } else {
        std::ostringstream os;
        os << table_header(sc);
        os << "criterion " << wlanfair::criterion_name(crit) << "\n";
        os << "  station      lambda/s    rate_bps      tau*     w0_out     S_bps       S/R\n";
        char line[256];
        for (size_t j = 0; j < sc.stations.size(); ++j) {
            std::snprintf(line, sizeof line, "  %-10s %9.6g %11.6g %9.6f %8d %12.6g %9.6f\n",
                          sc.stations[j].id.c_str(), sc.stations[j].lambda_pkt_s,
                          sc.stations[j].rate_bps, res.tau_opt[j], res.cw_out[j], res.s_bps[j],
                          res.s_bps[j] / sc.stations[j].rate_bps);
            os << line;
        }
        std::snprintf(line, sizeof line,
                      "  aggregate %.6g bit/s   utility %.6g   Jain %.6g   stationarity %.3g\n",
                      res.aggregate_bps, res.utility, res.jain, res.stationarity_residual);
        os << line;
        if (!emit_path.empty()) os << "  derived scenario written to " << emit_path << "\n";
        out = os.str();
    }
    deliver(o, out);
    return 0;
}

int cmd_simulate(const CommonOpts& o) {
    if (!(o.duration_s > 0)) throw wlanfair::ScenarioError("duration must be positive");
    if (o.runs < 1) throw wlanfair::ScenarioError("runs must be >= 1");
    wlanfair::NetworkScenario sc = wlanfair::load_scenario(o.scenario_path);

    std::string trace_text;
    std::vector<wlanfair::SimResult> runs;
    if (!o.trace_path.empty()) {
        // trace the first seed only; remaining runs stay untraced
        wlanfair::SimOptions opt;
        opt.on_event = [&trace_text, &sc](const wlanfair::TraceEvent& ev) {
            const char* kind = "?";
            switch (ev.kind) {
                case wlanfair::TraceEvent::Kind::Arrival: kind = "ARRIVAL"; break;
                case wlanfair::TraceEvent::Kind::Drop: kind = "DROP"; break;
                case wlanfair::TraceEvent::Kind::TxOk: kind = "TX_OK"; break;
                case wlanfair::TraceEvent::Kind::TxError: kind = "TX_ERR"; break;
                case wlanfair::TraceEvent::Kind::Collision: kind = "COLLISION"; break;
            }
            char line[128];
            std::snprintf(line, sizeof line, "%.3f %s %s\n", ev.t_us,
                          sc.stations[static_cast<size_t>(ev.station)].id.c_str(), kind);
            trace_text += line;
        };
        runs.push_back(wlanfair::simulate(sc, o.duration_s, o.seed, opt));
        auto rest = run_sims(sc, o.duration_s, o.seed + 1, o.runs - 1);
        runs.insert(runs.end(), rest.begin(), rest.end());
        std::ofstream tf(o.trace_path, std::ios::binary);
        if (!tf) throw wlanfair::ScenarioError("cannot open trace file: " + o.trace_path);
        tf << trace_text;
    } else {
        runs = run_sims(sc, o.duration_s, o.seed, o.runs);
    }
    SimSummary s = summarize_runs(sc, runs);

    std::string out;
    if (o.format == "csv") {
        out += kCsvHeader;
        out += '\n';
        for (size_t j = 0; j < sc.stations.size(); ++j) {
            CsvRow r{sc.name,
                     "dcf",
                     "simulated",
                     sc.stations[j].id,
                     sc.stations[j].lambda_pkt_s,
                     sc.stations[j].rate_bps,
                     s.mean_bps[j],
                     s.mean_bps[j] / sc.stations[j].rate_bps,
                     sc.cw_min_of(static_cast<int>(j)),
                     s.jain,
                     s.agg_mean};
            append_csv(out, r);
        }
    } else {
        std::ostringstream os;
        os << table_header(sc);
        os << "simulated " << o.runs << " x " << fmt6(o.duration_s) << " s, seeds " << o.seed
           << ".." << (o.seed + static_cast<std::uint64_t>(o.runs) - 1) << "\n";
        os << "  station      lambda/s    rate_bps      S_bps        sd       S/R\n";
        char line[256];
        for (size_t j = 0; j < sc.stations.size(); ++j) {
            std::snprintf(line, sizeof line, "  %-10s %9.6g %11.6g %11.6g %9.3g %9.6f\n",
                          sc.stations[j].id.c_str(), sc.stations[j].lambda_pkt_s,
                          sc.stations[j].rate_bps, s.mean_bps[j], s.sd_bps[j],
                          s.mean_bps[j] / sc.stations[j].rate_bps);
            os << line;
        }
        std::snprintf(line, sizeof line, "  aggregate %.6g bit/s (sd %.3g)   Jain %.6g\n",
                      s.agg_mean, s.agg_sd, s.jain);
        os << line;
        const auto& c = runs.front().counters;
        std::uint64_t arr = 0, drop = 0, succ = 0, coll = 0, cherr = 0;
        for (const auto& x : c) {
            arr += x.arrivals;
            drop += x.drops;
            succ += x.successes;
            coll += x.collisions;
            cherr += x.channel_errors;
        }
        std::snprintf(line, sizeof line,
                      "  first run: %llu arrivals, %llu drops, %llu successes, %llu collisions, "
                      "%llu channel errors\n",
                      static_cast<unsigned long long>(arr), static_cast<unsigned long long>(drop),
                      static_cast<unsigned long long>(succ), static_cast<unsigned long long>(coll),
                      static_cast<unsigned long long>(cherr));
        os << line;
        out = os.str();
    }
    deliver(o, out);
    return 0;
}

struct SweepOpts {
    std::string station_id;
    double from = 10, to = 3300;
    int points = 25;
    bool linear = false;
    std::string modes = "dcf";
    bool with_sim = false;
};

int cmd_sweep(const CommonOpts& o, const SweepOpts& so) {
    wlanfair::NetworkScenario base = wlanfair::load_scenario(o.scenario_path);
    if (!(so.from > 0) || !(so.to >= so.from) || so.points < 2)
        throw wlanfair::ScenarioError("sweep range must satisfy 0 < from <= to, points >= 2");
    int target = -1;
    for (size_t j = 0; j < base.stations.size(); ++j)
        if (base.stations[j].id == so.station_id) target = static_cast<int>(j);
    if (target < 0) throw wlanfair::ScenarioError("sweep station not found: " + so.station_id);

    std::vector<wlanfair::Criterion> modes;
    {
        std::stringstream ss(so.modes);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            wlanfair::Criterion c;
            if (!wlanfair::criterion_from_name(tok, c))
                throw wlanfair::ScenarioError("unknown sweep mode: " + tok);
            modes.push_back(c);
        }
        if (modes.empty()) throw wlanfair::ScenarioError("no sweep modes given");
    }

    std::vector<double> grid(static_cast<size_t>(so.points));
    for (int k = 0; k < so.points; ++k) {
        double f = static_cast<double>(k) / (so.points - 1);
        grid[static_cast<size_t>(k)] = so.linear
                                           ? so.from + (so.to - so.from) * f
                                           : so.from * std::pow(so.to / so.from, f);
    }

    // one task per grid point; rows are assembled in grid order afterwards
    auto point_rows = [&](double lam) {
        wlanfair::NetworkScenario sc = base;
        sc.stations[static_cast<size_t>(target)].lambda_pkt_s = lam;
        std::string label = base.name + ":" + so.station_id + "=" + fmt6(lam);
        std::vector<CsvRow> rows;
        for (wlanfair::Criterion mode : modes) {
            wlanfair::AllocationResult res = wlanfair::optimize(sc, mode);
            for (size_t j = 0; j < sc.stations.size(); ++j) {
                rows.push_back(CsvRow{label, wlanfair::criterion_name(mode), "analytic",
                                      sc.stations[j].id, sc.stations[j].lambda_pkt_s,
                                      sc.stations[j].rate_bps, res.s_bps[j],
                                      res.s_bps[j] / sc.stations[j].rate_bps, res.cw_out[j],
                                      res.jain, res.aggregate_bps});
            }
            if (so.with_sim) {
                wlanfair::NetworkScenario simmed = sc;
                if (mode != wlanfair::Criterion::DCF)
                    for (size_t j = 0; j < simmed.stations.size(); ++j)
                        simmed.stations[j].cw_min = res.cw_out[j];
                SimSummary s = summarize_runs(simmed, run_sims(simmed, o.duration_s, o.seed, o.runs));
                for (size_t j = 0; j < sc.stations.size(); ++j) {
                    rows.push_back(CsvRow{label, wlanfair::criterion_name(mode), "simulated",
                                          sc.stations[j].id, sc.stations[j].lambda_pkt_s,
                                          sc.stations[j].rate_bps, s.mean_bps[j],
                                          s.mean_bps[j] / sc.stations[j].rate_bps,
                                          simmed.cw_min_of(static_cast<int>(j)), s.jain,
                                          s.agg_mean});
                }
            }
        }
        return rows;
    };

    std::vector<std::future<std::vector<CsvRow>>> futs;
    futs.reserve(grid.size());
    for (double lam : grid)
        futs.push_back(std::async(std::launch::async, point_rows, lam));

    std::string out;
    out += kCsvHeader;
    out += '\n';
    std::vector<std::vector<CsvRow>> collected;
    collected.reserve(grid.size());
    for (auto& f : futs) collected.push_back(f.get());
    for (const auto& rows : collected)
        for (const auto& r : rows) append_csv(out, r);
    if (o.format == "table") {
        // the sweep is plot fodder; the table view is the same CSV
    }
    deliver(o, out);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multirate 802.11 DCF throughput analysis, fair CW allocation and simulation"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    CommonOpts o;
    std::string emit_path;
    SweepOpts so;

    CLI::App* analyze = app.add_subcommand("analyze", "DCF equilibrium throughput of a scenario");
    add_io_opts(analyze, o);

    CLI::App* optimize =
        app.add_subcommand("optimize", "CW allocation under a fairness criterion");
    add_io_opts(optimize, o);
    optimize->add_option("--criterion", o.criterion, "dcf | pf | lpf | mlpf")
        ->check(CLI::IsMember({"dcf", "pf", "lpf", "mlpf"}));
    optimize->add_option("--emit-scenario", emit_path,
                         "write a derived scenario with cw_min set to the allocation");

    CLI::App* simulate = app.add_subcommand("simulate", "event simulation of a scenario");
    add_io_opts(simulate, o);
    simulate->add_option("--duration-s", o.duration_s, "virtual seconds per run");
    simulate->add_option("--seed", o.seed, "base RNG seed; run r uses seed + r");
    simulate->add_option("--runs", o.runs, "number of seeds");
    simulate->add_option("--trace", o.trace_path, "write an event trace of the first run");

    CLI::App* sweep = app.add_subcommand("sweep", "arrival-rate sweep of one station (CSV)");
    add_io_opts(sweep, o);
    sweep->add_option("--station", so.station_id, "station id whose lambda is swept")->required();
    sweep->add_option("--from", so.from, "lowest lambda, pkt/s");
    sweep->add_option("--to", so.to, "highest lambda, pkt/s");
    sweep->add_option("--points", so.points, "grid size");
    sweep->add_flag("--linear", so.linear, "linear grid instead of log-spaced");
    sweep->add_option("--modes", so.modes, "comma list of dcf,pf,lpf,mlpf");
    sweep->add_flag("--simulate", so.with_sim, "add simulated rows per grid point");
    sweep->add_option("--duration-s", o.duration_s, "virtual seconds per simulated run");
    sweep->add_option("--seed", o.seed, "base RNG seed for simulated rows");
    sweep->add_option("--runs", o.runs, "seeds per simulated point");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (analyze->parsed()) return cmd_analyze(o);
        if (optimize->parsed()) return cmd_optimize(o, emit_path);
        if (simulate->parsed()) return cmd_simulate(o);
        if (sweep->parsed()) return cmd_sweep(o, so);
    } catch (const wlanfair::SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 3;
    } catch (const wlanfair::ScenarioError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
