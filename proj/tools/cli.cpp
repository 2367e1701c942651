#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "ulpsim/decks.hpp"
#include "ulpsim/engine.hpp"
#include "ulpsim/errors.hpp"
#include "ulpsim/measure.hpp"
#include "ulpsim/plot.hpp"
#include "ulpsim/variation.hpp"

namespace ulpsim::cli {

namespace {

// numeric CLI values accept netlist unit suffixes ("20u", "200f", "-40")
double value_of(const std::string& token, const std::string& flag) {
    try {
        return parse_value(token);
    } catch (const ParseError& e) {
        throw DomainError(flag + ": " + e.what());
    }
}

std::vector<double> list_of(const std::string& tokens, const std::string& flag) {
    std::vector<double> out;
    std::stringstream ss(tokens);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(value_of(item, flag));
    }
    if (out.empty()) throw DomainError(flag + ": empty list");
    return out;
}

std::vector<std::string> name_list(const std::string& tokens) {
    std::vector<std::string> out;
    std::stringstream ss(tokens);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DomainError("cannot open deck '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct CommonOpts {
    std::string deck_path;
    std::string vin, vddh, vddl, temp, tstep, tstop, foper;
    std::string input_source;
    std::string output_node = "out";
    int workers = 0; // 0 -> env/default

    void attach(CLI::App* cmd, bool with_deck = true) {
        if (with_deck) {
            cmd->add_option("deck", deck_path, "netlist file")
                ->required()
                ->check(CLI::ExistingFile);
        }
        cmd->add_option("--vin", vin, "input pulse amplitude override (V)");
        cmd->add_option("--foper", foper, "input pulse frequency override (Hz)");
        cmd->add_option("--vddh", vddh, "high supply override (V)");
        cmd->add_option("--vddl", vddl, "low supply override (V)");
        cmd->add_option("--temp", temp, "temperature override (C)");
        cmd->add_option("--tstep", tstep, "transient step override (s)");
        cmd->add_option("--tstop", tstop, "transient stop override (s)");
        cmd->add_option("--input", input_source, "input pulse source name (default: auto)");
        cmd->add_option("--node", output_node, "output node name (default: out)");
        cmd->add_option("--workers", workers, "campaign worker count (env ULPSIM_WORKERS)");
    }

    RunConfig run_config() const {
        RunConfig cfg;
        cfg.input_source = input_source;
        cfg.output_node = output_node;
        return cfg;
    }

    int worker_count() const { return workers > 0 ? workers : default_workers(1); }

    Circuit load() const {
        Circuit c = compile_netlist(read_file(deck_path));
        for (const auto& note : c.diagnostics) std::cerr << "note: " << note << "\n";
        if (!vin.empty() || !vddh.empty() || !vddl.empty() || !foper.empty()) {
            const DeckRoles roles = identify_roles(c, run_config());
            if (!vin.empty())
                c = with_pulse_amplitude(c, roles.input_source, value_of(vin, "--vin"));
            if (!foper.empty())
                c = with_pulse_frequency(c, roles.input_source, value_of(foper, "--foper"));
            if (!vddh.empty()) c = with_dc_value(c, roles.vddh_source, value_of(vddh, "--vddh"));
            if (!vddl.empty()) c = with_dc_value(c, roles.vddl_source, value_of(vddl, "--vddl"));
        }
        if (!temp.empty()) c.global_temp_c = value_of(temp, "--temp");
        if (!tstep.empty() || !tstop.empty()) {
            const TranSpec* t = c.tran();
            double step = !tstep.empty() ? value_of(tstep, "--tstep") : (t ? t->t_step : 1e-9);
            double stop = !tstop.empty() ? value_of(tstop, "--tstop") : (t ? t->t_stop : 0);
            if (!(stop > 0)) throw DomainError("--tstop required when the deck has no .tran");
            c = with_tran(c, step, stop);
        }
        return c;
    }
};

void print_report(const MeasureReport& r) {
    std::printf("vin=%.4g V  vddl=%.4g V  vddh=%.4g V  temp=%.4g C\n", r.v_in, r.v_ddl, r.v_ddh,
                r.temp_c);
    std::printf("vout_high=%.6g V  vout_low=%.6g V  cycles=%d\n", r.v_out_high, r.v_out_low,
                r.cycles_measured);
    std::printf("td_rise=%.6g s  td_fall=%.6g s  td_max=%.6g s\n", r.t_d_rise, r.t_d_fall,
                r.t_d_max);
    std::printf("p_avg=%.6g W  pdp=%.6g J  functional=%d\n", r.p_avg, r.pdp,
                r.functional ? 1 : 0);
}

int cmd_run(const CommonOpts& opts, const std::string& out_path,
            const std::string& report_path, const std::string& plot_path,
            const std::string& plot_nodes) {
    const Circuit c = opts.load();
    const Waveform w = run_transient(c);
    if (!out_path.empty()) atomic_write(out_path, w.to_csv());
    if (!plot_path.empty()) {
        std::vector<std::string> nodes = name_list(plot_nodes);
        if (nodes.empty()) {
            const DeckRoles roles = identify_roles(c, opts.run_config());
            const auto& vs = std::get<VSource>(c.find_device(roles.input_source)->kind);
            nodes = {c.node_names[vs.npos], opts.output_node};
        }
        emit_plot(w, nodes, plot_path);
    }
    if (!report_path.empty()) {
        const MeasureReport r = measure_waveform(w, c, opts.run_config());
        atomic_write(report_path, report_csv_header() + "\n" + report_csv_row(r) + "\n");
        print_report(r);
        if (std::isnan(r.t_d_max)) {
            std::cerr << "measurement failure: output edge missing\n";
            return 3;
        }
    }
    return 0;
}

int cmd_sweep(const CommonOpts& opts, const std::string& vin_list,
              const std::string& vddl_list, const std::string& out_path) {
    const Circuit base = opts.load();
    const DeckRoles roles = identify_roles(base, opts.run_config());
    std::vector<double> vins =
        vin_list.empty() ? std::vector<double>{roles.vin_amplitude} : list_of(vin_list, "--vin");
    std::vector<double> vddls =
        vddl_list.empty() ? std::vector<double>{roles.vddl} : list_of(vddl_list, "--vddl");
    // broadcast a scalar; equal-length lists run pairwise
    if (vins.size() == 1 && vddls.size() > 1) vins.assign(vddls.size(), vins[0]);
    if (vddls.size() == 1 && vins.size() > 1) vddls.assign(vins.size(), vddls[0]);
    if (vins.size() != vddls.size()) {
        throw DomainError("--vin and --vddl lists must have equal length (or be scalar)");
    }

    std::string csv = report_csv_header() + "\n";
    for (size_t k = 0; k < vins.size(); ++k) {
        Circuit c = with_pulse_amplitude(base, roles.input_source, vins[k]);
        c = with_dc_value(c, roles.vddl_source, vddls[k]);
        const MeasureReport r = measure_run(c, opts.run_config());
        csv += report_csv_row(r) + "\n";
        std::printf("vin=%.4g vddl=%.4g: pavg=%.6g W tdmax=%.6g s functional=%d\n", vins[k],
                    vddls[k], r.p_avg, r.t_d_max, r.functional ? 1 : 0);
    }
    if (!out_path.empty()) atomic_write(out_path, csv);
    // a non-functional row is sweep data, not a failure of the sweep itself
    return 0;
}

std::string wc_csv(const CampaignResult& res) {
    std::string out = "variant";
    for (const auto& [name, _] : res.variants.front().w_mult) out += ",w_" + name;
    out += ",tdr,tdf,tdmax,pavg,functional\n";
    char buf[200];
    for (size_t k = 0; k < res.variants.size(); ++k) {
        out += std::to_string(res.variants[k].id);
        for (const auto& [_, m] : res.variants[k].w_mult) {
            std::snprintf(buf, sizeof buf, ",%.8e", m);
            out += buf;
        }
        const auto& o = res.outcomes[k];
        if (o.ok) {
            std::snprintf(buf, sizeof buf, ",%.8e,%.8e,%.8e,%.8e,%d", o.report.t_d_rise,
                          o.report.t_d_fall, o.report.t_d_max, o.report.p_avg,
                          o.report.functional ? 1 : 0);
            out += buf;
        } else {
            out += ",nan,nan,nan,nan,0";
        }
        out += "\n";
    }
    return out;
}

void print_campaign(const CampaignResult& res) {
    std::printf("variants=%zu functional=%d failures=%d\n", res.variants.size(),
                res.functional_count, res.failure_count);
    if (res.pdp.count > 0) {
        std::printf("pavg: mean=%.6g W sd=%.3g  pdp: mean=%.6g J sd=%.3g min=%.6g max=%.6g\n",
                    res.pavg.mean, res.pavg.stddev, res.pdp.mean, res.pdp.stddev, res.pdp.min,
                    res.pdp.max);
    }
    for (const auto& o : res.outcomes) {
        if (!o.ok) std::printf("variant %d failed: %s\n", o.id, o.error.c_str());
    }
}

} // namespace

int dispatch(const std::vector<std::string>& args) {
    CLI::App app{"ulpsim: desk-scale level-shifter simulation and characterization"};
    app.require_subcommand(1);

    CommonOpts run_o, sweep_o, mc_o, corners_o, wc_o, temps_o, minvin_o;

    auto* run = app.add_subcommand("run", "single transient run with optional measurement");
    run_o.attach(run);
    std::string run_out, run_report, run_plot, run_plot_nodes;
    run->add_option("--out", run_out, "waveform CSV path");
    run->add_option("--report", run_report, "measurement report CSV path");
    run->add_option("--plot", run_plot, "SVG waveform plot path");
    run->add_option("--nodes", run_plot_nodes, "comma list of nodes to plot");

    auto* sweep = app.add_subcommand("sweep", "repeat the run over vin/vddl lists");
    sweep_o.attach(sweep);
    std::string sweep_vin, sweep_vddl, sweep_out;
    sweep->add_option("--vin-list", sweep_vin, "comma list of input amplitudes");
    sweep->add_option("--vddl-list", sweep_vddl, "comma list of low-supply values");
    sweep->add_option("--out", sweep_out, "report table CSV path");

    auto* mc = app.add_subcommand("mc", "seeded Monte Carlo campaign");
    mc_o.attach(mc);
    int mc_n = 200;
    std::uint64_t mc_seed = 1;
    std::string mc_sup = "0.10", mc_size = "0.04", mc_out, mc_hist;
    mc->add_option("-n,--samples", mc_n, "variant count");
    mc->add_option("--seed", mc_seed, "RNG seed");
    mc->add_option("--supply-tol", mc_sup, "supply tolerance fraction");
    mc->add_option("--size-tol", mc_size, "sizing tolerance fraction");
    mc->add_option("--out", mc_out, "per-variant CSV path");
    mc->add_option("--hist", mc_hist, "PDP histogram CSV path");

    auto* corners_cmd = app.add_subcommand("corners", "deterministic tolerance corners");
    corners_o.attach(corners_cmd);
    std::string co_sup = "0.10", co_size = "0.04", co_out;
    bool co_with_size = false;
    corners_cmd->add_option("--supply-tol", co_sup, "supply tolerance fraction");
    corners_cmd->add_option("--size-tol", co_size, "sizing tolerance fraction");
    corners_cmd->add_flag("--with-size", co_with_size, "add global W corners (8 variants)");
    corners_cmd->add_option("--out", co_out, "per-variant CSV path");

    auto* wc = app.add_subcommand("wc-sizing", "worst-case sizing corners on two devices");
    wc_o.attach(wc);
    std::string wc_devices = "MN1,MN2", wc_tol = "0.04", wc_out;
    wc->add_option("--devices", wc_devices, "two MOSFET names (default MN1,MN2)");
    wc->add_option("--tol", wc_tol, "sizing tolerance fraction");
    wc->add_option("--out", wc_out, "per-corner CSV path");

    auto* temps = app.add_subcommand("temp-sweep", "one run per temperature");
    temps_o.attach(temps);
    std::string temps_list = "-40,0,27,125", temps_out;
    temps->add_option("--temps", temps_list, "comma list of temperatures (C)");
    temps->add_option("--out", temps_out, "per-temperature CSV path");

    auto* minvin = app.add_subcommand("minvin", "bisect the minimum functional input amplitude");
    minvin_o.attach(minvin);
    std::string mv_lo = "0.02", mv_hi = "0.4", mv_tol = "5m";
    minvin->add_option("--lo", mv_lo, "lower bracket (V)");
    minvin->add_option("--hi", mv_hi, "upper bracket (V)");
    minvin->add_option("--tol", mv_tol, "bisection tolerance (V)");

    auto* validate = app.add_subcommand("validate", "parse, elaborate and DC-solve a deck");
    std::string validate_path;
    validate->add_option("deck", validate_path, "netlist file")
        ->required()
        ->check(CLI::ExistingFile);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 4;
    }

    try {
        if (run->parsed()) return cmd_run(run_o, run_out, run_report, run_plot, run_plot_nodes);
        if (sweep->parsed()) return cmd_sweep(sweep_o, sweep_vin, sweep_vddl, sweep_out);
        if (mc->parsed()) {
            const Circuit base = mc_o.load();
            ToleranceSpec tol;
            tol.supply_tol = value_of(mc_sup, "--supply-tol");
            tol.size_tol = value_of(mc_size, "--size-tol");
            const auto variants = sample_mc(base, tol, mc_n, mc_seed);
            const CampaignResult res =
                run_campaign(base, variants, mc_o.run_config(), mc_o.worker_count());
            if (!mc_out.empty()) atomic_write(mc_out, res.mc_csv(mc_seed));
            if (!mc_hist.empty()) atomic_write(mc_hist, res.histogram_csv());
            print_campaign(res);
            return 0;
        }
        if (corners_cmd->parsed()) {
            const Circuit base = corners_o.load();
            ToleranceSpec tol;
            tol.supply_tol = value_of(co_sup, "--supply-tol");
            tol.size_tol = value_of(co_size, "--size-tol");
            const auto variants = corners(
                base, tol, co_with_size ? CornerAxes::supply_and_size : CornerAxes::supply_only);
            const CampaignResult res =
                run_campaign(base, variants, corners_o.run_config(), corners_o.worker_count());
            if (!co_out.empty()) atomic_write(co_out, res.mc_csv(0));
            print_campaign(res);
            return 0;
        }
        if (wc->parsed()) {
            const Circuit base = wc_o.load();
            const auto devs = name_list(wc_devices);
            const auto variants = worst_case_sizing(base, devs, value_of(wc_tol, "--tol"));
            const CampaignResult res =
                run_campaign(base, variants, wc_o.run_config(), wc_o.worker_count());
            if (!wc_out.empty()) atomic_write(wc_out, wc_csv(res));
            print_campaign(res);
            return 0;
        }
        if (temps->parsed()) {
            const Circuit base = temps_o.load();
            const CampaignResult res = temp_sweep(base, list_of(temps_list, "--temps"),
                                                  temps_o.run_config(), temps_o.worker_count());
            if (!temps_out.empty()) atomic_write(temps_out, res.temp_csv());
            print_campaign(res);
            return 0;
        }
        if (minvin->parsed()) {
            const Circuit base = minvin_o.load();
            const double found =
                min_vin_search(base, minvin_o.run_config(), value_of(mv_lo, "--lo"),
                               value_of(mv_hi, "--hi"), value_of(mv_tol, "--tol"));
            std::printf("minimum functional vin: %.1f mV\n", found * 1e3);
            return 0;
        }
        if (validate->parsed()) {
            const DeckDiagnostics d = validate_deck(read_file(validate_path));
            for (const auto& m : d.messages) std::cout << m << "\n";
            std::cout << (d.ok ? "PASS" : "FAIL") << "\n";
            if (d.ok) return 0;
            const bool parse_issue =
                !d.messages.empty() && d.messages.front().rfind("parse/elaboration:", 0) == 0;
            return parse_issue ? 1 : 2;
        }
    } catch (const NetlistError& e) {
        std::cerr << "netlist error: " << e.what() << "\n";
        return 1;
    } catch (const ConvergenceError& e) {
        std::cerr << "convergence failure: " << e.what() << "\n";
        return 2;
    } catch (const MeasurementError& e) {
        std::cerr << "measurement failure: " << e.what() << "\n";
        return 3;
    } catch (const DomainError& e) {
        std::cerr << "bad arguments: " << e.what() << "\n";
        return 4;
    }
    return 4;
}

} // namespace ulpsim::cli
