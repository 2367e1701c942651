#include "ulpsim/measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "ulpsim/errors.hpp"

namespace ulpsim {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double interp_crossing(double t0, double v0, double t1, double v1, double level) {
    return t0 + (level - v0) / (v1 - v0) * (t1 - t0);
}

// Interpolated sample of a series at time t.
double sample_at(std::span<const double> times, std::span<const double> v, double t) {
    const auto it = std::lower_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return v.front();
    if (it == times.end()) return v.back();
    const size_t i = static_cast<size_t>(it - times.begin());
    const double t0 = times[i - 1], t1 = times[i];
    if (t1 == t0) return v[i];
    const double a = (t - t0) / (t1 - t0);
    return v[i - 1] * (1 - a) + v[i] * a;
}

} // namespace

std::vector<double> crossing_times(std::span<const double> times,
                                   std::span<const double> values, double level,
                                   EdgeDirection direction) {
    std::vector<double> out;
    if (times.size() < 2) return out;
    const double sgn = (direction == EdgeDirection::rising) ? 1.0 : -1.0;
    const size_t n = times.size();
    size_t i = 0;
    while (i + 1 < n) {
        const double a = sgn * (values[i] - level);
        const double b = sgn * (values[i + 1] - level);
        if (a < 0 && b > 0) {
            out.push_back(interp_crossing(times[i], values[i], times[i + 1], values[i + 1], level));
            ++i;
            continue;
        }
        if (a < 0 && b == 0) {
            // touching: a crossing only if the series later leaves on the far side
            size_t j = i + 1;
            while (j + 1 < n && sgn * (values[j + 1] - level) == 0) ++j;
            if (j + 1 < n && sgn * (values[j + 1] - level) > 0) out.push_back(times[i + 1]);
            i = j;
            continue;
        }
        ++i;
    }
    return out;
}

DelayTriple prop_delay(std::span<const double> times, std::span<const double> v_in,
                       std::span<const double> v_out, double v_in_mid, double v_out_mid) {
    const auto in_rise = crossing_times(times, v_in, v_in_mid, EdgeDirection::rising);
    const auto in_fall = crossing_times(times, v_in, v_in_mid, EdgeDirection::falling);
    const auto out_rise = crossing_times(times, v_out, v_out_mid, EdgeDirection::rising);
    const auto out_fall = crossing_times(times, v_out, v_out_mid, EdgeDirection::falling);
    if (in_rise.empty() || in_fall.empty()) {
        throw MeasurementError("input waveform has no full cycle at its midpoint level");
    }

    // nearest following output edge (inclusive, so self-delay is zero) for
    // each input edge; the next input edge of the same direction bounds the
    // search window
    auto worst = [&](const std::vector<double>& in_edges,
                     const std::vector<double>& out_edges, const char* what) {
        double w = -1.0;
        for (size_t k = 0; k < in_edges.size(); ++k) {
            const double t_in = in_edges[k];
            const double t_limit =
                (k + 1 < in_edges.size()) ? in_edges[k + 1] : std::numeric_limits<double>::max();
            auto it = std::lower_bound(out_edges.begin(), out_edges.end(), t_in);
            if (it == out_edges.end() || *it >= t_limit) {
                if (k + 1 < in_edges.size() || w < 0) {
                    throw MeasurementError(std::string("missing output ") + what +
                                           " edge after input edge at t = " +
                                           std::to_string(t_in));
                }
                continue; // final cycle may be truncated by t_stop
            }
            w = std::max(w, *it - t_in);
        }
        return w;
    };

    DelayTriple d;
    d.t_d_rise = worst(in_rise, out_rise, "rising");
    d.t_d_fall = worst(in_fall, out_fall, "falling");
    d.t_d_max = std::max(d.t_d_rise, d.t_d_fall);
    return d;
}

double avg_power(const Waveform& w,
                 const std::vector<std::pair<std::string, double>>& supplies,
                 double t0, double t1) {
    if (!(t1 > t0)) throw DomainError("avg_power needs t1 > t0");
    double energy = 0;
    for (const auto& [name, volts] : supplies) {
        const auto& is = w.source_current(name);
        const std::span<const double> ts(w.times);
        // trapezoid over samples inside [t0, t1] with interpolated endpoints
        double acc = 0;
        double t_prev = t0;
        double i_prev = sample_at(ts, is, t0);
        for (size_t k = 0; k < w.times.size(); ++k) {
            const double t = w.times[k];
            if (t <= t0) continue;
            if (t >= t1) break;
            acc += 0.5 * (i_prev + is[k]) * (t - t_prev);
            t_prev = t;
            i_prev = is[k];
        }
        const double i_end = sample_at(ts, is, t1);
        acc += 0.5 * (i_prev + i_end) * (t1 - t_prev);
        energy += volts * acc;
    }
    return energy / (t1 - t0);
}

DeckRoles identify_roles(const Circuit& c, const RunConfig& cfg) {
    DeckRoles roles;
    int pulses = 0;
    for (const auto& d : c.devices) {
        const auto* v = std::get_if<VSource>(&d.kind);
        if (!v) continue;
        if (const auto* dc = std::get_if<DcSpec>(&v->drive)) {
            roles.supplies.emplace_back(d.name, dc->volts);
        } else {
            ++pulses;
            if (cfg.input_source.empty() || cfg.input_source == d.name) {
                roles.input_source = d.name;
                roles.pulse = std::get<PulseSpec>(v->drive);
                roles.vin_amplitude = roles.pulse.v2;
            }
        }
    }
    if (roles.input_source.empty()) {
        if (!cfg.input_source.empty()) {
            throw DomainError("input source '" + cfg.input_source + "' not found");
        }
        throw DomainError("deck has no pulse source to treat as the input");
    }
    if (cfg.input_source.empty() && pulses > 1) {
        throw DomainError("deck has several pulse sources; set input_source explicitly");
    }
    if (roles.supplies.empty()) throw DomainError("deck has no DC supply");
    auto hi = std::max_element(roles.supplies.begin(), roles.supplies.end(),
                               [](auto& a, auto& b) { return a.second < b.second; });
    auto lo = std::min_element(roles.supplies.begin(), roles.supplies.end(),
                               [](auto& a, auto& b) { return a.second < b.second; });
    roles.vddh_source = hi->first;
    roles.vddh = hi->second;
    roles.vddl_source = lo->first;
    roles.vddl = lo->second;
    return roles;
}

MeasureReport measure_waveform(const Waveform& w, const Circuit& c, const RunConfig& cfg) {
    const DeckRoles roles = identify_roles(c, cfg);
    const auto& vout = w.node(cfg.output_node);
    // input node = + terminal of the input pulse source
    const int in_node = std::get<VSource>(c.find_device(roles.input_source)->kind).npos;
    const auto& vin = w.node_v[in_node - 1];

    MeasureReport r;
    r.v_in = roles.vin_amplitude;
    r.v_ddh = roles.vddh;
    r.v_ddl = roles.vddl;
    r.temp_c = c.global_temp_c;

    const double period = roles.pulse.t_period;
    const double t_end = w.times.back();
    const double t0 = roles.pulse.t_delay + cfg.skip_periods * period;
    const int cycles = static_cast<int>(std::floor((t_end - t0) / period + 1e-9));
    if (cycles < 1) {
        throw MeasurementError("run too short: no full input period after startup skip");
    }
    const double t1 = t0 + cycles * period;
    r.cycles_measured = cycles;

    // per-cycle swing
    double worst_high = std::numeric_limits<double>::max();
    double worst_low = std::numeric_limits<double>::lowest();
    for (int k = 0; k < cycles; ++k) {
        const double a = t0 + k * period;
        const double b = a + period;
        double cyc_max = std::numeric_limits<double>::lowest();
        double cyc_min = std::numeric_limits<double>::max();
        for (size_t i = 0; i < w.times.size(); ++i) {
            if (w.times[i] < a || w.times[i] > b) continue;
            cyc_max = std::max(cyc_max, vout[i]);
            cyc_min = std::min(cyc_min, vout[i]);
        }
        worst_high = std::min(worst_high, cyc_max);
        worst_low = std::max(worst_low, cyc_min);
    }
    r.v_out_high = worst_high;
    r.v_out_low = worst_low;

    r.p_avg = avg_power(w, roles.supplies, t0, t1);

    const bool swings = cycles >= cfg.predicate.min_cycles &&
                        worst_high >= cfg.predicate.swing_frac_high * roles.vddh &&
                        worst_low <= cfg.predicate.swing_frac_low * roles.vddh;

    // delays at 50% of the respective swings, measurement window only
    std::vector<double> tw, iw, ow;
    for (size_t i = 0; i < w.times.size(); ++i) {
        if (w.times[i] < t0 - period || w.times[i] > t1) continue; // one lead-in period for edge pairing
        tw.push_back(w.times[i]);
        iw.push_back(vin[i]);
        ow.push_back(vout[i]);
    }
    const double in_mid = 0.5 * (roles.pulse.v1 + roles.pulse.v2);
    const double out_mid = 0.5 * roles.vddh;
    bool delays_ok = true;
    try {
        DelayTriple d = prop_delay(tw, iw, ow, in_mid, out_mid);
        r.t_d_rise = d.t_d_rise;
        r.t_d_fall = d.t_d_fall;
        r.t_d_max = d.t_d_max;
    } catch (const MeasurementError&) {
        delays_ok = false;
        r.t_d_rise = r.t_d_fall = r.t_d_max = kNan;
    }
    r.functional = swings && delays_ok;
    r.pdp = r.p_avg * r.t_d_max;
    return r;
}

MeasureReport measure_run(const Circuit& c, const RunConfig& cfg, const SolveOptions& opts) {
    const Waveform w = run_transient(c, opts);
    return measure_waveform(w, c, cfg);
}

double bisect_min_true(const std::function<bool(double)>& probe, double lo, double hi,
                       double tol, bool require_bracket) {
    if (!(hi > lo) || !(tol > 0)) throw DomainError("bisect_min_true: bad bracket or tol");
    if (require_bracket && probe(lo)) {
        throw DomainError("bracket error: already functional at the lower bound (range too high)");
    }
    if (!probe(hi)) {
        throw DomainError("bracket error: not functional at the upper bound (circuit broken)");
    }
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (probe(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi; // smallest verified-true amplitude
}

double min_vin_search(const Circuit& base, const RunConfig& cfg, double v_lo, double v_hi,
                      double tol, const SolveOptions& opts) {
    const DeckRoles roles = identify_roles(base, cfg);
    auto probe = [&](double amp) {
        const Circuit probe_ckt = with_pulse_amplitude(base, roles.input_source, amp);
        try {
            return measure_run(probe_ckt, cfg, opts).functional;
        } catch (const ConvergenceError&) {
            return false; // a non-converging probe counts as non-functional
        }
    };
    return bisect_min_true(probe, v_lo, v_hi, tol, /*require_bracket=*/true);
}

std::string report_csv_header() {
    return "vin,vddl,vddh,temp,vout_high,vout_low,tdr,tdf,tdmax,pavg,pdp,functional";
}

std::string report_csv_row(const MeasureReport& r) {
    char buf[320];
    std::snprintf(buf, sizeof buf,
                  "%.8e,%.8e,%.8e,%.8e,%.8e,%.8e,%.8e,%.8e,%.8e,%.8e,%.8e,%d",
                  r.v_in, r.v_ddl, r.v_ddh, r.temp_c, r.v_out_high, r.v_out_low,
                  r.t_d_rise, r.t_d_fall, r.t_d_max, r.p_avg, r.pdp, r.functional ? 1 : 0);
    return buf;
}

} // namespace ulpsim
