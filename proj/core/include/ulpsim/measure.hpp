#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ulpsim/engine.hpp"

namespace ulpsim {

/// Figures of merit for one transient run.
struct MeasureReport {
    double v_in = 0, v_ddl = 0, v_ddh = 0, temp_c = 27;
    double v_out_high = 0; // min over cycles of the per-cycle maximum
    double v_out_low = 0;  // max over cycles of the per-cycle minimum
    double t_d_rise = 0, t_d_fall = 0, t_d_max = 0; // NaN when unmeasurable
    double p_avg = 0;  // W, all DC supplies
    double pdp = 0;    // J, p_avg * t_d_max
    bool functional = false;
    int cycles_measured = 0;
};

/// A level conversion counts as detected when the output clears both swing
/// fractions in every one of at least min_cycles consecutive cycles.
struct FunctionalPredicate {
    double swing_frac_high = 0.9;
    double swing_frac_low = 0.1;
    int min_cycles = 3;
};

enum class EdgeDirection { rising, falling };

/// Linear-interpolated level crossings; touching without crossing excluded.
std::vector<double> crossing_times(std::span<const double> times,
                                   std::span<const double> values, double level,
                                   EdgeDirection direction);

struct DelayTriple {
    double t_d_rise = 0, t_d_fall = 0, t_d_max = 0;
};

/// 50%-crossing propagation delays, nearest-following-edge pairing. The
/// reported value is the worst (largest) delay over the measured edges.
/// Throws MeasurementError when an input edge has no matching output edge.
DelayTriple prop_delay(std::span<const double> times, std::span<const double> v_in,
                       std::span<const double> v_out, double v_in_mid, double v_out_mid);

/// Average power delivered by the listed sources over [t0, t1], trapezoidal
/// quadrature with boundary interpolation. Supply volts are taken as given
/// (DC supplies).
double avg_power(const Waveform& w,
                 const std::vector<std::pair<std::string, double>>& supplies,
                 double t0, double t1);

/// How a run is interpreted: which source is the input, which node is the
/// output. Empty input_source means "the unique pulse source".
struct RunConfig {
    std::string input_source;
    std::string output_node = "out";
    FunctionalPredicate predicate;
    int skip_periods = 1; // startup periods excluded from measurement
};

/// Names and values of the supplies/input actually present in a deck.
struct DeckRoles {
    std::string input_source; // pulse source
    std::string vddh_source, vddl_source;
    double vddh = 0, vddl = 0;
    double vin_amplitude = 0;
    PulseSpec pulse;
    std::vector<std::pair<std::string, double>> supplies; // every DC source
};
DeckRoles identify_roles(const Circuit& c, const RunConfig& cfg = {});

/// Full post-processing of one transient run.
MeasureReport measure_waveform(const Waveform& w, const Circuit& c, const RunConfig& cfg = {});

/// Convenience: simulate the deck's .tran and measure.
MeasureReport measure_run(const Circuit& c, const RunConfig& cfg = {},
                          const SolveOptions& opts = {});

/// Smallest amplitude in [lo, hi] for which probe() holds, to within tol.
/// probe must hold at hi (checked first). A probe that already holds at lo
/// collapses to lo + <=tol unless require_bracket demands a false lower
/// bound, in which case it is a bracket error.
double bisect_min_true(const std::function<bool(double)>& probe, double lo, double hi,
                       double tol, bool require_bracket = false);

/// Bisection on the input pulse amplitude until the interval is below tol;
/// each probe is a full transient plus predicate evaluation.
double min_vin_search(const Circuit& base, const RunConfig& cfg, double v_lo, double v_hi,
                      double tol = 5e-3, const SolveOptions& opts = {});

/// Report CSV row: vin,vddl,vddh,temp,vout_high,vout_low,tdr,tdf,tdmax,pavg,pdp,functional
std::string report_csv_header();
std::string report_csv_row(const MeasureReport& r);

} // namespace ulpsim
