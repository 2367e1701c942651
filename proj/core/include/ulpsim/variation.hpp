#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ulpsim/measure.hpp"

namespace ulpsim {

/// Tolerances of the variation campaigns: fractional supply and sizing
/// spreads. An empty scoped_devices list applies size_tol to every MOSFET.
struct ToleranceSpec {
    double supply_tol = 0.10;
    double size_tol = 0.04;
    std::vector<std::string> scoped_devices;

    void validate() const; // fractions must lie in (0, 0.5); 0 disables an axis
};

/// One parameter draw. Multipliers are exactly +-tol at corners and
/// 3-sigma-clipped Gaussians under Monte Carlo.
struct Variant {
    int id = 0;
    double vddh_mult = 1.0;
    double vddl_mult = 1.0;
    std::vector<std::pair<std::string, double>> w_mult; // device -> multiplier
    std::optional<double> temp_c;                       // overrides deck temp
};

/// Apply a variant's multipliers to a base circuit.
Circuit apply_variant(const Circuit& base, const Variant& v, const DeckRoles& roles);

/// Seeded, counter-derived Gaussian sampling: variant k draws the same
/// multipliers no matter how many workers generate or consume them.
/// sigma = tol/3, clipped at +-tol.
std::vector<Variant> sample_mc(const Circuit& base, const ToleranceSpec& tol, int n,
                               std::uint64_t seed);

enum class CornerAxes { supply_only, supply_and_size };

/// Deterministic corner set: 4 supply corners (low/low first, lexicographic
/// over vddh then vddl), 8 when global sizing is added.
std::vector<Variant> corners(const Circuit& base, const ToleranceSpec& tol, CornerAxes axes);

/// All four W*(1 +- tol) combinations on two named devices.
std::vector<Variant> worst_case_sizing(const Circuit& base,
                                       const std::vector<std::string>& devices,
                                       double tol = 0.04);

/// One variant per temperature, multipliers all 1.
std::vector<Variant> temp_variants(const std::vector<double>& temps_c);

struct VariantOutcome {
    int id = 0;
    bool ok = false;
    MeasureReport report;
    std::string error; // convergence failures are data, not aborts
};

struct MetricSummary {
    double mean = 0, stddev = 0, min = 0, max = 0;
    int count = 0;
};

struct HistogramBin {
    double lo = 0, hi = 0;
    int count = 0;
};

struct CampaignResult {
    std::vector<Variant> variants;
    std::vector<VariantOutcome> outcomes; // variant order, regardless of scheduling
    MetricSummary pavg, tdmax, pdp;
    std::vector<HistogramBin> pdp_histogram; // 20 equal-width bins
    int functional_count = 0;
    int failure_count = 0;

    /// `variant,seed,vddh_mult,vddl_mult,<W mults...>,pavg,tdmax,pdp,functional`
    std::string mc_csv(std::uint64_t seed) const;
    /// `bin_low,bin_high,count`
    std::string histogram_csv() const;
    /// temp,<report columns> — used by the temperature sweep
    std::string temp_csv() const;
};

/// Simulate + measure every variant on a bounded worker pool. Result order
/// matches variant order; per-variant failures are recorded, and the
/// campaign itself fails only if every variant fails.
CampaignResult run_campaign(const Circuit& base, const std::vector<Variant>& variants,
                            const RunConfig& cfg = {}, int workers = 1,
                            const SolveOptions& opts = {});

/// One full transient + report per temperature.
CampaignResult temp_sweep(const Circuit& base, const std::vector<double>& temps_c,
                          const RunConfig& cfg = {}, int workers = 1,
                          const SolveOptions& opts = {});

/// Worker count from ULPSIM_WORKERS, else fallback.
int default_workers(int fallback = 1);

} // namespace ulpsim
