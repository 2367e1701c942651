#include "ulpsim/variation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <thread>

#include "ulpsim/errors.hpp"

namespace ulpsim {

namespace {

// splitmix64: the per-parameter counter RNG behind the Gaussian draws.
// Draw (seed, variant, param) -> multiplier is a pure function, so variant k
// is identical no matter the generation or scheduling order.
std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

double to_unit(std::uint64_t u) {
    // (0, 1]: guard the log in Box-Muller
    return (static_cast<double>(u >> 11) + 1.0) * 0x1.0p-53;
}

double gaussian_draw(std::uint64_t seed, std::uint64_t variant, std::uint64_t param) {
    const std::uint64_t base = mix64(seed ^ mix64(variant ^ mix64(param)));
    const double u1 = to_unit(mix64(base));
    const double u2 = to_unit(mix64(base + 1));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double clipped_multiplier(double tol, double g) {
    if (tol == 0) return 1.0;
    const double sigma = tol / 3.0;
    return std::clamp(1.0 + sigma * g, 1.0 - tol, 1.0 + tol);
}

std::vector<std::string> mosfet_names(const Circuit& c,
                                      const std::vector<std::string>& scoped) {
    std::vector<std::string> names;
    for (const auto& d : c.devices) {
        if (!std::holds_alternative<Mosfet>(d.kind)) continue;
        if (!scoped.empty() &&
            std::find(scoped.begin(), scoped.end(), d.name) == scoped.end()) {
            continue;
        }
        names.push_back(d.name);
    }
    if (!scoped.empty()) {
        for (const auto& want : scoped) {
            if (std::find(names.begin(), names.end(), want) == names.end()) {
                throw DomainError("scoped device '" + want + "' not found in deck");
            }
        }
    }
    return names;
}

MetricSummary summarize(const std::vector<double>& xs) {
    MetricSummary s;
    s.count = static_cast<int>(xs.size());
    if (xs.empty()) return s;
    s.min = *std::min_element(xs.begin(), xs.end());
    s.max = *std::max_element(xs.begin(), xs.end());
    double acc = 0;
    for (double x : xs) acc += x;
    s.mean = acc / xs.size();
    double var = 0;
    for (double x : xs) var += (x - s.mean) * (x - s.mean);
    s.stddev = xs.size() > 1 ? std::sqrt(var / (xs.size() - 1)) : 0.0;
    return s;
}

} // namespace

void ToleranceSpec::validate() const {
    auto check = [](double f, const char* what) {
        if (f != 0 && !(f > 0 && f < 0.5)) {
            throw DomainError(std::string(what) + " tolerance must lie in (0, 0.5)");
        }
    };
    check(supply_tol, "supply");
    check(size_tol, "size");
}

Circuit apply_variant(const Circuit& base, const Variant& v, const DeckRoles& roles) {
    Circuit out = base;
    if (v.vddh_mult != 1.0) {
        out = with_dc_value(out, roles.vddh_source, roles.vddh * v.vddh_mult);
    }
    if (v.vddl_mult != 1.0 && roles.vddl_source != roles.vddh_source) {
        out = with_dc_value(out, roles.vddl_source, roles.vddl * v.vddl_mult);
    }
    for (const auto& [name, mult] : v.w_mult) {
        if (mult == 1.0) continue;
        const auto* d = out.find_device(name);
        if (!d) throw DomainError("variant references unknown device '" + name + "'");
        out = with_device_width(out, name, std::get<Mosfet>(d->kind).width * mult);
    }
    if (v.temp_c) out.global_temp_c = *v.temp_c;
    return out;
}

std::vector<Variant> sample_mc(const Circuit& base, const ToleranceSpec& tol, int n,
                               std::uint64_t seed) {
    if (n < 1) throw DomainError("sample_mc needs n >= 1");
    tol.validate();
    const auto widths = mosfet_names(base, tol.scoped_devices);
    std::vector<Variant> out;
    out.reserve(n);
    for (int k = 0; k < n; ++k) {
        Variant v;
        v.id = k;
        v.vddh_mult = clipped_multiplier(tol.supply_tol, gaussian_draw(seed, k, 0));
        v.vddl_mult = clipped_multiplier(tol.supply_tol, gaussian_draw(seed, k, 1));
        v.w_mult.reserve(widths.size());
        for (size_t j = 0; j < widths.size(); ++j) {
            v.w_mult.emplace_back(widths[j],
                                  clipped_multiplier(tol.size_tol, gaussian_draw(seed, k, 2 + j)));
        }
        out.push_back(std::move(v));
    }
    return out;
}

std::vector<Variant> corners(const Circuit& base, const ToleranceSpec& tol, CornerAxes axes) {
    tol.validate();
    const auto widths = mosfet_names(base, tol.scoped_devices);
    std::vector<Variant> out;
    const double sup[2] = {1.0 - tol.supply_tol, 1.0 + tol.supply_tol};
    const double siz[2] = {1.0 - tol.size_tol, 1.0 + tol.size_tol};
    int id = 0;
    for (double h : sup) {
        for (double l : sup) {
            if (axes == CornerAxes::supply_only) {
                Variant v;
                v.id = id++;
                v.vddh_mult = h;
                v.vddl_mult = l;
                out.push_back(std::move(v));
            } else {
                for (double wmul : siz) {
                    Variant v;
                    v.id = id++;
                    v.vddh_mult = h;
                    v.vddl_mult = l;
                    for (const auto& name : widths) v.w_mult.emplace_back(name, wmul);
                    out.push_back(std::move(v));
                }
            }
        }
    }
    return out;
}

std::vector<Variant> worst_case_sizing(const Circuit& base,
                                       const std::vector<std::string>& devices,
                                       double tol) {
    if (devices.size() != 2) throw DomainError("worst_case_sizing expects two device names");
    for (const auto& name : devices) {
        const auto* d = base.find_device(name);
        if (!d || !std::holds_alternative<Mosfet>(d->kind)) {
            throw DomainError("unknown MOSFET '" + name + "' for worst-case sizing");
        }
    }
    std::vector<Variant> out;
    const double m[2] = {1.0 - tol, 1.0 + tol};
    int id = 0;
    for (double a : m) {
        for (double b : m) {
            Variant v;
            v.id = id++;
            v.w_mult.emplace_back(devices[0], a);
            v.w_mult.emplace_back(devices[1], b);
            out.push_back(std::move(v));
        }
    }
    return out;
}

std::vector<Variant> temp_variants(const std::vector<double>& temps_c) {
    std::vector<Variant> out;
    int id = 0;
    for (double t : temps_c) {
        Variant v;
        v.id = id++;
        v.temp_c = t;
        out.push_back(std::move(v));
    }
    return out;
}

CampaignResult run_campaign(const Circuit& base, const std::vector<Variant>& variants,
                            const RunConfig& cfg, int workers, const SolveOptions& opts) {
    if (variants.empty()) throw DomainError("campaign needs at least one variant");
    const DeckRoles roles = identify_roles(base, cfg);

    CampaignResult result;
    result.variants = variants;
    result.outcomes.resize(variants.size());

    const int pool = std::max(1, std::min<int>(workers, static_cast<int>(variants.size())));
    std::atomic<size_t> next{0};
    auto work = [&]() {
        for (;;) {
            const size_t k = next.fetch_add(1);
            if (k >= variants.size()) return;
            VariantOutcome& out = result.outcomes[k];
            out.id = variants[k].id;
            try {
                const Circuit ckt = apply_variant(base, variants[k], roles);
                out.report = measure_run(ckt, cfg, opts);
                out.ok = true;
            } catch (const std::exception& e) {
                out.ok = false;
                out.error = e.what();
            }
        }
    };
    if (pool == 1) {
        work();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(pool);
        for (int i = 0; i < pool; ++i) threads.emplace_back(work);
        for (auto& t : threads) t.join();
    }

    std::vector<double> pavg, tdmax, pdp;
    for (const auto& o : result.outcomes) {
        if (!o.ok) {
            ++result.failure_count;
            continue;
        }
        pavg.push_back(o.report.p_avg);
        if (o.report.functional) {
            ++result.functional_count;
            tdmax.push_back(o.report.t_d_max);
            pdp.push_back(o.report.pdp);
        }
    }
    if (result.failure_count == static_cast<int>(variants.size())) {
        throw ConvergenceError("campaign failed: every variant failed to simulate; first error: " +
                               result.outcomes.front().error);
    }
    result.pavg = summarize(pavg);
    result.tdmax = summarize(tdmax);
    result.pdp = summarize(pdp);

    // 20 equal-width PDP bins over [min, max] of the functional variants
    if (!pdp.empty()) {
        const double lo = result.pdp.min, hi = result.pdp.max;
        const int nbins = 20;
        const double width = (hi - lo) / nbins;
        result.pdp_histogram.assign(nbins, HistogramBin{});
        for (int b = 0; b < nbins; ++b) {
            result.pdp_histogram[b].lo = lo + b * width;
            result.pdp_histogram[b].hi = lo + (b + 1) * width;
        }
        for (double x : pdp) {
            int b = width > 0 ? static_cast<int>((x - lo) / width) : 0;
            b = std::clamp(b, 0, nbins - 1);
            ++result.pdp_histogram[b].count;
        }
    }
    return result;
}

CampaignResult temp_sweep(const Circuit& base, const std::vector<double>& temps_c,
                          const RunConfig& cfg, int workers, const SolveOptions& opts) {
    return run_campaign(base, temp_variants(temps_c), cfg, workers, opts);
}

std::string CampaignResult::mc_csv(std::uint64_t seed) const {
    std::string out = "variant,seed,vddh_mult,vddl_mult";
    if (!variants.empty()) {
        for (const auto& [name, _] : variants.front().w_mult) out += ",w_" + name;
    }
    out += ",pavg,tdmax,pdp,functional\n";
    char buf[64];
    for (size_t k = 0; k < variants.size(); ++k) {
        const auto& v = variants[k];
        const auto& o = outcomes[k];
        out += std::to_string(v.id) + "," + std::to_string(seed);
        std::snprintf(buf, sizeof buf, ",%.8e,%.8e", v.vddh_mult, v.vddl_mult);
        out += buf;
        for (const auto& [_, mult] : v.w_mult) {
            std::snprintf(buf, sizeof buf, ",%.8e", mult);
            out += buf;
        }
        if (o.ok) {
            std::snprintf(buf, sizeof buf, ",%.8e,%.8e,%.8e,%d", o.report.p_avg,
                          o.report.t_d_max, o.report.pdp, o.report.functional ? 1 : 0);
            out += buf;
        } else {
            out += ",nan,nan,nan,0";
        }
        out += "\n";
    }
    return out;
}

std::string CampaignResult::histogram_csv() const {
    std::string out = "bin_low,bin_high,count\n";
    char buf[96];
    for (const auto& b : pdp_histogram) {
        std::snprintf(buf, sizeof buf, "%.8e,%.8e,%d\n", b.lo, b.hi, b.count);
        out += buf;
    }
    return out;
}

std::string CampaignResult::temp_csv() const {
    std::string out = "temp_c," + report_csv_header() + "\n";
    char buf[48];
    for (size_t k = 0; k < variants.size(); ++k) {
        const double t = variants[k].temp_c.value_or(27.0);
        std::snprintf(buf, sizeof buf, "%.6g,", t);
        out += buf;
        if (outcomes[k].ok) {
            out += report_csv_row(outcomes[k].report);
        } else {
            out += "failed: " + outcomes[k].error;
        }
        out += "\n";
    }
    return out;
}

int default_workers(int fallback) {
    if (const char* env = std::getenv("ULPSIM_WORKERS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    return fallback;
}

} // namespace ulpsim
