#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <set>

#include "ulpsim/decks.hpp"
#include "ulpsim/errors.hpp"
#include "ulpsim/variation.hpp"

using namespace ulpsim;

namespace {

Circuit base_circuit() {
    DeckParams p;
    p.vin_amplitude = 0.4;
    p.periods = 4;
    p.t_step = 4e-9; // keep these unit tests quick
    return compile_netlist(generate_ulpls(p));
}

} // namespace

TEST_CASE("sample_mc: zero tolerance yields exact unit multipliers") {
    const Circuit base = base_circuit();
    ToleranceSpec tol;
    tol.supply_tol = 0;
    tol.size_tol = 0;
    const auto vs = sample_mc(base, tol, 1, 7);
    REQUIRE(vs.size() == 1);
    CHECK(vs[0].vddh_mult == 1.0);
    CHECK(vs[0].vddl_mult == 1.0);
    for (const auto& [_, m] : vs[0].w_mult) CHECK(m == 1.0);
}

TEST_CASE("sample_mc: deterministic for a fixed seed") {
    const Circuit base = base_circuit();
    const ToleranceSpec tol;
    const auto a = sample_mc(base, tol, 200, 42);
    const auto b = sample_mc(base, tol, 200, 42);
    REQUIRE(a.size() == b.size());
    for (size_t k = 0; k < a.size(); ++k) {
        CHECK(a[k].vddh_mult == b[k].vddh_mult);
        CHECK(a[k].vddl_mult == b[k].vddl_mult);
        CHECK(a[k].w_mult == b[k].w_mult);
    }
    const auto c = sample_mc(base, tol, 200, 43);
    CHECK(a[0].vddh_mult != c[0].vddh_mult);
}

TEST_CASE("sample_mc: sample sigma approaches tol/3 and clipping holds") {
    const Circuit base = base_circuit();
    ToleranceSpec tol;
    tol.supply_tol = 0.10;
    const auto vs = sample_mc(base, tol, 10000, 1234);
    double mean = 0;
    for (const auto& v : vs) mean += v.vddh_mult;
    mean /= vs.size();
    double var = 0;
    for (const auto& v : vs) {
        var += (v.vddh_mult - mean) * (v.vddh_mult - mean);
        CHECK(v.vddh_mult >= 0.90);
        CHECK(v.vddh_mult <= 1.10);
        CHECK(v.vddl_mult >= 0.90);
        CHECK(v.vddl_mult <= 1.10);
    }
    const double sigma = std::sqrt(var / (vs.size() - 1));
    CHECK(sigma == doctest::Approx(0.10 / 3).epsilon(0.05));
}

TEST_CASE("corners: counts, ordering, and the 0.9x variant") {
    const Circuit base = base_circuit();
    const ToleranceSpec tol;
    const auto sup = corners(base, tol, CornerAxes::supply_only);
    REQUIRE(sup.size() == 4);
    // low/low first, lexicographic over (vddh, vddl)
    CHECK(sup[0].vddh_mult == doctest::Approx(0.9));
    CHECK(sup[0].vddl_mult == doctest::Approx(0.9));
    CHECK(sup[1].vddh_mult == doctest::Approx(0.9));
    CHECK(sup[1].vddl_mult == doctest::Approx(1.1));
    CHECK(sup[3].vddh_mult == doctest::Approx(1.1));
    CHECK(sup[3].vddl_mult == doctest::Approx(1.1));

    const DeckRoles roles = identify_roles(base);
    const Circuit lo = apply_variant(base, sup[0], roles);
    CHECK(std::get<DcSpec>(std::get<VSource>(lo.find_device("VDDH")->kind).drive).volts ==
          doctest::Approx(0.72));
    CHECK(std::get<DcSpec>(std::get<VSource>(lo.find_device("VDDL")->kind).drive).volts ==
          doctest::Approx(0.36));

    const auto both = corners(base, tol, CornerAxes::supply_and_size);
    CHECK(both.size() == 8);

    ToleranceSpec zero;
    zero.supply_tol = 0;
    zero.size_tol = 0;
    for (const auto& v : corners(base, zero, CornerAxes::supply_only)) {
        CHECK(v.vddh_mult == 1.0);
        CHECK(v.vddl_mult == 1.0);
    }
}

TEST_CASE("worst_case_sizing: 4 variants at 200n*(1 +- 0.04)") {
    const Circuit base = base_circuit();
    const auto vs = worst_case_sizing(base, {"MN1", "MN2"}, 0.04);
    REQUIRE(vs.size() == 4);
    const DeckRoles roles = identify_roles(base);
    std::set<double> widths;
    for (const auto& v : vs) {
        const Circuit c = apply_variant(base, v, roles);
        widths.insert(std::get<Mosfet>(c.find_device("MN1")->kind).width);
    }
    REQUIRE(widths.size() == 2);
    CHECK(*widths.begin() == doctest::Approx(192e-9));
    CHECK(*std::prev(widths.end()) == doctest::Approx(208e-9));

    const auto same = worst_case_sizing(base, {"MN1", "MN2"}, 0.0);
    REQUIRE(same.size() == 4);
    for (const auto& v : same) {
        for (const auto& [_, m] : v.w_mult) CHECK(m == 1.0);
    }

    CHECK_THROWS_AS(worst_case_sizing(base, {"MN1", "NOPE"}, 0.04), DomainError);
}

TEST_CASE("run_campaign: nominal variant equals a plain run") {
    const Circuit base = base_circuit();
    Variant nominal;
    nominal.id = 0;
    const CampaignResult res = run_campaign(base, {nominal});
    REQUIRE(res.outcomes.size() == 1);
    REQUIRE(res.outcomes[0].ok);
    const MeasureReport direct = measure_run(base);
    CHECK(res.outcomes[0].report.p_avg == direct.p_avg);
    CHECK(res.outcomes[0].report.t_d_max == direct.t_d_max);
    CHECK(res.outcomes[0].report.functional == direct.functional);
}

TEST_CASE("run_campaign: zero-tolerance MC reproduces the nominal report exactly") {
    const Circuit base = base_circuit();
    ToleranceSpec tol;
    tol.supply_tol = 0;
    tol.size_tol = 0;
    const auto vs = sample_mc(base, tol, 3, 5);
    const CampaignResult res = run_campaign(base, vs);
    const MeasureReport nominal = measure_run(base);
    for (const auto& o : res.outcomes) {
        REQUIRE(o.ok);
        CHECK(o.report.p_avg == nominal.p_avg);
        CHECK(o.report.pdp == nominal.pdp);
    }
}

TEST_CASE("run_campaign: worker count cannot perturb the output bytes") {
    const Circuit base = base_circuit();
    const auto vs = sample_mc(base, ToleranceSpec{}, 6, 42);
    const CampaignResult one = run_campaign(base, vs, {}, 1);
    const CampaignResult four = run_campaign(base, vs, {}, 4);
    CHECK(one.mc_csv(42) == four.mc_csv(42));
    CHECK(one.histogram_csv() == four.histogram_csv());
}

TEST_CASE("temp sweep at a single 27 C point equals the plain run") {
    const Circuit base = base_circuit();
    const CampaignResult res = temp_sweep(base, {27.0});
    REQUIRE(res.outcomes.size() == 1);
    REQUIRE(res.outcomes[0].ok);
    const MeasureReport direct = measure_run(base);
    CHECK(res.outcomes[0].report.p_avg == direct.p_avg);
}

TEST_CASE("campaign failures are recorded, not dropped (fails only when all fail)") {
    const Circuit base = base_circuit();
    // a 3-sigma-capped multiplier cannot produce this: force failure by
    // pushing a variant width out of the model's W/L sanity range
    Variant bad;
    bad.id = 0;
    bad.w_mult.emplace_back("MN1", 1e-3); // W/L falls below 0.1
    Variant good;
    good.id = 1;
    const CampaignResult res = run_campaign(base, {bad, good});
    REQUIRE(res.outcomes.size() == 2);
    CHECK_FALSE(res.outcomes[0].ok);
    CHECK(!res.outcomes[0].error.empty());
    CHECK(res.outcomes[1].ok);
    CHECK(res.failure_count == 1);

    CHECK_THROWS_AS(run_campaign(base, {bad}), ConvergenceError);
}

TEST_CASE("default worker count comes from ULPSIM_WORKERS") {
    unsetenv("ULPSIM_WORKERS");
    CHECK(default_workers(3) == 3);
    setenv("ULPSIM_WORKERS", "7", 1);
    CHECK(default_workers(3) == 7);
    setenv("ULPSIM_WORKERS", "garbage", 1);
    CHECK(default_workers(3) == 3);
    unsetenv("ULPSIM_WORKERS");
}

TEST_CASE("histogram: 20 bins spanning the functional PDP range") {
    const Circuit base = base_circuit();
    const auto vs = sample_mc(base, ToleranceSpec{}, 8, 11);
    const CampaignResult res = run_campaign(base, vs, {}, 4);
    REQUIRE(res.pdp_histogram.size() == 20);
    int total = 0;
    for (const auto& b : res.pdp_histogram) total += b.count;
    CHECK(total == res.functional_count);
    CHECK(res.pdp_histogram.front().lo == doctest::Approx(res.pdp.min));
    CHECK(res.pdp_histogram.back().hi == doctest::Approx(res.pdp.max));
}
