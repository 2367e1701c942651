#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>

#include "ulpsim/errors.hpp"
#include "ulpsim/model.hpp"

using namespace ulpsim;

namespace {

MosModel n22() {
    MosModel m;
    m.polarity = Polarity::nmos;
    m.vth0 = 0.503;
    m.n_slope = 1.35;
    m.kp = 1.5e-4;
    m.lambda = 0.05;
    m.tc_vth = 1e-4;
    return m;
}

MosModel p22() {
    MosModel m = n22();
    m.polarity = Polarity::pmos;
    m.vth0 = 0.460;
    m.kp = 4.6e-5;
    return m;
}

// small deterministic PRNG for the property checks
struct Rng {
    std::uint64_t s;
    double uniform(double lo, double hi) {
        s += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = s;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        z ^= z >> 31;
        return lo + (hi - lo) * (static_cast<double>(z >> 11) * 0x1.0p-53);
    }
};

constexpr double kW = 200e-9, kL = 40e-9, kT = 300.15;

} // namespace

TEST_CASE("temperature_adjust reference points") {
    MosModel m = n22();
    // at T = t0 the threshold is untouched
    CHECK(temperature_adjust(m, kW, kL, m.t0).vth_t == doctest::Approx(0.503).epsilon(1e-12));
    // 125 C with tc_vth = 1 mV/K: 0.503 - 0.098 = 0.405
    m.tc_vth = 1e-3;
    CHECK(temperature_adjust(m, kW, kL, 398.15).vth_t == doctest::Approx(0.405).epsilon(1e-9));
    m.tc_vth = n22().tc_vth;
    // thermal voltage at 300.15 K
    const double vt = temperature_adjust(m, kW, kL, 300.15).v_t;
    CHECK(vt == doctest::Approx(0.0258661).epsilon(2e-4));
    // specific current definition 2*n*kp*(W/L)*Vt^2
    const TempParams tp = temperature_adjust(m, kW, kL, kT);
    CHECK(tp.is_t == doctest::Approx(2.0 * 1.35 * 1.5e-4 * 5.0 * vt * vt).epsilon(1e-9));
}

TEST_CASE("temperature_adjust rejects out-of-range temperatures") {
    CHECK_THROWS_AS(temperature_adjust(n22(), kW, kL, 150.0), DomainError);
    CHECK_THROWS_AS(temperature_adjust(n22(), kW, kL, 500.0), DomainError);
}

TEST_CASE("vth_t decreases monotonically in T") {
    const MosModel m = n22();
    double prev = 1e9;
    for (double t = 200; t <= 450; t += 10) {
        const double v = temperature_adjust(m, kW, kL, t).vth_t;
        CHECK(v < prev);
        prev = v;
    }
}

TEST_CASE("mos_ids zero-current symmetry points") {
    const MosModel m = n22();
    CHECK(mos_ids(m, kW, kL, 0, 0, 0, kT).i_ds == 0.0);
    CHECK(mos_ids(m, kW, kL, 0.8, 0.4, 0.4, kT).i_ds == 0.0);
    // grid of vds = 0 points
    for (double vg = 0; vg <= 1.0; vg += 0.1) {
        for (double v = 0; v <= 0.8; v += 0.2) {
            CHECK(mos_ids(m, kW, kL, vg, v, v, kT).i_ds == 0.0);
        }
    }
}

TEST_CASE("sub-threshold current is positive but tiny") {
    const MosEval e = mos_ids(n22(), kW, kL, 0.3, 0.4, 0.0, kT);
    CHECK(e.i_ds > 0.0);
    CHECK(e.i_ds < 1e-6);
    CHECK(e.region == MosEval::Region::weak);
}

TEST_CASE("on-current lands in the calibrated decade and matches the golden value") {
    const MosEval e = mos_ids(n22(), kW, kL, 0.8, 0.8, 0.0, kT);
    CHECK(e.i_ds > 10e-6);
    CHECK(e.i_ds < 100e-6);

    std::ifstream golden(std::string(ULPSIM_GOLDEN_DIR) + "/nmos_ion.txt");
    double frozen = 0;
    const bool readable = static_cast<bool>(golden >> frozen);
    REQUIRE(readable);
    CHECK(e.i_ds == doctest::Approx(frozen).epsilon(1e-9));
}

TEST_CASE("card calibration: N/P on-current ratio tracks the width compensation") {
    // measured in the ground-referenced frame, where the card kp values
    // (not the rail bias) set the ratio; 500n/200n widths compensate ~2.5x
    const double ion_n = mos_ids(n22(), kW, kL, 0.8, 0.8, 0.0, kT).i_ds;
    const double ion_p = mos_ids(p22(), kW, kL, -0.8, -0.8, 0.0, kT).i_ds;
    const double ratio = ion_n / -ion_p;
    CHECK(ratio > 2.2);
    CHECK(ratio < 2.8);
}

TEST_CASE("analytic conductances match central finite differences") {
    const double h = 1e-6;
    int checked = 0;
    for (const MosModel& m : {n22(), p22()}) {
        Rng rng{m.polarity == Polarity::nmos ? 1234u : 77u};
        for (int k = 0; k < 500; ++k) {
            const double vg = rng.uniform(-0.2, 1.0);
            const double vd = rng.uniform(-0.2, 1.0);
            const double vs = rng.uniform(-0.2, 1.0);
            const MosEval e = mos_ids(m, kW, kL, vg, vd, vs, kT);
            auto fd = [&](double dg, double dd, double ds) {
                const double up = mos_ids(m, kW, kL, vg + dg * h, vd + dd * h, vs + ds * h, kT).i_ds;
                const double dn = mos_ids(m, kW, kL, vg - dg * h, vd - dd * h, vs - ds * h, kT).i_ds;
                return (up - dn) / (2 * h);
            };
            const double gm_fd = fd(1, 0, 0);
            const double gds_fd = fd(0, 1, 0);
            const double gms_fd = fd(0, 0, 1);
            const double scale = std::max({std::abs(e.g_m), std::abs(e.g_ds), std::abs(e.g_ms),
                                           1e-15});
            CHECK(std::abs(e.g_m - gm_fd) <= 1e-4 * std::max(std::abs(gm_fd), scale));
            CHECK(std::abs(e.g_ds - gds_fd) <= 1e-4 * std::max(std::abs(gds_fd), scale));
            CHECK(std::abs(e.g_ms - gms_fd) <= 1e-4 * std::max(std::abs(gms_fd), scale));
            ++checked;
        }
    }
    CHECK(checked == 1000);
}

TEST_CASE("source/drain swap negates the current exactly") {
    Rng rng{99};
    for (const MosModel& m : {n22(), p22()}) {
        for (int k = 0; k < 200; ++k) {
            const double vg = rng.uniform(-0.5, 1.2);
            const double vd = rng.uniform(-0.5, 1.2);
            const double vs = rng.uniform(-0.5, 1.2);
            const double fwd = mos_ids(m, kW, kL, vg, vd, vs, kT).i_ds;
            const double rev = mos_ids(m, kW, kL, vg, vs, vd, kT).i_ds;
            CHECK(fwd == doctest::Approx(-rev).epsilon(1e-12));
        }
    }
}

TEST_CASE("monotonicity in vg and vd on a grid, NMOS orientation") {
    const MosModel m = n22();
    for (double vs : {0.0, 0.2}) {
        for (double vd = vs; vd <= 1.0; vd += 0.05) {
            double prev = -1;
            for (double vg = -0.2; vg <= 1.0; vg += 0.02) {
                const MosEval e = mos_ids(m, kW, kL, vg, vd, vs, kT);
                CHECK(e.i_ds >= prev);
                CHECK(e.g_m >= 0.0);
                CHECK(e.g_ds >= 0.0);
                prev = e.i_ds;
            }
        }
        for (double vg : {0.1, 0.4, 0.8}) {
            double prev = -1;
            for (double vd = vs; vd <= 1.0; vd += 0.01) {
                const double i = mos_ids(m, kW, kL, vg, vd, vs, kT).i_ds;
                CHECK(i >= prev);
                prev = i;
            }
        }
    }
}

TEST_CASE("no discontinuity across regions at 1 mV spacing") {
    // the measured jump must agree with the local derivative prediction:
    // a genuine region-boundary step would leave a residual far above 1e-12 A
    const MosModel m = n22();
    const double dv = 1e-3;
    for (double vg = -0.1; vg <= 1.0; vg += dv) {
        const MosEval a = mos_ids(m, kW, kL, vg, 0.4, 0.0, kT);
        const MosEval b = mos_ids(m, kW, kL, vg + dv, 0.4, 0.0, kT);
        const double predicted = 0.5 * (a.g_m + b.g_m) * dv;
        CHECK(std::abs((b.i_ds - a.i_ds) - predicted) <= 1e-12 + 1e-4 * std::abs(predicted));
    }
    for (double vd = 0.0; vd <= 1.0; vd += dv) {
        const MosEval a = mos_ids(m, kW, kL, 0.5, vd, 0.0, kT);
        const MosEval b = mos_ids(m, kW, kL, 0.5, vd + dv, 0.0, kT);
        const double predicted = 0.5 * (a.g_ds + b.g_ds) * dv;
        CHECK(std::abs((b.i_ds - a.i_ds) - predicted) <= 1e-12 + 1e-4 * std::abs(predicted));
    }
}

TEST_CASE("pmos evaluation mirrors an nmos with negated terminals") {
    MosModel p = p22();
    MosModel n_twin = p;
    n_twin.polarity = Polarity::nmos;
    Rng rng{2024};
    for (int k = 0; k < 200; ++k) {
        const double vg = rng.uniform(-1.0, 1.0);
        const double vd = rng.uniform(-1.0, 1.0);
        const double vs = rng.uniform(-1.0, 1.0);
        const MosEval ep = mos_ids(p, kW, kL, vg, vd, vs, kT);
        const MosEval en = mos_ids(n_twin, kW, kL, -vg, -vd, -vs, kT);
        CHECK(ep.i_ds == doctest::Approx(-en.i_ds).epsilon(1e-12));
        CHECK(ep.g_m == doctest::Approx(en.g_m).epsilon(1e-12));
        CHECK(ep.g_ds == doctest::Approx(en.g_ds).epsilon(1e-12));
        CHECK(ep.g_ms == doctest::Approx(en.g_ms).epsilon(1e-12));
    }
}

TEST_CASE("gate charge is linear in bias and width") {
    const MosModel m = n22(); // cox = 0.03 F/m^2 default
    CHECK(mos_gate_charge(m, kW, kL, 0.0).q == 0.0);
    CHECK(mos_gate_charge(m, kW, kL, 1.0).capacitance == doctest::Approx(2.4e-16).epsilon(1e-9));
    const double q1 = mos_gate_charge(m, kW, kL, 0.7).q;
    const double q2 = mos_gate_charge(m, 2 * kW, kL, 0.7).q;
    CHECK(q2 == doctest::Approx(2 * q1).epsilon(1e-12));
}

TEST_CASE("pulse_value traces the trapezoid") {
    PulseSpec p;
    p.v1 = 0;
    p.v2 = 0.1;
    p.t_delay = 0;
    p.t_rise = 10e-9;
    p.t_fall = 10e-9;
    p.t_pw = 4.99e-6;
    p.t_period = 10e-6;

    CHECK(pulse_value(p, 5e-9) == doctest::Approx(0.05).epsilon(1e-12)); // mid-rise
    CHECK(pulse_value(p, 10e-9) == doctest::Approx(0.1));
    CHECK(pulse_value(p, 2e-6) == doctest::Approx(0.1));    // hold
    CHECK(pulse_value(p, 5.005e-6) == doctest::Approx(0.05)); // mid-fall
    CHECK(pulse_value(p, 7e-6) == doctest::Approx(0.0));    // rest
    // periodicity
    CHECK(pulse_value(p, 12e-6) == doctest::Approx(pulse_value(p, 2e-6)));

    PulseSpec delayed = p;
    delayed.t_delay = 1e-6;
    CHECK(pulse_value(delayed, 0.0) == doctest::Approx(0.0)); // v1 before delay
    CHECK(pulse_value(delayed, 0.5e-6) == doctest::Approx(0.0));
}
