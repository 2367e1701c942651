#include <doctest.h>

#include <cmath>

#include "ulpsim/decks.hpp"
#include "ulpsim/engine.hpp"
#include "ulpsim/errors.hpp"
#include "ulpsim/linalg.hpp"
#include "ulpsim/model.hpp"

using namespace ulpsim;

TEST_CASE("solve_linear: identity, hand-eliminated 2x2, singular row") {
    Matrix id(3);
    for (int i = 0; i < 3; ++i) id.at(i, i) = 1.0;
    const std::vector<double> b{1, 2, 3};
    CHECK(solve_linear(id, b) == b);

    Matrix a(2);
    a.at(0, 0) = 2;
    a.at(0, 1) = 1;
    a.at(1, 0) = 1;
    a.at(1, 1) = 3;
    const auto x = solve_linear(a, {3, 5});
    CHECK(x[0] == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(x[1] == doctest::Approx(1.4).epsilon(1e-12));

    Matrix z(2);
    z.at(0, 0) = 1.0; // second row all zero
    std::vector<std::string> names{"node a", "node b"};
    CHECK_THROWS_WITH_AS(solve_linear(z, {1, 1}, &names), doctest::Contains("node b"),
                         SingularMatrixError);
}

TEST_CASE("solve_linear residual bound holds on awkward systems") {
    // Hilbert-like ill-conditioned 6x6
    const int n = 6;
    Matrix a(n);
    std::vector<double> b(n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            a.at(i, j) = 1.0 / (1 + i + j);
            b[i] += a.at(i, j);
        }
    }
    const auto x = solve_linear(a, b);
    double worst = 0, bnorm = 0;
    for (int i = 0; i < n; ++i) {
        double r = -b[i];
        for (int j = 0; j < n; ++j) r += a.at(i, j) * x[j];
        worst = std::max(worst, std::abs(r));
        bnorm = std::max(bnorm, std::abs(b[i]));
    }
    CHECK(worst <= 1e-10 * (1.0 + bnorm));
}

TEST_CASE("dc: resistor divider is exact") {
    const Circuit c = compile_netlist("divider\nV1 a 0 DC 0.8\nR1 a b 1k\nR2 b 0 1k\n.end");
    const DcSolution s = dc_operating_point(c, 300.15);
    CHECK(std::abs(s.node_voltages[c.node("b")] - 0.4) < 1e-9);
    CHECK(s.node_voltages[c.node("a")] == doctest::Approx(0.8).epsilon(1e-12));
    // source delivers 0.4 mA
    CHECK(s.source_currents[0] == doctest::Approx(4e-4).epsilon(1e-9));
}

TEST_CASE("dc: diode-connected NMOS node matches a scalar bisection oracle") {
    const char* deck =
        "diode load\n"
        "V1 a 0 DC 0.8\n"
        "R1 a m 1meg\n"
        "M1 m m 0 0 n22 W=200n L=40n\n"
        ".model n22 nmos (vth0=0.503 n=1.35 kp=1.5e-4 lambda=0.05 cox=0.03)\n"
        ".end";
    const Circuit c = compile_netlist(deck);
    const DcSolution s = dc_operating_point(c, 300.15);

    // independent oracle: bisection on I_mos(v) = (0.8 - v)/1e6
    const MosModel& m = c.models.at("n22");
    auto f = [&](double v) {
        return mos_ids(m, 200e-9, 40e-9, v, v, 0.0, 300.15).i_ds - (0.8 - v) / 1e6;
    };
    double lo = 0.0, hi = 0.8;
    REQUIRE(f(lo) < 0);
    REQUIRE(f(hi) > 0);
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0 ? lo : hi) = mid;
    }
    const double oracle = 0.5 * (lo + hi);
    CHECK(std::abs(s.node_voltages[c.node("m")] - oracle) < 1e-9);
}

TEST_CASE("dc: ULPLS rests low with the input pulse at its t=0 value") {
    const Circuit c = compile_netlist(generate_ulpls());
    const DcSolution s = dc_operating_point(c, 300.15);
    CHECK(s.node_voltages[c.node("out")] < 0.01 * 0.8);
    CHECK(s.node_voltages[c.node("in")] == doctest::Approx(0.0));
}

namespace {

// analytic RC response to the trapezoidal pulse: superposition of ramp
// responses r(t) = t - tau*(1 - exp(-t/tau)) scaled by the edge slope
double rc_pulse_response(const PulseSpec& p, double tau, double t) {
    auto ramp = [&](double tt) {
        return tt <= 0 ? 0.0 : tt - tau * (1.0 - std::exp(-tt / tau));
    };
    const double slope = (p.v2 - p.v1) / p.t_rise;
    double v = p.v1 + slope * (ramp(t - p.t_delay) - ramp(t - p.t_delay - p.t_rise));
    return v;
}

double max_rc_error(Integrator integ, double t_step) {
    // the 0.8 V edge starts after the BE startup steps and spans several
    // samples, so the measured error is pure integrator truncation
    const char* deck =
        "rc step\n"
        "V1 a 0 PULSE(0 0.8 200n 100n 100n 1 2.1)\n"
        "R1 a b 1k\n"
        "C1 b 0 1n\n"
        ".end";
    const Circuit c = compile_netlist(deck);
    const double tau = 1e-6;
    const Waveform w = transient(c, t_step, 5e-6, 300.15, {}, integ);
    const auto& vb = w.node("b");
    const PulseSpec p{0, 0.8, 200e-9, 100e-9, 100e-9, 1.0, 2.1};
    double worst = 0;
    for (size_t k = 0; k < w.times.size(); ++k) {
        worst = std::max(worst, std::abs(vb[k] - rc_pulse_response(p, tau, w.times[k])));
    }
    return worst;
}

} // namespace

TEST_CASE("transient: RC matches the analytic exponential within 0.1% of the step") {
    const double err = max_rc_error(Integrator::trapezoidal, 1e-8); // tau/100
    CHECK(err < 1e-3 * 0.8);
}

TEST_CASE("transient: halving the step shrinks RC error ~4x (trap) and ~2x (BE)") {
    const double tr1 = max_rc_error(Integrator::trapezoidal, 1e-8);
    const double tr2 = max_rc_error(Integrator::trapezoidal, 5e-9);
    const double ratio_tr = tr1 / tr2;
    CHECK(ratio_tr > 3.0);
    CHECK(ratio_tr < 5.5);

    const double be1 = max_rc_error(Integrator::backward_euler, 1e-8);
    const double be2 = max_rc_error(Integrator::backward_euler, 5e-9);
    const double ratio_be = be1 / be2;
    CHECK(ratio_be > 1.6);
    CHECK(ratio_be < 2.6);
}

TEST_CASE("transient: node with no source path stays put") {
    const Circuit c = compile_netlist("island\nR1 a 0 10k\nC1 a 0 1n\nV1 b 0 DC 1\nR2 b 0 1k\n.end");
    const Waveform w = transient(c, 1e-8, 1e-6, 300.15);
    for (double v : w.node("a")) CHECK(v == 0.0);
}

TEST_CASE("transient: determinism, bit-identical reruns") {
    const Circuit c = compile_netlist(generate_ulpls());
    const Waveform a = transient(c, 2e-9, 2e-6, 300.15);
    const Waveform b = transient(c, 2e-9, 2e-6, 300.15);
    REQUIRE(a.times == b.times);
    CHECK(a.node_v == b.node_v);
    CHECK(a.source_i == b.source_i);
}

TEST_CASE("waveform csv format") {
    const Circuit c = compile_netlist("t\nV1 a 0 DC 1\nR1 a 0 1k\n.end");
    const Waveform w = transient(c, 1e-7, 1e-6, 300.15);
    const std::string csv = w.to_csv();
    CHECK(csv.rfind("time,a,i(V1)\n", 0) == 0);
    // 9 significant digits scientific
    CHECK(csv.find("1.00000000e-07") != std::string::npos);
}

TEST_CASE("dc: conflicting sources raise a convergence-class error") {
    const Circuit c = compile_netlist("bad\nV1 a 0 DC 1\nV2 a 0 DC 2\n.end");
    CHECK_THROWS_AS(dc_operating_point(c, 300.15), ConvergenceError);
}

TEST_CASE("energy bookkeeping: sources never absorb more than caps release") {
    // over any run: source energy >= increase in stored cap energy,
    // the gap being dissipation
    const Circuit c = compile_netlist(generate_ulpls());
    const Waveform w = transient(c, 2e-9, 10e-6, 300.15);

    double e_src = 0;
    for (size_t s = 0; s < w.source_names.size(); ++s) {
        const auto& dev = *c.find_device(w.source_names[s]);
        const auto& vs = std::get<VSource>(dev.kind);
        for (size_t k = 1; k < w.times.size(); ++k) {
            const double dt = w.times[k] - w.times[k - 1];
            auto volt = [&](size_t idx) {
                double vp = vs.npos ? w.node_v[vs.npos - 1][idx] : 0.0;
                double vn = vs.nneg ? w.node_v[vs.nneg - 1][idx] : 0.0;
                return vp - vn;
            };
            e_src += 0.5 * (volt(k) * w.source_i[s][k] + volt(k - 1) * w.source_i[s][k - 1]) * dt;
        }
    }

    auto cap_energy = [&](size_t idx) {
        double e = 0;
        for (const auto& d : c.devices) {
            if (const auto* cap = std::get_if<Capacitor>(&d.kind)) {
                const double v1 = cap->n1 ? w.node_v[cap->n1 - 1][idx] : 0.0;
                const double v2 = cap->n2 ? w.node_v[cap->n2 - 1][idx] : 0.0;
                e += 0.5 * cap->farads * (v1 - v2) * (v1 - v2);
            }
            if (const auto* mos = std::get_if<Mosfet>(&d.kind)) {
                const MosModel& mm = c.models.at(mos->model);
                const double cg = mos_gate_charge(mm, mos->width, mos->length, 1.0).capacitance;
                const double vg = mos->gate ? w.node_v[mos->gate - 1][idx] : 0.0;
                e += 0.5 * cg * vg * vg;
            }
        }
        return e;
    };
    const double stored = cap_energy(w.times.size() - 1) - cap_energy(0);
    CHECK(e_src >= stored - 1e-18);
    CHECK(e_src - stored >= -1e-18); // dissipation non-negative
}

TEST_CASE("trapezoidal and BE settle to the same ULPLS steady state") {
    const Circuit c = compile_netlist(generate_ulpls());
    const SolveOptions opts;
    const Waveform a = transient(c, 2e-9, 5e-6, 300.15, opts, Integrator::trapezoidal);
    const Waveform b = transient(c, 2e-9, 5e-6, 300.15, opts, Integrator::backward_euler);
    for (const auto& node : a.node_names) {
        const double va = a.node(node).back();
        const double vb = b.node(node).back();
        CHECK(std::abs(va - vb) <= 10 * opts.vntol + 1e-4 * std::abs(va));
    }
}
