#include "ulpsim/model.hpp"

#include <algorithm>
#include <cmath>

#include "ulpsim/errors.hpp"

namespace ulpsim {

namespace {

constexpr double kVoltageClamp = 5.0;

// Numerically safe softplus: ln(1 + e^x).
double softplus(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double clamp_v(double v) { return std::clamp(v, -kVoltageClamp, kVoltageClamp); }

// Core NMOS evaluation; PMOS callers negate terminals and the result.
MosEval eval_nmos(const MosModel& m, const TempParams& tp,
                  double v_g, double v_d, double v_s) {
    const double n = m.n_slope;
    const double denom = 2.0 * n * tp.v_t;
    const double vp = (v_g - tp.vth_t) / n;

    const double xf = (vp - v_s) / denom;
    const double xr = (vp - v_d) / denom;
    const double spf = softplus(xf);
    const double spr = softplus(xr);
    const double ff = spf * spf;
    const double fr = spr * spr;

    const double vds = v_d - v_s;
    const double clm = 1.0 + m.lambda * std::abs(vds);
    const double sgn = (vds > 0) ? 1.0 : (vds < 0 ? -1.0 : 0.0);

    const double i0 = tp.is_t * (ff - fr);

    MosEval e;
    e.i_ds = i0 * clm;
    // dF/dv = 2*softplus(x)*sigmoid(x) / (2*n*Vt) = sp*sig / (n*Vt)
    const double dff = spf * sigmoid(xf) / (n * tp.v_t);
    const double dfr = spr * sigmoid(xr) / (n * tp.v_t);
    e.g_m = tp.is_t * (dff - dfr) / n * clm;
    e.g_ds = tp.is_t * dfr * clm + i0 * m.lambda * sgn;
    e.g_ms = -tp.is_t * dff * clm - i0 * m.lambda * sgn;

    // Diagnostic region tag: weak below the pinch-off knee, strong above.
    if (ff < 1e-6) {
        e.region = MosEval::Region::off;
    } else if (xf < 0.0) {
        e.region = MosEval::Region::weak;
    } else {
        e.region = MosEval::Region::strong;
    }
    return e;
}

} // namespace

void MosModel::validate(const std::string& name) const {
    auto fail = [&](const std::string& what) {
        throw ElaborationError("model '" + name + "': " + what);
    };
    if (!(n_slope >= 1.0 && n_slope <= 2.0)) fail("n must be in [1.0, 2.0]");
    if (!(kp > 0)) fail("kp must be positive");
    if (!(vth0 > 0)) fail("vth0 must be a positive magnitude");
    if (lambda < 0) fail("lambda must be >= 0");
    if (tc_vth < 0) fail("tcvth must be >= 0");
    if (!(cox_area > 0)) fail("cox must be positive");
    if (!(t0 > 0)) fail("t0 must be positive");
}

TempParams temperature_adjust(const MosModel& m, double w, double l, double t_kelvin) {
    if (!(t_kelvin >= 200.0 && t_kelvin <= 450.0)) {
        throw DomainError("temperature " + std::to_string(t_kelvin) +
                          " K outside model validity range [200 K, 450 K]");
    }
    TempParams tp;
    tp.vth_t = m.vth0 - m.tc_vth * (t_kelvin - m.t0);
    tp.v_t = phys::k_boltzmann * t_kelvin / phys::q_electron;
    const double kp_t = m.kp * std::pow(t_kelvin / m.t0, -m.mu_exp);
    tp.is_t = 2.0 * m.n_slope * kp_t * (w / l) * tp.v_t * tp.v_t;
    return tp;
}

MosEval mos_ids_at(const MosModel& m, const TempParams& tp,
                   double v_g, double v_d, double v_s) {
    v_g = clamp_v(v_g);
    v_d = clamp_v(v_d);
    v_s = clamp_v(v_s);
    if (m.polarity == Polarity::nmos) {
        return eval_nmos(m, tp, v_g, v_d, v_s);
    }
    MosEval e = eval_nmos(m, tp, -v_g, -v_d, -v_s);
    // d(-I(-v))/dv keeps the conductance signs of the mirrored evaluation.
    e.i_ds = -e.i_ds;
    return e;
}

MosEval mos_ids(const MosModel& m, double w, double l,
                double v_g, double v_d, double v_s, double t_kelvin) {
    return mos_ids_at(m, temperature_adjust(m, w, l, t_kelvin), v_g, v_d, v_s);
}

GateCharge mos_gate_charge(const MosModel& m, double w, double l, double v_g) {
    GateCharge g;
    g.capacitance = m.cox_area * w * l;
    g.q = g.capacitance * v_g;
    return g;
}

double pulse_value(const PulseSpec& p, double t) {
    if (t < p.t_delay) return p.v1;
    double tau = std::fmod(t - p.t_delay, p.t_period);
    if (tau < p.t_rise) {
        return p.v1 + (p.v2 - p.v1) * (tau / p.t_rise);
    }
    tau -= p.t_rise;
    if (tau < p.t_pw) return p.v2;
    tau -= p.t_pw;
    if (tau < p.t_fall) {
        return p.v2 + (p.v1 - p.v2) * (tau / p.t_fall);
    }
    return p.v1;
}

} // namespace ulpsim
