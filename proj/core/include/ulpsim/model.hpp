#pragma once

#include <string>

namespace ulpsim {

namespace phys {
inline constexpr double k_boltzmann = 1.380649e-23;  // J/K
inline constexpr double q_electron = 1.602176634e-19; // C
inline constexpr double t_ref_kelvin = 300.15;        // 27 C
inline constexpr double celsius_offset = 273.15;
} // namespace phys

enum class Polarity { nmos, pmos };

/// Compact MOSFET card: a single-expression weak-to-strong inversion model.
/// The drain current interpolates between an exponential sub-threshold law
/// and a square law through
///   I = Is * [F(vp - vs) - F(vp - vd)] * (1 + lambda*|vds|),
///   F(v) = ln^2(1 + exp(v / (2*n*Vt))),  vp = (vg - Vth(T)) / n,
/// which stays continuously differentiable across all operating regions.
struct MosModel {
    Polarity polarity = Polarity::nmos;
    double vth0 = 0.5;      // V, threshold magnitude at t0
    double n_slope = 1.35;  // sub-threshold slope factor, [1.0, 2.0]
    double kp = 1.0e-4;     // A/V^2, transconductance scale at t0
    double lambda = 0.0;    // 1/V, channel-length modulation
    double cox_area = 0.03; // F/m^2, gate capacitance density
    double t0 = phys::t_ref_kelvin; // K, reference temperature
    double tc_vth = 1.0e-3; // V/K, threshold temperature coefficient
    double mu_exp = 1.5;    // mobility temperature exponent

    void validate(const std::string& name) const; // throws ElaborationError

    bool operator==(const MosModel&) const = default;
};

/// Temperature-resolved operating parameters for one device geometry.
struct TempParams {
    double vth_t = 0; // V
    double is_t = 0;  // A, specific current 2*n*kp*(W/L)*Vt^2 at T
    double v_t = 0;   // V, thermal voltage kT/q
};

/// Drain current and its analytic partials at one operating point.
struct MosEval {
    double i_ds = 0; // A, drain->source positive for NMOS
    double g_m = 0;  // dI/dVg
    double g_ds = 0; // dI/dVd
    double g_ms = 0; // dI/dVs
    enum class Region { off, weak, strong } region = Region::off;
};

/// Threshold shift, mobility scaling and thermal voltage at temperature T.
/// T must lie in [200 K, 450 K].
TempParams temperature_adjust(const MosModel& model, double w, double l, double t_kelvin);

/// Evaluate drain current and conductances. Terminal voltages are clamped to
/// +-5 V. PMOS devices are evaluated as an NMOS with negated terminals and a
/// negated current.
MosEval mos_ids(const MosModel& model, double w, double l,
                double v_g, double v_d, double v_s, double t_kelvin);

/// Fast path used by the engine: same expression, temperature work hoisted out.
MosEval mos_ids_at(const MosModel& model, const TempParams& tp,
                   double v_g, double v_d, double v_s);

/// Linear lumped gate charge: Q = cox_area*W*L*v_g.
struct GateCharge {
    double q = 0;           // C
    double capacitance = 0; // F
};
GateCharge mos_gate_charge(const MosModel& model, double w, double l, double v_g);

/// Trapezoidal pulse drive.
struct PulseSpec {
    double v1 = 0, v2 = 0;
    double t_delay = 0, t_rise = 0, t_fall = 0, t_pw = 0, t_period = 0;

    bool operator==(const PulseSpec&) const = default;
};

/// Sample a pulse at time t >= 0: v1 before t_delay, then periodic
/// rise/hold/fall/rest.
double pulse_value(const PulseSpec& p, double t);

} // namespace ulpsim
