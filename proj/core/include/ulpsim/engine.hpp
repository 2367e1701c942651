#pragma once

#include <string>
#include <vector>

#include "ulpsim/netlist.hpp"

namespace ulpsim {

/// SPICE-convention solver tolerances and homotopy knobs.
struct SolveOptions {
    double reltol = 1e-3;
    double vntol = 1e-6;   // V
    double abstol = 1e-12; // A
    int max_newton = 100;
    double gmin_start = 1e-3;  // S
    double gmin_final = 1e-12; // S
    double damping = 0.3; // max voltage update per Newton iteration, V
};

enum class Integrator { trapezoidal, backward_euler };

/// Node voltages and supply branch currents over time. Branch currents are
/// positive when the source delivers current out of its + terminal.
struct Waveform {
    std::vector<double> times;
    std::vector<std::string> node_names;   // non-ground nodes, index order
    std::vector<std::string> source_names; // voltage sources, deck order
    std::vector<std::vector<double>> node_v;   // [node][sample]
    std::vector<std::vector<double>> source_i; // [source][sample]

    size_t size() const { return times.size(); }
    const std::vector<double>& node(const std::string& name) const;
    const std::vector<double>& source_current(const std::string& name) const;

    /// CSV: header `time,<node1>,...,i(<vsrc1>),...`, 9 significant digits.
    std::string to_csv() const;
};

/// DC operating point: node voltages (index 0 = ground, fixed 0) plus source
/// branch currents in deck order. Pulse sources are sampled at t = 0.
struct DcSolution {
    std::vector<double> node_voltages;  // size = num_nodes
    std::vector<double> source_currents;
    std::vector<std::string> source_names;
    int newton_iterations = 0;
    bool used_gmin_stepping = false;
    bool used_source_stepping = false;
};

DcSolution dc_operating_point(const Circuit& c, double t_kelvin,
                              const SolveOptions& opts = {});

/// Fixed-step implicit transient. Backward Euler is always used for the
/// first two steps to damp startup ringing; a step that refuses to converge
/// is retried once at half step before giving up.
Waveform transient(const Circuit& c, double t_step, double t_stop, double t_kelvin,
                   const SolveOptions& opts = {},
                   Integrator integrator = Integrator::trapezoidal);

/// Run the circuit's own .tran card at its own .temp.
Waveform run_transient(const Circuit& c, const SolveOptions& opts = {},
                       Integrator integrator = Integrator::trapezoidal);

inline double celsius_to_kelvin(double c) { return c + phys::celsius_offset; }

} // namespace ulpsim
