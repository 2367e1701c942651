#pragma once

#include <map>
#include <string>
#include <vector>

#include "ulpsim/netlist.hpp"

namespace ulpsim {

/// Testbench knobs shared by the bundled level-shifter decks.
struct DeckParams {
    double vddh = 0.8;           // V
    double vddl = 0.4;           // V
    double vin_amplitude = 0.1;  // V, pulse high level (low level is 0)
    double f_oper = 100e3;       // Hz
    double c_load = 200e-15;     // F
    double temp_c = 27.0;
    double t_edge = 10e-9;       // s, input rise and fall time
    double t_step = 1e-9;        // s
    int periods = 4;             // simulated input periods
    bool vin_dc_hold = false;    // replace the pulse with DC at vin_amplitude
    std::map<std::string, double> width_override; // device -> W (meters)

    void validate() const;
    double period() const { return 1.0 / f_oper; }
    double pulse_width() const { return 0.5 * period() - t_edge; }
};

/// Proposed level shifter: current-mirror core with a limiting diode, a
/// stacked leakage divider that biases the reference mirror, and a two-stage
/// output buffer. 14 MOSFETs.
std::string generate_ulpls(const DeckParams& p = {});

/// Conventional current-mirror level shifter baseline. 6 MOSFETs.
std::string generate_cmls(const DeckParams& p = {});

/// Cross-coupled (DCVS) level shifter baseline. 6 MOSFETs.
std::string generate_dcvs(const DeckParams& p = {});

struct DeckDiagnostics {
    bool ok = false;
    std::vector<std::string> messages;
};

/// Parse + elaborate + DC solve; failures become diagnostics, not throws.
DeckDiagnostics validate_deck(std::string_view text);

} // namespace ulpsim
