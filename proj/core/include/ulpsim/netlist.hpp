#pragma once

#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "ulpsim/model.hpp"

namespace ulpsim {

/// Number with optional SPICE unit suffix (f p n u m k meg g t) to SI units.
double parse_value(std::string_view token);

/// One logical card after comment stripping and continuation folding.
struct Card {
    std::string text;
    int line = 0; // 1-based source line of the first physical line
};

struct RawDeck {
    std::string title;
    std::vector<Card> cards;
};

/// Strip comments, fold `+` continuations, split cards. Fails on an empty
/// deck, a continuation with no preceding card, a leading directive in place
/// of the title, and duplicate device names.
RawDeck parse_netlist(std::string_view text);

struct DcSpec {
    double volts = 0;
    bool operator==(const DcSpec&) const = default;
};
using DriveSpec = std::variant<DcSpec, PulseSpec>;

struct Mosfet {
    int drain = 0, gate = 0, source = 0, bulk = 0;
    std::string model;
    double width = 0, length = 0; // meters
    bool operator==(const Mosfet&) const = default;
};
struct Resistor {
    int n1 = 0, n2 = 0;
    double ohms = 0;
    bool operator==(const Resistor&) const = default;
};
struct Capacitor {
    int n1 = 0, n2 = 0;
    double farads = 0;
    bool operator==(const Capacitor&) const = default;
};
struct VSource {
    int npos = 0, nneg = 0;
    DriveSpec drive;
    bool operator==(const VSource&) const = default;
};

struct DeviceInstance {
    std::string name;
    std::variant<Mosfet, Resistor, Capacitor, VSource> kind;
    bool operator==(const DeviceInstance&) const = default;
};

struct TranSpec {
    double t_step = 0, t_stop = 0;
    bool operator==(const TranSpec&) const = default;
};
struct DcOpSpec {
    bool operator==(const DcOpSpec&) const = default;
};
struct TempSpec {
    double celsius = 27.0;
    bool operator==(const TempSpec&) const = default;
};
using AnalysisSpec = std::variant<TranSpec, DcOpSpec, TempSpec>;

/// Elaborated, node-indexed circuit. Ground is always index 0 (`0`/`gnd`).
/// Immutable after elaboration; safe to share across campaign workers.
struct Circuit {
    std::string title;
    std::vector<std::string> node_names; // index -> name, [0] is ground
    std::unordered_map<std::string, int> node_index;
    std::vector<DeviceInstance> devices;
    std::map<std::string, MosModel> models;
    std::vector<AnalysisSpec> analyses;
    double global_temp_c = 27.0;
    std::vector<std::string> diagnostics; // non-fatal notes (e.g. duplicate .tran)

    int num_nodes() const { return static_cast<int>(node_names.size()); }
    /// Node index by name; throws DomainError when unknown.
    int node(const std::string& name) const;
    const DeviceInstance* find_device(const std::string& name) const;
    /// Last .tran directive, if any.
    const TranSpec* tran() const;

    bool operator==(const Circuit& o) const;
};

/// Index nodes, resolve models, and check every structural invariant
/// (positive values, W/L sanity, pulse timing, floating nodes, ground
/// connectivity). Throws ElaborationError.
Circuit elaborate(const RawDeck& deck);

/// Canonical deck text; parse(unparse(c)) elaborates to an identical circuit.
std::string unparse(const Circuit& c);

/// Convenience: parse + elaborate.
Circuit compile_netlist(std::string_view text);

// --- small rebuild helpers used by sweeps and campaigns ------------------

/// Copy with the pulse amplitude (v2) of the named source replaced.
Circuit with_pulse_amplitude(const Circuit& c, const std::string& source, double v2);
/// Copy with the pulse retimed to frequency f (50% duty minus the edges).
Circuit with_pulse_frequency(const Circuit& c, const std::string& source, double f);
/// Copy with a DC source value replaced.
Circuit with_dc_value(const Circuit& c, const std::string& source, double volts);
/// Copy with a MOSFET width replaced (meters).
Circuit with_device_width(const Circuit& c, const std::string& device, double width);
/// Copy with the transient analysis replaced.
Circuit with_tran(const Circuit& c, double t_step, double t_stop);

} // namespace ulpsim
