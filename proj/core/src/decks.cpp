#include "ulpsim/decks.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "ulpsim/engine.hpp"
#include "ulpsim/errors.hpp"

namespace ulpsim {

namespace {

// Committed compact-model cards. kp values are calibrated so that NMOS
// I_on(W/L=5, 0.8 V) lands mid-decade in 10..100 uA and the NMOS/PMOS I_on
// ratio matches the 500n/200n width compensation used throughout the decks.
constexpr const char* kModelCards =
    ".model n22 nmos (vth0=0.503 n=1.35 kp=1.5e-4 lambda=0.05 cox=0.03 tcvth=1e-4 muexp=1.5)\n"
    ".model p22 pmos (vth0=0.460 n=1.35 kp=4.6e-5 lambda=0.05 cox=0.03 tcvth=1e-4 muexp=1.5)\n";

// engineering notation with netlist unit suffixes (1e-7 -> "100n")
std::string fmt(double v) {
    static const std::pair<double, const char*> kScales[] = {
        {1e12, "t"}, {1e9, "g"}, {1e6, "meg"}, {1e3, "k"},
        {1.0, ""},   {1e-3, "m"}, {1e-6, "u"}, {1e-9, "n"},
        {1e-12, "p"}, {1e-15, "f"},
    };
    char buf[40];
    if (v == 0) return "0";
    const double mag = std::abs(v);
    for (const auto& [scale, suffix] : kScales) {
        if (mag >= scale) {
            std::snprintf(buf, sizeof buf, "%.9g%s", v / scale, suffix);
            return buf;
        }
    }
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

struct DeckWriter {
    explicit DeckWriter(const DeckParams& p) : p_(p) {}

    void line(const std::string& s) { os_ << s << "\n"; }

    void mos(const std::string& name, const std::string& d, const std::string& g,
             const std::string& s, const std::string& b, const std::string& model,
             double w_default, double l, const std::string& role) {
        double w = w_default;
        if (auto it = p_.width_override.find(name); it != p_.width_override.end()) {
            w = it->second;
        }
        char buf[160];
        std::snprintf(buf, sizeof buf, "%-4s %-4s %-4s %-4s %-4s %-3s W=%-5s L=%-5s ; %s",
                      name.c_str(), d.c_str(), g.c_str(), s.c_str(), b.c_str(), model.c_str(),
                      fmt(w).c_str(), fmt(l).c_str(), role.c_str());
        os_ << buf << "\n";
    }

    void header(const std::string& title) {
        os_ << title << "\n";
        line("* generated testbench; edit via the deck generator, not by hand");
        line("VDDH vddh 0 DC " + fmt(p_.vddh));
        line("VDDL vddl 0 DC " + fmt(p_.vddl));
        if (p_.vin_dc_hold) {
            line("VIN in 0 DC " + fmt(p_.vin_amplitude));
        } else {
            line("VIN in 0 PULSE(0 " + fmt(p_.vin_amplitude) + " 0 " + fmt(p_.t_edge) + " " +
                 fmt(p_.t_edge) + " " + fmt(p_.pulse_width()) + " " + fmt(p_.period()) + ")");
        }
    }

    void footer() {
        line("CL out 0 " + fmt(p_.c_load));
        os_ << kModelCards;
        line(".temp " + fmt(p_.temp_c));
        line(".tran " + fmt(p_.t_step) + " " + fmt(p_.periods * p_.period()));
        line(".end");
    }

    std::string str() const { return os_.str(); }

    const DeckParams& p_;
    std::ostringstream os_;
};

constexpr double kL = 40e-9;   // default channel length
constexpr double kWn = 200e-9; // default NMOS width
constexpr double kWp = 500e-9; // default PMOS width

} // namespace

void DeckParams::validate() const {
    if (!(vddl > 0) || !(vddl <= vddh)) {
        throw DomainError("deck params need 0 < vddl <= vddh");
    }
    if (!(f_oper > 0)) throw DomainError("deck params need f_oper > 0");
    if (!(c_load > 0)) throw DomainError("deck params need c_load > 0");
    if (!(vin_amplitude > 0)) throw DomainError("deck params need vin_amplitude > 0");
    if (!(pulse_width() > 0)) throw DomainError("input edges longer than half the period");
}

std::string generate_ulpls(const DeckParams& p) {
    p.validate();
    DeckWriter w(p);
    char title[96];
    std::snprintf(title, sizeof title, "ulpls level shifter testbench (dual supply %g/%g V)",
                  p.vddh, p.vddl);
    w.header(title);

    // Input comparator, vddl domain. MN5 senses the input against a weak
    // mirrored copy of the MN1/MN2 leakage, so the trip point sits at the
    // replica-leak crossover (tens of mV) instead of a CMOS inverter
    // midpoint, and the sense/reference threshold dependence cancels.
    w.line("* input stage: leakage-referenced comparator generates inb (inverted input)");
    w.mos("MN1", "nref", "nmid", "nmid", "0", "n22", kWn, kL, "divider upper leg, sets the reference leak");
    w.mos("MN2", "nmid", "0", "0", "0", "n22", kWn, kL, "divider lower leg");
    w.mos("MP4", "nref", "nref", "vddl", "vddl", "p22", 120e-9, 1e-6, "reference diode, mirror master");
    w.mos("MP7", "inb", "nref", "vddl", "vddl", "p22", 540e-9, 1e-6, "reference mirror, weak pull-up of inb");
    w.mos("MN5", "inb", "in", "0", "0", "n22", kWn, kL, "input sense device");

    // Current-mirror core, vddh domain.
    w.line("* mirror core: MP3 diode limits the static master current");
    w.mos("MP3", "na", "na", "vddh", "vddh", "p22", kWp, 400e-9, "current-limiting diode");
    w.mos("MP1", "nx", "nx", "na", "vddh", "p22", kWp, kL, "mirror master, in series with MP3");
    w.mos("MN3", "nx", "in", "0", "0", "n22", kWn, 800e-9, "input device, pulls mirror gate nx");
    w.mos("MP2", "ny", "nx", "vddh", "vddh", "p22", kWp, 600e-9, "mirrored branch pull-up");
    w.mos("MN4", "ny", "inb", "0", "0", "n22", 100e-9, kL, "output-branch pull-down, driven by inb");

    // Output buffer, vddh domain.
    w.line("* output buffer: MP5/MP6 restore the edges and drive the load");
    w.mos("MP5", "yb", "ny", "vddh", "vddh", "p22", kWp, 300e-9, "enhanced pull-up, driven from output branch");
    w.mos("MN6", "yb", "ny", "0", "0", "n22", 100e-9, 800e-9, "first inverter pull-down");
    w.mos("MP6", "out", "yb", "vddh", "vddh", "p22", kWp, 600e-9, "enhanced pull-up, output stage");
    w.mos("MN7", "out", "yb", "0", "0", "n22", kWn, kL, "output stage pull-down");

    w.footer();
    return w.str();
}

std::string generate_cmls(const DeckParams& p) {
    p.validate();
    DeckWriter w(p);
    w.header("cmls level shifter baseline testbench");
    w.line("* vddl-domain input inverter");
    w.mos("MP3", "inb", "in", "vddl", "vddl", "p22", kWp, kL, "input inverter pull-up");
    w.mos("MN3", "inb", "in", "0", "0", "n22", kWn, kL, "input inverter pull-down");
    w.line("* current mirror");
    w.mos("MP1", "nx", "nx", "vddh", "vddh", "p22", kWp, kL, "diode-connected mirror master");
    w.mos("MN1", "nx", "in", "0", "0", "n22", kWn, kL, "input device");
    w.mos("MP2", "out", "nx", "vddh", "vddh", "p22", kWp, kL, "mirrored output pull-up");
    w.mos("MN2", "out", "inb", "0", "0", "n22", kWn, kL, "output pull-down");
    w.footer();
    return w.str();
}

std::string generate_dcvs(const DeckParams& p) {
    p.validate();
    DeckWriter w(p);
    w.header("dcvs level shifter baseline testbench");
    w.line("* vddl-domain input inverter");
    w.mos("MP3", "inb", "in", "vddl", "vddl", "p22", kWp, kL, "input inverter pull-up");
    w.mos("MN3", "inb", "in", "0", "0", "n22", kWn, kL, "input inverter pull-down");
    w.line("* cross-coupled pair with NMOS inputs");
    w.mos("MP1", "na", "out", "vddh", "vddh", "p22", kWp, kL, "cross-coupled pull-up");
    w.mos("MP2", "out", "na", "vddh", "vddh", "p22", kWp, kL, "cross-coupled pull-up");
    w.mos("MN1", "na", "in", "0", "0", "n22", kWn, kL, "input device");
    w.mos("MN2", "out", "inb", "0", "0", "n22", kWn, kL, "inverted input device");
    w.footer();
    return w.str();
}

DeckDiagnostics validate_deck(std::string_view text) {
    DeckDiagnostics d;
    Circuit c;
    try {
        c = compile_netlist(text);
    } catch (const std::exception& e) {
        d.messages.push_back(std::string("parse/elaboration: ") + e.what());
        return d;
    }
    d.messages.push_back("elaborated: " + std::to_string(c.num_nodes() - 1) +
                         " nodes, " + std::to_string(c.devices.size()) + " devices");
    for (const auto& note : c.diagnostics) d.messages.push_back("note: " + note);
    try {
        const DcSolution sol = dc_operating_point(c, celsius_to_kelvin(c.global_temp_c));
        std::string nodes = "dc operating point:";
        for (int i = 1; i < c.num_nodes(); ++i) {
            char buf[64];
            std::snprintf(buf, sizeof buf, " %s=%.4g", c.node_names[i].c_str(),
                          sol.node_voltages[i]);
            nodes += buf;
        }
        d.messages.push_back(nodes);
        d.ok = true;
    } catch (const std::exception& e) {
        d.messages.push_back(std::string("dc solve: ") + e.what());
    }
    return d;
}

} // namespace ulpsim
