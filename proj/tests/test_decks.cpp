#include <doctest.h>

#include <fstream>
#include <sstream>

#include "ulpsim/decks.hpp"
#include "ulpsim/errors.hpp"
#include "ulpsim/netlist.hpp"

using namespace ulpsim;

namespace {

int mosfet_count(const std::string& text) {
    const Circuit c = compile_netlist(text);
    int n = 0;
    for (const auto& d : c.devices) {
        n += std::holds_alternative<Mosfet>(d.kind) ? 1 : 0;
    }
    return n;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("transistor census: ULPLS=14, CMLS=6, DCVS=6") {
    CHECK(mosfet_count(generate_ulpls()) == 14);
    CHECK(mosfet_count(generate_cmls()) == 6);
    CHECK(mosfet_count(generate_dcvs()) == 6);
}

TEST_CASE("generated decks elaborate and hold a DC point at nominal params") {
    for (const auto& text : {generate_ulpls(), generate_cmls(), generate_dcvs()}) {
        const DeckDiagnostics d = validate_deck(text);
        for (const auto& m : d.messages) INFO(m);
        CHECK(d.ok);
    }
}

TEST_CASE("generated decks are parse->unparse fixed points") {
    for (const auto& text : {generate_ulpls(), generate_cmls(), generate_dcvs()}) {
        const Circuit c1 = compile_netlist(text);
        const Circuit c2 = compile_netlist(unparse(c1));
        CHECK(c1 == c2);
    }
}

TEST_CASE("validate_deck diagnoses bad decks instead of throwing") {
    CHECK_FALSE(validate_deck("").ok);
    const DeckDiagnostics d = validate_deck("t\nV1 a 0 DC 1\nR1 a b 1k\nR2 a 0 1k\n.end");
    CHECK_FALSE(d.ok);
    REQUIRE(!d.messages.empty());
    CHECK(d.messages.front().find("floating") != std::string::npos);
}

TEST_CASE("deck params are validated") {
    DeckParams p;
    p.vddl = 0.9; // above vddh
    CHECK_THROWS_AS(generate_ulpls(p), DomainError);
    DeckParams q;
    q.f_oper = -1;
    CHECK_THROWS_AS(generate_ulpls(q), DomainError);
    DeckParams r;
    r.f_oper = 100e6; // edges no longer fit in the half period
    CHECK_THROWS_AS(generate_ulpls(r), DomainError);
}

TEST_CASE("pulse parameters follow f_oper") {
    DeckParams p;
    p.f_oper = 100e3;
    const Circuit c = compile_netlist(generate_ulpls(p));
    const auto& vin = std::get<VSource>(c.find_device("VIN")->kind);
    const auto& pulse = std::get<PulseSpec>(vin.drive);
    CHECK(pulse.t_period == doctest::Approx(10e-6));
    CHECK(pulse.t_pw == doctest::Approx(4.99e-6));
    CHECK(pulse.t_rise == doctest::Approx(10e-9));
    CHECK(pulse.t_fall == doctest::Approx(10e-9));
}

TEST_CASE("width overrides reach the emitted cards") {
    DeckParams p;
    p.width_override["MN1"] = 208e-9;
    const Circuit c = compile_netlist(generate_ulpls(p));
    CHECK(std::get<Mosfet>(c.find_device("MN1")->kind).width == doctest::Approx(208e-9));
    CHECK(std::get<Mosfet>(c.find_device("MN2")->kind).width == doctest::Approx(200e-9));
}

TEST_CASE("dc-hold variant pins the input at the amplitude") {
    DeckParams p;
    p.vin_dc_hold = true;
    p.vin_amplitude = 0.4;
    const Circuit c = compile_netlist(generate_ulpls(p));
    const auto& vin = std::get<VSource>(c.find_device("VIN")->kind);
    CHECK(std::get<DcSpec>(vin.drive).volts == doctest::Approx(0.4));
}

TEST_CASE("committed deck files match the generator output") {
    const std::string dir = ULPSIM_DECK_DIR;
    CHECK(read_file(dir + "/ulpls.sp") == generate_ulpls());
    CHECK(read_file(dir + "/cmls.sp") == generate_cmls());
    CHECK(read_file(dir + "/dcvs.sp") == generate_dcvs());
}
