#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "ulpsim/decks.hpp"
#include "ulpsim/errors.hpp"
#include "ulpsim/plot.hpp"

using namespace ulpsim;

TEST_CASE("render_svg: deterministic bytes, labeled panes, error paths") {
    DeckParams p;
    p.vin_amplitude = 0.4;
    p.t_step = 10e-9;
    p.periods = 2;
    const Circuit c = compile_netlist(generate_ulpls(p));
    const Waveform w = run_transient(c);

    const std::string a = render_svg(w, {"in", "out"});
    const std::string b = render_svg(w, {"in", "out"});
    CHECK(a == b); // identical bytes for identical input
    CHECK(a.rfind("<svg", 0) == 0);
    CHECK(a.find("time (us)") != std::string::npos);
    CHECK(a.find("out (V)") != std::string::npos);
    // two panes -> two polylines
    size_t n = 0, pos = 0;
    while ((pos = a.find("<polyline", pos)) != std::string::npos) {
        ++n;
        pos += 9;
    }
    CHECK(n == 2);

    CHECK_THROWS_AS(render_svg(w, {}), DomainError);
    CHECK_THROWS_AS(render_svg(w, {"nonexistent"}), DomainError);
}

TEST_CASE("atomic_write replaces the file completely") {
    const std::string path = "test_plot_tmp.txt";
    atomic_write(path, "first");
    atomic_write(path, "second");
    std::ifstream in(path);
    std::string content;
    std::getline(in, content);
    CHECK(content == "second");
    std::remove(path.c_str());
}
