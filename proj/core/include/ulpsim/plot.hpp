#pragma once

#include <string>
#include <vector>

#include "ulpsim/engine.hpp"

namespace ulpsim {

/// Stacked per-node time panes as a self-contained SVG. Axes are labeled in
/// microseconds and volts; output bytes are deterministic for a fixed
/// waveform. Throws DomainError on an unknown node or an empty node list.
std::string render_svg(const Waveform& w, const std::vector<std::string>& nodes);

/// render_svg + atomic file write (temp file, then rename).
void emit_plot(const Waveform& w, const std::vector<std::string>& nodes,
               const std::string& path);

/// Write a whole file atomically (temp file in the same directory + rename).
void atomic_write(const std::string& path, const std::string& content);

} // namespace ulpsim
