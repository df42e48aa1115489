/**
 * Copyright (c) 2026, clicklab contributors
 */
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "clicklab/core.hpp"

namespace clicklab {

// One impression per line, tab separated:
//
//   <query>\t<index>\t<item>,<rank>,<click>\t<item>,<rank>,<click>...
//
// Triples appear in rank order.  Lines for several queries may be
// interleaved; each query's indices must run 0..N-1 in order.

void write_click_log(std::ostream& out, const ClickLog& log);
std::string serialize_click_log(const ClickLog& log);

/// Logs in order of each query's first appearance.  Parse errors name the line.
std::vector<ClickLog> read_click_logs(std::istream& in);
std::vector<ClickLog> parse_click_logs(const std::string& text);

}  // namespace clicklab
