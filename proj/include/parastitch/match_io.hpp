#pragma once

#include <filesystem>
#include <iosfwd>

#include "parastitch/geometry.hpp"

namespace parastitch {

// Plain-text match list: one "x_t y_t x_r y_r" per line, '#' starts a comment
// line, blank lines ignored.
MatchSet parse_matches(std::istream& in);
MatchSet read_matches(const std::filesystem::path& path);
void write_matches(std::ostream& out, const MatchSet& matches);
void write_matches(const std::filesystem::path& path, const MatchSet& matches);

}  // namespace parastitch
