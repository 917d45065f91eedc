#include "parastitch/match_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "parastitch/error.hpp"

namespace parastitch {

MatchSet parse_matches(std::istream& in) {
  MatchSet matches;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    FeatureMatch m;
    std::string extra;
    if (!(fields >> m.target_pt.x >> m.target_pt.y >> m.ref_pt.x >>
          m.ref_pt.y) ||
        (fields >> extra)) {
      fail(ErrorCode::kDecodeError,
           "malformed match on line " + std::to_string(line_no));
    }
    matches.push_back(m);
  }
  return matches;
}

MatchSet read_matches(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kIoError, "cannot open " + path.string());
  return parse_matches(in);
}

void write_matches(std::ostream& out, const MatchSet& matches) {
  out << "# x_target y_target x_reference y_reference\n";
  char buf[128];
  for (const auto& m : matches) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g\n", m.target_pt.x,
                  m.target_pt.y, m.ref_pt.x, m.ref_pt.y);
    out << buf;
  }
}

void write_matches(const std::filesystem::path& path, const MatchSet& matches) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::kIoError, "cannot write " + path.string());
  write_matches(out, matches);
  require(out.good(), ErrorCode::kIoError, "write failed: " + path.string());
}

}  // namespace parastitch
