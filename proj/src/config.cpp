#include "parastitch/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "parastitch/error.hpp"

namespace parastitch {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  require(ec == std::errc() && ptr == end, ErrorCode::kInvalidConfig,
          "bad value '" + value + "' for " + key);
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  fail(ErrorCode::kInvalidConfig, "bad boolean '" + value + "' for " + key);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

EnergyParams RunConfig::energy_params() const {
  EnergyParams p;
  p.lambda = lambda;
  p.beta = beta;
  p.gamma = gamma;
  p.min_remaining = min_remaining;
  p.ransac_threshold = ransac_threshold;
  return p;
}

void apply_setting(RunConfig& c, const std::string& key, const std::string& value) {
  if (key == "lambda") c.lambda = parse_number<double>(key, value);
  else if (key == "beta") c.beta = parse_number<double>(key, value);
  else if (key == "gamma") c.gamma = parse_number<double>(key, value);
  else if (key == "nu") c.nu = parse_number<double>(key, value);
  else if (key == "min_remaining") c.min_remaining = parse_number<std::size_t>(key, value);
  else if (key == "ransac_threshold") c.ransac_threshold = parse_number<double>(key, value);
  else if (key == "sampson_eps") c.sampson_eps = parse_number<double>(key, value);
  else if (key == "cell_size") c.cell_size = parse_number<int>(key, value);
  else if (key == "r1") c.r1 = parse_number<int>(key, value);
  else if (key == "r2") c.r2 = parse_number<int>(key, value);
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "min_content_area") c.min_content_area = parse_number<std::size_t>(key, value);
  else if (key == "blend_mode") {
    if (value == "feather") c.blend_mode = BlendMode::kFeather;
    else if (value == "constant") c.blend_mode = BlendMode::kConstant;
    else fail(ErrorCode::kInvalidConfig, "blend_mode must be feather or constant");
  } else if (key == "use_initial_models") c.use_initial_models = parse_bool(key, value);
  else if (key == "neighborhood_no_sam") c.neighborhood_no_sam = parse_bool(key, value);
  else if (key == "disable_error_buffer") c.disable_error_buffer = parse_bool(key, value);
  else if (key == "single_homography") c.single_homography = parse_bool(key, value);
  else fail(ErrorCode::kInvalidConfig, "unknown config key '" + key + "'");
}

void apply_ablation(RunConfig& c, const std::string& name) {
  if (name == "h0") c.use_initial_models = true;
  else if (name == "no-sam-neighborhood") c.neighborhood_no_sam = true;
  else if (name == "no-error-buffer") c.disable_error_buffer = true;
  else if (name == "single-homography") c.single_homography = true;
  else fail(ErrorCode::kInvalidConfig, "unknown ablation '" + name + "'");
}

void load_config_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kIoError,
          "cannot open config file " + path.string());
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    require(eq != std::string::npos, ErrorCode::kInvalidConfig,
            path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    apply_setting(config, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
}

void validate_config(const RunConfig& c) {
  auto check = [](bool ok, const char* what) {
    require(ok, ErrorCode::kInvalidConfig, what);
  };
  check(c.lambda >= 0.0 && std::isfinite(c.lambda), "lambda must be >= 0");
  check(c.beta >= 0.0 && std::isfinite(c.beta), "beta must be >= 0");
  check(c.gamma > 0.0 && std::isfinite(c.gamma), "gamma must be > 0");
  check(c.nu > 0.0 && std::isfinite(c.nu), "nu must be > 0");
  check(c.ransac_threshold > 0.0, "ransac_threshold must be > 0");
  check(c.sampson_eps > 0.0, "sampson_eps must be > 0");
  check(c.cell_size >= 1, "cell_size must be >= 1");
  check(c.r1 >= 1 && c.r2 >= 1, "r1 and r2 must be >= 1");
}

std::map<std::string, std::string> config_entries(const RunConfig& c) {
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  return {
      {"lambda", format_double(c.lambda)},
      {"beta", format_double(c.beta)},
      {"gamma", format_double(c.gamma)},
      {"nu", format_double(c.nu)},
      {"min_remaining", std::to_string(c.min_remaining)},
      {"ransac_threshold", format_double(c.ransac_threshold)},
      {"sampson_eps", format_double(c.sampson_eps)},
      {"cell_size", std::to_string(c.cell_size)},
      {"r1", std::to_string(c.r1)},
      {"r2", std::to_string(c.r2)},
      {"seed", std::to_string(c.seed)},
      {"min_content_area", std::to_string(c.min_content_area)},
      {"blend_mode", c.blend_mode == BlendMode::kFeather ? "feather" : "constant"},
      {"use_initial_models", b(c.use_initial_models)},
      {"neighborhood_no_sam", b(c.neighborhood_no_sam)},
      {"disable_error_buffer", b(c.disable_error_buffer)},
      {"single_homography", b(c.single_homography)},
  };
}

}  // namespace parastitch
