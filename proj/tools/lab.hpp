#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hitchin/grid.hpp"

namespace hitchin::lab {

inline constexpr const char* kVersion = "0.1.0";
/// Default seed for randomized checks.
inline constexpr std::uint64_t kDefaultSeed = 0x417C4;

enum class Command { solve_ode, fiducial, limiting, residual, glue, lt_spectrum, hk_check, decay, collapse };

const char* to_string(Command c);
Command command_from_string(const std::string& s);

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  Command command = Command::solve_ode;
  std::vector<double> t_values{1.0};
  int k = 1;
  double epsilon = 1.0;
  double r_min = 1e-3;
  double r_max = 0.0;  // resolved by validate(): rho(r_max, min t) = 12 when left at 0
  std::size_t n_r = 512;
  std::size_t n_theta = 64;
  Spacing spacing = Spacing::uniform_log_r;
  std::string output_dir = ".";
  std::vector<std::string> formats{"csv", "json", "plotdata"};
  std::uint64_t seed = kDefaultSeed;

  bool wants(const std::string& format) const;
  bool operator==(const RunConfig&) const = default;
};

/// Key/value pairs in file order. Later keys win.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Line-oriented `key = value` text, `#` starts a comment.
KeyValues parse_key_values(const std::string& text);
/// Applies pairs on top of `base`; unknown keys and bad values raise UsageError naming the token.
RunConfig apply_key_values(RunConfig base, const KeyValues& kv, bool& command_seen);
/// Checks positivity and fills r_max.
RunConfig validate(RunConfig config);

/// Canonical text form; parse_config_text(emit_config(c)) == c.
std::string emit_config(const RunConfig& config);
RunConfig parse_config_text(const std::string& text);

/// Canonical form without output_dir, hashed with 64-bit FNV-1a.
std::uint64_t config_hash(const RunConfig& config);

/// Full command line: `hitchin-lab <command> [--config FILE] [flags]`. Flags override the file.
/// HITCHIN_LAB_OUT supplies the default output directory.
RunConfig parse_args(int argc, const char* const* argv);

struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool passed = false;
};

struct Table {
  std::vector<std::string> headers;
  std::vector<std::vector<double>> rows;
};

struct RunResult {
  RunConfig config;
  Table table;
  std::map<std::string, std::vector<std::pair<double, double>>> plots;
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();
  std::vector<Check> checks;

  bool ok() const;
  nlohmann::ordered_json report() const;
};

/// Runs the experiment; module errors propagate as exceptions.
RunResult run(const RunConfig& config);

/// Writes the requested files into config.output_dir and returns their paths.
std::vector<std::filesystem::path> write_outputs(const RunResult& result);

std::string format_csv(const Table& table);
/// Shortest round-trip decimal form.
std::string format_number(double v);

/// Process entry point; returns the exit code (0 all checks pass, 1 failure, 2 usage).
int main_entry(int argc, const char* const* argv);

}  // namespace hitchin::lab
