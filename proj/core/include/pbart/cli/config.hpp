#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pbart/sampler/chain.hpp"

namespace pbart {

/// Every setting the command line tool understands. Keys are the field
/// names below; see config_keys() for the accepted spellings and domains.
struct RunConfig {
  // fit
  std::string role = "serial";  // serial | master | worker | inproc
  std::string listen = "127.0.0.1:7070";
  std::string connect;
  std::size_t rank = 0;
  std::string data;
  std::string response = "y";
  std::uint32_t m = 200;
  double kfac = 2.0;
  double alpha = 0.95;
  double beta = 2.0;
  double nu = 3.0;
  double q = 0.9;
  std::uint32_t numcut = 100;
  std::uint32_t min_leaf = 5;
  std::uint32_t draws = 1000;
  std::uint32_t burn = 100;
  std::uint32_t thin = 1;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  std::size_t reduction_blocks = 0;  // 0 = same as workers
  bool debug_checks = false;
  std::string output;
  std::string chain_log;

  // generate
  std::size_t n = 2000;
  std::size_t n_test = 0;
  std::size_t d = 10;
  std::size_t kernels = 30;
  double sigma_noise = 0.15;

  // predict / sensitivity
  std::string model;
  std::string input;
  std::string truth;
  std::size_t threads = 1;
  std::size_t n_s = 10000;
  std::size_t parts = 10;
  std::size_t n_mc = 2000;
  std::size_t grid_points = 21;

  // bench
  std::vector<std::size_t> bench_n{2000, 4000};
  std::vector<std::size_t> bench_m{20, 50};
  std::vector<std::size_t> bench_workers{0, 1, 2, 4};
  std::uint32_t iterations = 100;

  SamplerSettings sampler() const;
  RunPlan plan() const;
};

struct ConfigKey {
  const char* name;
  const char* help;
};

/// All keys in a stable order.
const std::vector<ConfigKey>& config_keys();

/// key -> value pairs from a flat text file: one `key = value` per line,
/// `#` starts a comment, blank lines are ignored. Throws ParseError with the
/// line number on a malformed line and ConfigError on a duplicate key.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> read_config_file(const std::string& path);

/// Applies file values, then flag values, over the defaults. Throws
/// ConfigError naming the key on an unknown key or an out-of-domain value.
RunConfig parse_config(const std::map<std::string, std::string>& flags,
                       const std::map<std::string, std::string>& file = {});

/// Checks the keys the subcommand (and, for fit, the role) requires.
void require_for(const RunConfig& config, const std::string& subcommand);

}  // namespace pbart
