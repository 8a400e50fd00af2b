#include "pbart/cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "pbart/error.hpp"
#include "pbart/text.hpp"

namespace pbart {

namespace {

using Setter = std::function<void(RunConfig&, const std::string& key, std::string_view value)>;

struct Entry {
  ConfigKey key;
  Setter set;
};

unsigned long long to_uint(const std::string& key, std::string_view v, unsigned long long lo,
                           unsigned long long hi = std::numeric_limits<unsigned long long>::max()) {
  unsigned long long out = 0;
  if (!text::parse_uint(text::trim(v), out)) throw ConfigError(key, "expected a non-negative integer, got '" + std::string(v) + "'");
  if (out < lo || out > hi) {
    throw ConfigError(key, "value " + std::to_string(out) + " outside [" + std::to_string(lo) + ", " +
                               (hi == std::numeric_limits<unsigned long long>::max() ? std::string("inf")
                                                                                      : std::to_string(hi)) +
                               "]");
  }
  return out;
}

// open_lo/open_hi: whether the bound itself is excluded.
double to_real(const std::string& key, std::string_view v, double lo, double hi, bool open_lo, bool open_hi) {
  double out = 0.0;
  if (!text::parse_double(text::trim(v), out) || !std::isfinite(out)) {
    throw ConfigError(key, "expected a number, got '" + std::string(v) + "'");
  }
  const bool below = open_lo ? out <= lo : out < lo;
  const bool above = open_hi ? out >= hi : out > hi;
  if (below || above) {
    throw ConfigError(key, "value " + text::format_double(out) + " outside " + (open_lo ? "(" : "[") +
                               text::format_double(lo) + ", " + text::format_double(hi) + (open_hi ? ")" : "]"));
  }
  return out;
}

bool to_bool(const std::string& key, std::string_view v) {
  const auto t = text::trim(v);
  if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
  if (t == "0" || t == "false" || t == "no" || t == "off") return false;
  throw ConfigError(key, "expected true or false, got '" + std::string(v) + "'");
}

std::vector<std::size_t> to_list(const std::string& key, std::string_view v) {
  std::vector<std::size_t> out;
  for (auto item : text::split(v, ',')) out.push_back(static_cast<std::size_t>(to_uint(key, item, 0)));
  if (out.empty()) throw ConfigError(key, "empty list");
  return out;
}

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr auto kU32 = std::numeric_limits<std::uint32_t>::max();

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table{
      {{"role", "fit role: serial | master | worker | inproc"},
       [](RunConfig& c, const std::string& k, std::string_view v) {
         const std::string s(text::trim(v));
         if (s != "serial" && s != "master" && s != "worker" && s != "inproc") {
           throw ConfigError(k, "unknown role '" + s + "'");
         }
         c.role = s;
       }},
      {{"listen", "master address host:port"}, [](RunConfig& c, auto&, auto v) { c.listen = text::trim(v); }},
      {{"connect", "worker: master address host:port"}, [](RunConfig& c, auto&, auto v) { c.connect = text::trim(v); }},
      {{"rank", "worker rank 1..workers"},
       [](RunConfig& c, const std::string& k, auto v) { c.rank = to_uint(k, v, 1); }},
      {{"data", "training table path"}, [](RunConfig& c, auto&, auto v) { c.data = text::trim(v); }},
      {{"response", "response column name"}, [](RunConfig& c, auto&, auto v) { c.response = text::trim(v); }},
      {{"m", "number of trees"},
       [](RunConfig& c, const std::string& k, auto v) { c.m = static_cast<std::uint32_t>(to_uint(k, v, 1, kU32)); }},
      {{"kfac", "leaf prior shrinkage factor"},
       [](RunConfig& c, const std::string& k, auto v) { c.kfac = to_real(k, v, 0, kInf, true, true); }},
      {{"alpha", "split prior base"},
       [](RunConfig& c, const std::string& k, auto v) { c.alpha = to_real(k, v, 0, 1, true, true); }},
      {{"beta", "split prior depth exponent"},
       [](RunConfig& c, const std::string& k, auto v) { c.beta = to_real(k, v, 0, kInf, false, true); }},
      {{"nu", "sigma prior degrees of freedom"},
       [](RunConfig& c, const std::string& k, auto v) { c.nu = to_real(k, v, 0, kInf, true, true); }},
      {{"q", "sigma prior quantile"},
       [](RunConfig& c, const std::string& k, auto v) { c.q = to_real(k, v, 0, 1, true, true); }},
      {{"numcut", "cutpoints per variable"},
       [](RunConfig& c, const std::string& k, auto v) { c.numcut = static_cast<std::uint32_t>(to_uint(k, v, 1, kU32)); }},
      {{"min_leaf", "minimum rows per new terminal node"},
       [](RunConfig& c, const std::string& k, auto v) { c.min_leaf = static_cast<std::uint32_t>(to_uint(k, v, 0, kU32)); }},
      {{"draws", "total iterations including burn-in"},
       [](RunConfig& c, const std::string& k, auto v) { c.draws = static_cast<std::uint32_t>(to_uint(k, v, 1, kU32)); }},
      {{"burn", "burn-in iterations"},
       [](RunConfig& c, const std::string& k, auto v) { c.burn = static_cast<std::uint32_t>(to_uint(k, v, 0, kU32)); }},
      {{"thin", "keep every thin-th draw after burn-in"},
       [](RunConfig& c, const std::string& k, auto v) { c.thin = static_cast<std::uint32_t>(to_uint(k, v, 1, kU32)); }},
      {{"seed", "random seed"}, [](RunConfig& c, const std::string& k, auto v) { c.seed = to_uint(k, v, 0); }},
      {{"workers", "worker count"}, [](RunConfig& c, const std::string& k, auto v) { c.workers = to_uint(k, v, 1); }},
      {{"reduction_blocks", "summation blocks (0 = workers)"},
       [](RunConfig& c, const std::string& k, auto v) { c.reduction_blocks = to_uint(k, v, 0); }},
      {{"debug_checks", "compare forest hashes every iteration"},
       [](RunConfig& c, const std::string& k, auto v) { c.debug_checks = to_bool(k, v); }},
      {{"output", "output path"}, [](RunConfig& c, auto&, auto v) { c.output = text::trim(v); }},
      {{"chain_log", "per-iteration chain log path"}, [](RunConfig& c, auto&, auto v) { c.chain_log = text::trim(v); }},
      {{"n", "rows to generate"}, [](RunConfig& c, const std::string& k, auto v) { c.n = to_uint(k, v, 1); }},
      {{"n_test", "holdout rows to generate"},
       [](RunConfig& c, const std::string& k, auto v) { c.n_test = to_uint(k, v, 0); }},
      {{"d", "input dimension"}, [](RunConfig& c, const std::string& k, auto v) { c.d = to_uint(k, v, 1); }},
      {{"kernels", "Friedman kernel count"},
       [](RunConfig& c, const std::string& k, auto v) { c.kernels = to_uint(k, v, 1); }},
      {{"sigma_noise", "noise standard deviation"},
       [](RunConfig& c, const std::string& k, auto v) { c.sigma_noise = to_real(k, v, 0, kInf, false, true); }},
      {{"model", "model file path"}, [](RunConfig& c, auto&, auto v) { c.model = text::trim(v); }},
      {{"input", "input table path"}, [](RunConfig& c, auto&, auto v) { c.input = text::trim(v); }},
      {{"truth", "noiseless values for RMSE"}, [](RunConfig& c, auto&, auto v) { c.truth = text::trim(v); }},
      {{"threads", "threads (0 = all cores)"},
       [](RunConfig& c, const std::string& k, auto v) { c.threads = to_uint(k, v, 0); }},
      {{"n_s", "Sobol rows per matrix"}, [](RunConfig& c, const std::string& k, auto v) { c.n_s = to_uint(k, v, 2); }},
      {{"parts", "Sobol independent parts"},
       [](RunConfig& c, const std::string& k, auto v) { c.parts = to_uint(k, v, 1); }},
      {{"n_mc", "main-effect Monte Carlo draws"},
       [](RunConfig& c, const std::string& k, auto v) { c.n_mc = to_uint(k, v, 1); }},
      {{"grid_points", "main-effect grid size"},
       [](RunConfig& c, const std::string& k, auto v) { c.grid_points = to_uint(k, v, 1); }},
      {{"bench_n", "comma-separated n values"},
       [](RunConfig& c, const std::string& k, auto v) { c.bench_n = to_list(k, v); }},
      {{"bench_m", "comma-separated m values"},
       [](RunConfig& c, const std::string& k, auto v) { c.bench_m = to_list(k, v); }},
      {{"bench_workers", "comma-separated worker counts (0 = serial)"},
       [](RunConfig& c, const std::string& k, auto v) { c.bench_workers = to_list(k, v); }},
      {{"iterations", "bench iterations per cell"},
       [](RunConfig& c, const std::string& k, auto v) {
         c.iterations = static_cast<std::uint32_t>(to_uint(k, v, 1, kU32));
       }},
  };
  return table;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    for (const auto& e : entries()) out.push_back(e.key);
    return out;
  }();
  return keys;
}

SamplerSettings RunConfig::sampler() const {
  SamplerSettings s;
  s.prior.m = m;
  s.prior.alpha = alpha;
  s.prior.beta = beta;
  s.prior.kfac = kfac;
  s.prior.nu = nu;
  s.prior.sigma_quantile = q;
  s.prior.min_leaf = min_leaf;
  s.numcut = numcut;
  return s;
}

RunPlan RunConfig::plan() const { return RunPlan{draws, burn, thin, seed}; }

std::map<std::string, std::string> parse_config_text(const std::string& body) {
  std::map<std::string, std::string> out;
  std::istringstream in(body);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = text::trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key = value", number);
    const std::string key(text::trim(view.substr(0, eq)));
    if (key.empty()) throw ParseError("missing key before '='", number);
    if (!out.emplace(key, std::string(text::trim(view.substr(eq + 1)))).second) {
      throw ConfigError(key, "given twice (line " + std::to_string(number) + ")");
    }
  }
  return out;
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

RunConfig parse_config(const std::map<std::string, std::string>& flags, const std::map<std::string, std::string>& file) {
  RunConfig config;
  auto apply = [&](const std::map<std::string, std::string>& values) {
    for (const auto& [key, value] : values) {
      const auto& table = entries();
      const auto it = std::find_if(table.begin(), table.end(), [&](const Entry& e) { return key == e.key.name; });
      if (it == table.end()) throw ConfigError(key, "unknown key");
      it->set(config, key, value);
    }
  };
  apply(file);
  apply(flags);
  return config;
}

void require_for(const RunConfig& c, const std::string& subcommand) {
  auto need = [](bool ok, const char* key, const std::string& why) {
    if (!ok) throw ConfigError(key, "required " + why);
  };
  if (subcommand == "generate") {
    need(!c.output.empty(), "output", "by generate");
  } else if (subcommand == "fit") {
    const std::string why = "for role " + c.role;
    if (c.role == "serial" || c.role == "inproc") {
      need(!c.data.empty(), "data", why);
      need(!c.output.empty(), "output", why);
    } else if (c.role == "master") {
      need(!c.listen.empty(), "listen", why);
      need(!c.output.empty(), "output", why);
    } else if (c.role == "worker") {
      need(!c.connect.empty(), "connect", why);
      need(!c.data.empty(), "data", why);
      need(c.rank >= 1, "rank", why);
      if (c.rank > c.workers) throw ConfigError("rank", "exceeds workers");
    }
    if (c.draws <= c.burn) throw ConfigError("draws", "empty posterior: draws must exceed burn");
  } else if (subcommand == "predict") {
    need(!c.model.empty(), "model", "by predict");
    need(!c.input.empty(), "input", "by predict");
    need(!c.output.empty(), "output", "by predict");
  } else if (subcommand == "sensitivity") {
    need(!c.model.empty(), "model", "by sensitivity");
    need(!c.output.empty(), "output", "by sensitivity");
  } else if (subcommand == "bench") {
    need(!c.output.empty(), "output", "by bench");
    if (c.iterations <= c.burn) throw ConfigError("iterations", "must exceed burn");
  } else {
    throw ConfigError("subcommand", "unknown subcommand '" + subcommand + "'");
  }
}

}  // namespace pbart
