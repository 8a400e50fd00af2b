#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pbart/cli/config.hpp"
#include "pbart/sampler/chain.hpp"

namespace pbart {

/// Subcommands. Each validates the keys it needs, writes its files and
/// reports progress on `log`; failures are thrown.
void cmd_generate(const RunConfig& config, std::ostream& log);
void cmd_fit(const RunConfig& config, std::ostream& log);
void cmd_predict(const RunConfig& config, std::ostream& log);
void cmd_sensitivity(const RunConfig& config, std::ostream& log);
void cmd_bench(const RunConfig& config, std::ostream& log);

void run_subcommand(const std::string& name, const RunConfig& config, std::ostream& log);
const std::vector<std::string>& subcommand_names();

/// `path` with its extension (if any) replaced by `suffix`.
std::string derived_path(const std::string& path, const std::string& suffix);

/// Columns: iteration,sigma,mean_leaves,birth_proposed,birth_accepted,
/// death_proposed,death_accepted.
void write_chain_log(const std::string& path, const std::vector<IterationLog>& log);
std::vector<IterationLog> read_chain_log(const std::string& path);

}  // namespace pbart
