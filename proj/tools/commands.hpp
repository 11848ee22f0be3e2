#pragma once

#include <cstdint>
#include <optional>
#include <string>

// CLI commands. Exit codes: 0 = success/certified, 1 = usage or config
// error, 2 = infeasible or failed certificate.

namespace sdreg::cli {

int cmd_synthesize(const std::string& config_path, const std::string& out_dir);
int cmd_simulate(const std::string& config_path, const std::string& regulator_path,
                 const std::string& out_dir);
int cmd_verify(const std::string& config_path, const std::string& regulator_path);
int cmd_reproduce(const std::string& id, const std::string& out_dir,
                  std::optional<std::uint64_t> seed);

// Directory holding the bundled example configs; SDREG_CONFIG_DIR overrides.
std::string config_dir();

}  // namespace sdreg::cli
