#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace acctune {

struct CommandResult {
  int exit_code = -1;      // -1 when the process was killed
  bool timed_out = false;
  bool not_found = false;  // shell reported the command missing (exit 127)
  double wall_seconds = 0.0;
};

// Runs `command` through /bin/sh -c with stdout and stderr appended to
// `log_path`. A non-positive timeout means no limit; on expiry the whole
// process group is killed.
CommandResult run_command(const std::string& command, double timeout_s,
                          const std::filesystem::path& log_path);

// Replaces every occurrence of each {key} with its value.
std::string expand_template(std::string_view tmpl,
                            const std::vector<std::pair<std::string_view, std::string>>& subs);

// Single-quotes a string for /bin/sh.
std::string shell_quote(const std::string& s);

}  // namespace acctune
