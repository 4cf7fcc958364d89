#pragma once

#include <string>
#include <vector>

namespace flor::cli {

// Exit codes: 0 success, 1 user-declined/empty, 2 usage/error.

int cmd_run(const std::string& script, const std::vector<std::string>& kwargs,
            const std::string& replay_flor);
int cmd_replay(const std::vector<std::string>& vars, const std::string& where_clause, int workers,
               bool yes);
int cmd_dataframe(const std::vector<std::string>& names, const std::string& where_clause,
                  const std::string& csv_out);
int cmd_versions();
int cmd_stat(const std::string& ref);

}  // namespace flor::cli
