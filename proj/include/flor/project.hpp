#pragma once

#include <filesystem>
#include <optional>
#include <string>

namespace flor {

// Project layout under the metadata folder `.flor/`.
struct Project {
    std::filesystem::path root;

    std::string projid() const;  // basename of the project root
    std::filesystem::path flor_dir() const { return root / ".flor"; }
    std::filesystem::path db_path() const { return flor_dir() / "main.db"; }
    std::filesystem::path obj_dir() const { return flor_dir() / "obj"; }
    std::filesystem::path log_dir() const { return flor_dir() / "log"; }
    std::filesystem::path ws_dir() const { return flor_dir() / "ws"; }
    std::filesystem::path tmp_dir() const { return flor_dir() / "tmp"; }
    std::filesystem::path lock_path() const { return flor_dir() / "lock"; }
    std::filesystem::path calib_path() const { return flor_dir() / "calibration.json"; }

    // FLOR_PROJECT overrides discovery; otherwise walk up from `from` to the
    // directory containing `.flor/`.
    static std::optional<Project> discover(const std::filesystem::path& from);
    static Project init(const std::filesystem::path& root);  // creates .flor/
};

}  // namespace flor
