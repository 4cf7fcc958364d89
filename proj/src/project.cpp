#include "flor/project.hpp"

#include "flor/error.hpp"

#include <cstdlib>

namespace flor {

namespace fs = std::filesystem;

std::string Project::projid() const {
    auto canon = fs::weakly_canonical(root);
    return canon.filename().string();
}

std::optional<Project> Project::discover(const fs::path& from) {
    if (const char* env = std::getenv("FLOR_PROJECT"); env && *env) {
        fs::path p(env);
        if (!fs::exists(p)) fail("FLOR_PROJECT points at a missing directory: " + std::string(env));
        return Project{fs::weakly_canonical(p)};
    }
    fs::path cur = fs::weakly_canonical(from);
    for (;;) {
        if (fs::exists(cur / ".flor")) return Project{cur};
        auto parent = cur.parent_path();
        if (parent == cur) return std::nullopt;
        cur = parent;
    }
}

Project Project::init(const fs::path& root) {
    Project p{fs::weakly_canonical(root)};
    fs::create_directories(p.flor_dir());
    return p;
}

}  // namespace flor
