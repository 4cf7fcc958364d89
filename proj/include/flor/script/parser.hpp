#pragma once

#include "flor/script/ast.hpp"

#include <string>

namespace flor::script {

// Parses a script into a Module. Raises flor::Error with line diagnostics.
Module parse(const std::string& source);

}  // namespace flor::script
