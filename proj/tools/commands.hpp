#pragma once

#include <string>

#include "relclust/error.hpp"

namespace relclust::cli {

// 2 usage/IO, 3 validation or malformed input, 4 backend failure.
int exit_code(ErrorKind kind);

// {"error":{"kind":...,"message":...}}
std::string error_json(std::string_view kind, std::string_view message);

// Entry point of the `relclust` binary.
int run(int argc, char** argv);

}  // namespace relclust::cli
