#pragma once

#include <cstdint>
#include <string>

namespace manelab {

// 64-bit FNV-1a over raw bytes; used for the provenance hash of the resolved
// configuration recorded in every summary.
std::uint64_t fnv1a_hash(const std::string& bytes);

// Command-line entry point. Returns the process exit code: 0 success,
// 1 input/validation error, 2 numerical failure (diagnostics file written),
// 3 verification mismatch (verify-paper only).
int run_cli(int argc, const char* const* argv);

}  // namespace manelab
