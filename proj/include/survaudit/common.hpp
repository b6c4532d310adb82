#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace survaudit {

// Error categories map onto CLI exit codes (2/3/4).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Shortest round-trip decimal representation, locale independent.
std::string format_double(double value);

/// Strict double parse of a full token; throws DataError otherwise.
double parse_double(std::string_view token, std::string_view what);

/// FNV-1a 64-bit over raw bytes.
std::uint64_t fnv1a64(std::string_view bytes);

/// Hex digest string of fnv1a64, prefixed with the algorithm name.
std::string content_hash(std::string_view bytes);

/// Content hash of a file on disk; throws ConfigError when unreadable.
std::string hash_file(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

/// Runs fn(i) for i in [0, n). Tasks must write to disjoint state; the
/// result is required to be independent of the thread count.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

/// Rethrows e with a "stage <name>:" prefix, preserving the error category.
[[noreturn]] void throw_with_stage(const std::string& stage, const std::exception& e);

}  // namespace survaudit
