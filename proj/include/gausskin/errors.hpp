#pragma once

#include <stdexcept>
#include <string>

namespace gausskin {

// Invalid parameters or malformed requests (CLI exit code 2).
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem and file-content failures: missing files, bad schemas,
// malformed PLY payloads (CLI exit code 3).
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerically or structurally invalid data reaching an operation that has a
// documented error outcome (degenerate weights, corrupt assets, ...).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace gausskin
