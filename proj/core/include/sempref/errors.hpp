#pragma once

#include <stdexcept>
#include <string>

namespace sempref {

// Bad input data: malformed record files, broken referential integrity,
// out-of-range parameters. The CLI maps these to exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Unusable configuration: missing files, unresolvable command templates.
// Also exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A pipeline stage failed mid-run. Exit code 3.
class StageError : public std::runtime_error {
public:
    explicit StageError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace sempref
