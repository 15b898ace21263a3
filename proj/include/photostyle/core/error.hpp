#pragma once

#include <stdexcept>
#include <string>

namespace photostyle {

// Bad inputs: configs, shapes, manifests. CLI maps these to exit code 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Failures while executing an otherwise valid request (I/O, divergence).
// CLI maps these to exit code 2.
class RuntimeError : public std::runtime_error {
public:
    explicit RuntimeError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace photostyle
