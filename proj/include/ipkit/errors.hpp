#pragma once

#include <stdexcept>
#include <string>

namespace ipkit {

// Exception hierarchy. Each failure class named by a module contract gets
// its own type so callers and tests can distinguish them.

struct io_error : std::runtime_error {
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct format_error : std::runtime_error {
    explicit format_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct unsupported_format_error : std::runtime_error {
    explicit unsupported_format_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct parameter_error : std::invalid_argument {
    explicit parameter_error(const std::string& msg) : std::invalid_argument(msg) {}
};

struct singularity_error : std::runtime_error {
    explicit singularity_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct margin_error : std::runtime_error {
    explicit margin_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct incompatibility_error : std::runtime_error {
    explicit incompatibility_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct consistency_error : std::runtime_error {
    explicit consistency_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct degeneracy_error : std::runtime_error {
    explicit degeneracy_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct calibration_error : std::runtime_error {
    explicit calibration_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct degenerate_data_error : std::runtime_error {
    explicit degenerate_data_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace ipkit
