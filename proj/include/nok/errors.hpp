#pragma once

#include <stdexcept>
#include <string>

namespace nok {

/// Base class for all library errors.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct invalid_argument_error : error {
    using error::error;
};

struct shape_error : error {
    using error::error;
};

struct dtype_error : error {
    using error::error;
};

struct graph_error : error {
    using error::error;
};

struct degenerate_geometry_error : error {
    using error::error;
};

struct empty_neighborhood_error : error {
    using error::error;
};

struct unsupported_domain_error : error {
    using error::error;
};

struct unsupported_length_error : error {
    using error::error;
};

struct division_guard_error : error {
    using error::error;
};

struct io_error : error {
    using error::error;
};

struct checksum_error : io_error {
    using io_error::io_error;
};

struct version_error : io_error {
    using io_error::io_error;
};

struct config_error : error {
    using error::error;
};

} // namespace nok
