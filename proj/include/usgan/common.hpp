#ifndef USGAN_COMMON_HPP
#define USGAN_COMMON_HPP

#include <stdexcept>
#include <string>

namespace usgan {

// Thrown for malformed or missing input data (images, directories, config
// files, checkpoints). The CLI maps this to exit code 3.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when training produces a non-finite loss. CLI exit code 4.
struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape/contract violations inside the numeric stack.
struct ShapeError : std::invalid_argument {
    explicit ShapeError(const std::string& msg) : std::invalid_argument(msg) {}
};

}  // namespace usgan

#endif
