#ifndef USGAN_SERIALIZE_HPP
#define USGAN_SERIALIZE_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "usgan/tensor.hpp"

namespace usgan {

// Named-tensor container: a JSON header (names, shapes, metadata) followed
// by raw little-endian doubles in header order. Used for checkpoints.
struct TensorStore {
    std::string meta_json;  // free-form metadata blob
    std::vector<std::pair<std::string, Tensor>> tensors;

    const Tensor* find(const std::string& name) const;
};

void write_tensor_store(const TensorStore& store, const std::filesystem::path& path);
TensorStore read_tensor_store(const std::filesystem::path& path);

// Write-temp-then-rename so concurrent readers never observe a torn file.
void atomic_write_tensor_store(const TensorStore& store,
                               const std::filesystem::path& path);

}  // namespace usgan

#endif
