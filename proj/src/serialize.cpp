#include "usgan/serialize.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>

#include "usgan/common.hpp"

namespace usgan {

namespace {
constexpr char kMagic[8] = {'U', 'S', 'G', 'A', 'N', 'T', 'S', '1'};
}

const Tensor* TensorStore::find(const std::string& name) const {
    for (const auto& [n, t] : tensors)
        if (n == name) return &t;
    return nullptr;
}

void write_tensor_store(const TensorStore& store, const std::filesystem::path& path) {
    nlohmann::json header;
    header["meta"] = store.meta_json;
    auto& list = header["tensors"] = nlohmann::json::array();
    for (const auto& [name, t] : store.tensors)
        list.push_back({{"name", name}, {"shape", t.shape()}});
    const std::string hs = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write: " + path.string());
    out.write(kMagic, sizeof(kMagic));
    const std::uint64_t hlen = hs.size();
    out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    for (const auto& [name, t] : store.tensors)
        out.write(reinterpret_cast<const char*>(t.data()),
                  static_cast<std::streamsize>(t.numel() * sizeof(double)));
    if (!out) throw DataError("short write: " + path.string());
}

TensorStore read_tensor_store(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw DataError("not a usgan tensor store: " + path.string());
    std::uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    if (!in || hlen > (1u << 30)) throw DataError("corrupt header: " + path.string());
    std::string hs(hlen, '\0');
    in.read(hs.data(), static_cast<std::streamsize>(hlen));
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(hs);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("corrupt header JSON in " + path.string() + ": " + e.what());
    }
    TensorStore store;
    store.meta_json = header.value("meta", std::string{});
    for (const auto& item : header.at("tensors")) {
        const std::string name = item.at("name").get<std::string>();
        const std::vector<int> shape = item.at("shape").get<std::vector<int>>();
        Tensor t(shape);
        in.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(t.numel() * sizeof(double)));
        if (!in) throw DataError("truncated tensor data in " + path.string());
        store.tensors.emplace_back(name, std::move(t));
    }
    return store;
}

void atomic_write_tensor_store(const TensorStore& store,
                               const std::filesystem::path& path) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    write_tensor_store(store, tmp);
    std::filesystem::rename(tmp, path);
}

}  // namespace usgan
