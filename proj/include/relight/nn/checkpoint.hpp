#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace relight::nn {

// Native checkpoint container: 8-byte magic "RLNET1\0\0", u64 little-endian
// header length, JSON header, then float64 little-endian blobs in header
// order.
struct Container {
    std::string kind;
    nlohmann::json meta;
    std::vector<std::pair<std::string, std::vector<double>>> tensors;

    const std::vector<double>& tensor(const std::string& name) const;
};

void save_container(const std::filesystem::path& path, const Container& c);
Container load_container(const std::filesystem::path& path);

// Reader/writer for the safetensors layout (u64 LE header size, JSON header
// with dtype/shape/data_offsets per tensor plus optional __metadata__ string
// map, raw buffer after the header). F32 and F64 tensors are supported and
// widened to double.
struct SafeTensorFile {
    std::map<std::string, std::vector<double>> tensors;
    std::map<std::string, std::vector<int64_t>> shapes;
    std::map<std::string, std::string> metadata;

    const std::vector<double>& tensor(const std::string& name) const;
};

SafeTensorFile load_safetensors(const std::filesystem::path& path);
void save_safetensors(const std::filesystem::path& path, const SafeTensorFile& f);

}  // namespace relight::nn
