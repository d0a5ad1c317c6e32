#include "relight/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "relight/core/error.hpp"

namespace relight::nn {

namespace {

constexpr char kMagic[8] = {'R', 'L', 'N', 'E', 'T', '1', '\0', '\0'};

void write_u64(std::ostream& os, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

uint64_t read_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
}

}  // namespace

const std::vector<double>& Container::tensor(const std::string& name) const {
    for (const auto& [n, data] : tensors)
        if (n == name) return data;
    throw LoadError("checkpoint tensor not found: " + name);
}

void save_container(const std::filesystem::path& path, const Container& c) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path.string());

    nlohmann::json header;
    header["kind"] = c.kind;
    header["meta"] = c.meta;
    auto& tl = header["tensors"] = nlohmann::json::array();
    for (const auto& [name, data] : c.tensors)
        tl.push_back({{"name", name}, {"count", data.size()}});
    const std::string hs = header.dump();

    os.write(kMagic, 8);
    write_u64(os, hs.size());
    os.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    for (const auto& [name, data] : c.tensors)
        os.write(reinterpret_cast<const char*>(data.data()),
                 static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!os) throw IoError("write failed: " + path.string());
}

Container load_container(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw LoadError("checkpoint not found: " + path.string());

    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw LoadError("not a RLNET1 checkpoint: " + path.string());

    const uint64_t hlen = read_u64(is);
    std::string hs(hlen, '\0');
    is.read(hs.data(), static_cast<std::streamsize>(hlen));
    if (!is) throw LoadError("truncated checkpoint header: " + path.string());

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(hs);
    } catch (const nlohmann::json::exception& e) {
        throw LoadError("corrupt checkpoint header: " + std::string(e.what()));
    }

    Container c;
    c.kind = header.value("kind", "");
    c.meta = header.value("meta", nlohmann::json::object());
    for (const auto& t : header.at("tensors")) {
        std::vector<double> data(t.at("count").get<size_t>());
        is.read(reinterpret_cast<char*>(data.data()),
                static_cast<std::streamsize>(data.size() * sizeof(double)));
        if (!is) throw LoadError("truncated checkpoint data: " + path.string());
        c.tensors.emplace_back(t.at("name").get<std::string>(), std::move(data));
    }
    return c;
}

const std::vector<double>& SafeTensorFile::tensor(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw LoadError("safetensors tensor not found: " + name);
    return it->second;
}

SafeTensorFile load_safetensors(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw LoadError("checkpoint not found: " + path.string());

    const uint64_t hlen = read_u64(is);
    if (!is || hlen == 0 || hlen > (64ull << 20))
        throw LoadError("invalid safetensors header size: " + path.string());
    std::string hs(hlen, '\0');
    is.read(hs.data(), static_cast<std::streamsize>(hlen));
    if (!is) throw LoadError("truncated safetensors header: " + path.string());

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(hs);
    } catch (const nlohmann::json::exception& e) {
        throw LoadError("corrupt safetensors header: " + std::string(e.what()));
    }

    std::vector<char> buffer((std::istreambuf_iterator<char>(is)),
                             std::istreambuf_iterator<char>());

    SafeTensorFile f;
    for (auto it = header.begin(); it != header.end(); ++it) {
        if (it.key() == "__metadata__") {
            for (auto m = it.value().begin(); m != it.value().end(); ++m)
                f.metadata[m.key()] = m.value().get<std::string>();
            continue;
        }
        const auto& desc = it.value();
        const std::string dtype = desc.at("dtype").get<std::string>();
        const auto offsets = desc.at("data_offsets").get<std::vector<uint64_t>>();
        if (offsets.size() != 2 || offsets[1] < offsets[0] || offsets[1] > buffer.size())
            throw LoadError("bad data_offsets for tensor " + it.key());
        const uint64_t bytes = offsets[1] - offsets[0];
        std::vector<double> data;
        if (dtype == "F64") {
            data.resize(bytes / sizeof(double));
            std::memcpy(data.data(), buffer.data() + offsets[0], bytes);
        } else if (dtype == "F32") {
            std::vector<float> tmp(bytes / sizeof(float));
            std::memcpy(tmp.data(), buffer.data() + offsets[0], bytes);
            data.assign(tmp.begin(), tmp.end());
        } else {
            throw LoadError("unsupported dtype " + dtype + " for tensor " + it.key());
        }
        f.shapes[it.key()] = desc.at("shape").get<std::vector<int64_t>>();
        f.tensors[it.key()] = std::move(data);
    }
    return f;
}

void save_safetensors(const std::filesystem::path& path, const SafeTensorFile& f) {
    nlohmann::json header = nlohmann::json::object();
    if (!f.metadata.empty()) {
        auto& m = header["__metadata__"] = nlohmann::json::object();
        for (const auto& [k, v] : f.metadata) m[k] = v;
    }
    uint64_t offset = 0;
    for (const auto& [name, data] : f.tensors) {
        const uint64_t bytes = data.size() * sizeof(double);
        nlohmann::json desc;
        desc["dtype"] = "F64";
        auto shape_it = f.shapes.find(name);
        desc["shape"] = shape_it != f.shapes.end()
                            ? nlohmann::json(shape_it->second)
                            : nlohmann::json::array({data.size()});
        desc["data_offsets"] = {offset, offset + bytes};
        header[name] = desc;
        offset += bytes;
    }
    const std::string hs = header.dump();

    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path.string());
    write_u64(os, hs.size());
    os.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    for (const auto& [name, data] : f.tensors)
        os.write(reinterpret_cast<const char*>(data.data()),
                 static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!os) throw IoError("write failed: " + path.string());
}

}  // namespace relight::nn
