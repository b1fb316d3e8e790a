#include "core/serialize.hpp"

#include <cstring>
#include <fstream>

namespace dvface {

namespace {

template <typename T>
void put_le(std::ostream& os, T v) {
    unsigned char buf[sizeof(T)];
    for (size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
    unsigned char buf[sizeof(T)];
    is.read(reinterpret_cast<char*>(buf), sizeof(T));
    if (!is) throw IoError("unexpected end of stream");
    T v = 0;
    for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
    return v;
}

}  // namespace

void write_array(std::ostream& os, const Shape& shape, const std::vector<double>& data) {
    os.write("DVAR", 4);
    put_le<uint8_t>(os, 1);  // version
    put_le<uint8_t>(os, 0);  // dtype f64
    put_le<uint8_t>(os, static_cast<uint8_t>(shape.size()));
    for (int d : shape) put_le<uint64_t>(os, static_cast<uint64_t>(d));
    for (double x : data) {
        uint64_t bits;
        std::memcpy(&bits, &x, 8);
        put_le<uint64_t>(os, bits);
    }
}

void read_array(std::istream& is, Shape& shape, std::vector<double>& data) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "DVAR", 4) != 0) throw IoError("bad array magic");
    uint8_t ver = get_le<uint8_t>(is);
    if (ver != 1) throw IoError("unsupported array version " + std::to_string(ver));
    uint8_t dtype = get_le<uint8_t>(is);
    if (dtype != 0) throw IoError("unsupported dtype code " + std::to_string(dtype));
    uint8_t ndim = get_le<uint8_t>(is);
    shape.clear();
    for (int i = 0; i < ndim; ++i) shape.push_back(static_cast<int>(get_le<uint64_t>(is)));
    int64_t n = numel(shape);
    data.resize(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
        uint64_t bits = get_le<uint64_t>(is);
        std::memcpy(&data[static_cast<size_t>(i)], &bits, 8);
    }
}

void save_array_file(const std::string& path, const Shape& shape, const std::vector<double>& data) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    write_array(os, shape, data);
    if (!os) throw IoError("write failed: " + path);
}

void load_array_file(const std::string& path, Shape& shape, std::vector<double>& data) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    read_array(is, shape, data);
}

uint64_t fnv1a(const void* bytes, size_t n, uint64_t h) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

uint64_t fnv1a_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    uint64_t h = 1469598103934665603ULL;
    char buf[65536];
    while (is) {
        is.read(buf, sizeof(buf));
        h = fnv1a(buf, static_cast<size_t>(is.gcount()), h);
    }
    return h;
}

void Checkpoint::put(const std::string& name, const Shape& shape, std::vector<double> data) {
    arrays[name] = {shape, std::move(data)};
}

void Checkpoint::put_scalar(const std::string& name, double v) { put(name, {}, {v}); }

double Checkpoint::get_scalar(const std::string& name) const {
    auto it = arrays.find(name);
    if (it == arrays.end()) throw IoError("checkpoint missing entry: " + name);
    return it->second.second.at(0);
}

void Checkpoint::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os.write("DVCK", 4);
    put_le<uint8_t>(os, 1);
    put_le<uint64_t>(os, config_hash);
    put_le<uint64_t>(os, static_cast<uint64_t>(arrays.size()));
    for (const auto& [name, entry] : arrays) {
        put_le<uint16_t>(os, static_cast<uint16_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_array(os, entry.first, entry.second);
    }
    if (!os) throw IoError("write failed: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open checkpoint: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "DVCK", 4) != 0) throw IoError("bad checkpoint magic: " + path);
    uint8_t ver = get_le<uint8_t>(is);
    if (ver != 1) throw IoError("unsupported checkpoint version");
    Checkpoint ck;
    ck.config_hash = get_le<uint64_t>(is);
    uint64_t n = get_le<uint64_t>(is);
    for (uint64_t i = 0; i < n; ++i) {
        uint16_t len = get_le<uint16_t>(is);
        std::string name(len, '\0');
        is.read(name.data(), len);
        Shape shape;
        std::vector<double> data;
        read_array(is, shape, data);
        ck.arrays[name] = {shape, std::move(data)};
    }
    return ck;
}

}  // namespace dvface
