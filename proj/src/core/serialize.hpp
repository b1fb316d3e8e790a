#pragma once

#include "core/tensor.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace dvface {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Little-endian binary array layout shared by dataset files, flow files, and
// checkpoints: magic "DVAR", u8 version, u8 dtype (0 = f64), u8 ndim,
// ndim x u64 dims, raw data.
void write_array(std::ostream& os, const Shape& shape, const std::vector<double>& data);
void read_array(std::istream& is, Shape& shape, std::vector<double>& data);

void save_array_file(const std::string& path, const Shape& shape, const std::vector<double>& data);
void load_array_file(const std::string& path, Shape& shape, std::vector<double>& data);

uint64_t fnv1a(const void* bytes, size_t n, uint64_t h = 1469598103934665603ULL);
uint64_t fnv1a_file(const std::string& path);

// Versioned container of named arrays: magic "DVCK", u8 version, u64 config
// hash, u64 entry count, entries as (u16 name_len, name, array).
struct Checkpoint {
    uint64_t config_hash = 0;
    std::map<std::string, std::pair<Shape, std::vector<double>>> arrays;

    void put(const std::string& name, const Shape& shape, std::vector<double> data);
    void put_scalar(const std::string& name, double v);
    double get_scalar(const std::string& name) const;
    bool has(const std::string& name) const { return arrays.count(name) > 0; }

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);
};

}  // namespace dvface
