#pragma once

#include <map>
#include <string>
#include <vector>

#include "nok/tensor.hpp"

namespace nok {

/// "NOPK" array container: magic, u32 version, u64 header length, JSON header
/// (entry names/dtypes/shapes/offsets plus a string-to-string meta map),
/// little-endian payload, and a trailing CRC-64 of the payload bytes.
struct ContainerEntry {
    std::string name;
    Tensor data;
};

struct Container {
    std::vector<ContainerEntry> entries;
    std::map<std::string, std::string> meta;

    bool has(const std::string& name) const;
    const Tensor& get(const std::string& name) const;
};

inline constexpr std::uint32_t kContainerVersion = 1;

void container_write(const std::string& path, const std::vector<ContainerEntry>& entries,
                     const std::map<std::string, std::string>& meta = {});
Container container_read(const std::string& path);

/// CRC-64/ECMA-182 (polynomial 0x42F0E1EBA9EA3693, zero init, no reflection).
std::uint64_t crc64(const unsigned char* data, std::size_t len);

} // namespace nok
