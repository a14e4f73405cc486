#include "nok/container.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace nok {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'N', 'O', 'P', 'K'};

std::uint64_t crc_table_entry(std::uint64_t i) {
    constexpr std::uint64_t poly = 0x42F0E1EBA9EA3693ULL;
    std::uint64_t crc = i << 56;
    for (int b = 0; b < 8; ++b) crc = (crc & 0x8000000000000000ULL) ? (crc << 1) ^ poly : crc << 1;
    return crc;
}

const std::uint64_t* crc_table() {
    static std::uint64_t table[256];
    static const bool init = [] {
        for (std::uint64_t i = 0; i < 256; ++i) table[i] = crc_table_entry(i);
        return true;
    }();
    (void)init;
    return table;
}

template <typename T>
void put(std::string& buf, T v) {
    char raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    buf.append(raw, sizeof(T)); // little-endian host assumed (checked in read)
}

} // namespace

std::uint64_t crc64(const unsigned char* data, std::size_t len) {
    const std::uint64_t* table = crc_table();
    std::uint64_t crc = 0;
    for (std::size_t i = 0; i < len; ++i) crc = (crc << 8) ^ table[((crc >> 56) ^ data[i]) & 0xFF];
    return crc;
}

bool Container::has(const std::string& name) const {
    for (const auto& e : entries)
        if (e.name == name) return true;
    return false;
}

const Tensor& Container::get(const std::string& name) const {
    for (const auto& e : entries)
        if (e.name == name) return e.data;
    throw io_error("container: no entry named '" + name + "'");
}

void container_write(const std::string& path, const std::vector<ContainerEntry>& entries,
                     const std::map<std::string, std::string>& meta) {
    for (std::size_t i = 0; i < entries.size(); ++i)
        for (std::size_t j = i + 1; j < entries.size(); ++j)
            if (entries[i].name == entries[j].name)
                throw invalid_argument_error("container: duplicate entry name '" + entries[i].name + "'");

    std::string payload;
    json header_entries = json::array();
    for (const auto& e : entries) {
        json je;
        je["name"] = e.name;
        je["dtype"] = e.data.is_real() ? "f64" : "c128";
        je["shape"] = e.data.shape();
        je["byte_offset"] = payload.size();
        header_entries.push_back(std::move(je));
        if (e.data.is_real()) {
            for (double v : e.data.rdata()) put(payload, v);
        } else {
            for (cd v : e.data.cdata()) {
                put(payload, v.real());
                put(payload, v.imag());
            }
        }
    }
    json header;
    header["entries"] = std::move(header_entries);
    header["meta"] = meta;
    const std::string htext = header.dump();

    std::string buf;
    buf.append(kMagic, 4);
    put(buf, kContainerVersion);
    put(buf, static_cast<std::uint64_t>(htext.size()));
    buf += htext;
    buf += payload;
    put(buf, crc64(reinterpret_cast<const unsigned char*>(payload.data()), payload.size()));

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw io_error("container: cannot open '" + tmp + "' for writing");
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (!out) throw io_error("container: write failed for '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw io_error("container: cannot rename '" + tmp + "' to '" + path + "'");
}

Container container_read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("container: cannot open '" + path + "'");
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (buf.size() < 4 + 4 + 8 + 8 || std::memcmp(buf.data(), kMagic, 4) != 0)
        throw io_error("container: bad magic in '" + path + "'");
    std::uint32_t version;
    std::memcpy(&version, buf.data() + 4, 4);
    if (version != kContainerVersion)
        throw version_error("container: unsupported version " + std::to_string(version) + " in '" + path + "'");
    std::uint64_t hlen;
    std::memcpy(&hlen, buf.data() + 8, 8);
    const std::size_t hstart = 16;
    if (hstart + hlen + 8 > buf.size()) throw io_error("container: truncated header in '" + path + "'");
    const std::size_t pstart = hstart + hlen;
    const std::size_t plen = buf.size() - pstart - 8;

    std::uint64_t stored_crc;
    std::memcpy(&stored_crc, buf.data() + buf.size() - 8, 8);
    if (crc64(reinterpret_cast<const unsigned char*>(buf.data()) + pstart, plen) != stored_crc)
        throw checksum_error("container: payload checksum mismatch in '" + path + "'");

    json header;
    try {
        header = json::parse(buf.substr(hstart, hlen));
    } catch (const json::exception& e) {
        throw io_error("container: malformed header in '" + path + "': " + e.what());
    }

    Container c;
    if (header.contains("meta"))
        for (auto& [k, v] : header["meta"].items()) c.meta[k] = v.get<std::string>();
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    for (const auto& je : header.at("entries")) {
        ContainerEntry e;
        e.name = je.at("name").get<std::string>();
        const auto dtype = je.at("dtype").get<std::string>();
        Shape shape = je.at("shape").get<Shape>();
        const auto offset = je.at("byte_offset").get<std::size_t>();
        const auto count = static_cast<std::size_t>(shape_numel(shape));
        const std::size_t bytes = count * (dtype == "c128" ? 16 : 8);
        if (offset + bytes > plen) throw io_error("container: entry '" + e.name + "' out of bounds");
        for (const auto& [o, b] : spans)
            if (offset < o + b && o < offset + bytes)
                throw io_error("container: entry '" + e.name + "' overlaps another entry");
        spans.emplace_back(offset, bytes);
        const char* src = buf.data() + pstart + offset;
        if (dtype == "f64") {
            std::vector<double> data(count);
            std::memcpy(data.data(), src, bytes);
            e.data = Tensor::from_real(std::move(shape), std::move(data));
        } else if (dtype == "c128") {
            std::vector<cd> data(count);
            std::memcpy(data.data(), src, bytes);
            e.data = Tensor::from_complex(std::move(shape), std::move(data));
        } else {
            throw io_error("container: unknown dtype '" + dtype + "' for entry '" + e.name + "'");
        }
        c.entries.push_back(std::move(e));
    }
    return c;
}

} // namespace nok
