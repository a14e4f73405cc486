#include "nok/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "nok/container.hpp" // crc64

namespace nok {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str());
}

Config Config::parse_string(const std::string& text) {
    Config c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("config: line " + std::to_string(lineno) + " is not 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw config_error("config: empty key on line " + std::to_string(lineno));
        if (c.kv_.count(key)) throw config_error("config: duplicate key '" + key + "'");
        c.kv_[key] = value;
        c.order_.emplace_back(key, value);
    }
    return c;
}

const std::string* Config::lookup(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return nullptr;
    used_.insert(key);
    return &it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    const std::string* v = lookup(key);
    return v ? *v : fallback;
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
    const std::string* v = lookup(key);
    if (!v) return fallback;
    try {
        std::size_t pos = 0;
        const std::int64_t r = std::stoll(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument("");
        return r;
    } catch (const std::exception&) {
        throw config_error("config: key '" + key + "' is not an integer: '" + *v + "'");
    }
}

double Config::get_double(const std::string& key, double fallback) const {
    const std::string* v = lookup(key);
    if (!v) return fallback;
    try {
        std::size_t pos = 0;
        const double r = std::stod(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument("");
        return r;
    } catch (const std::exception&) {
        throw config_error("config: key '" + key + "' is not a number: '" + *v + "'");
    }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    const std::string* v = lookup(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1") return true;
    if (*v == "false" || *v == "0") return false;
    throw config_error("config: key '" + key + "' is not a boolean: '" + *v + "'");
}

void Config::require_consumed() const {
    for (const auto& [key, value] : order_)
        if (!used_.count(key)) throw config_error("config: unknown key '" + key + "'");
}

std::string Config::fingerprint() const {
    std::string normalized;
    for (const auto& [key, value] : order_) normalized += key + "=" + value + "\n";
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx",
                  static_cast<unsigned long long>(crc64(
                      reinterpret_cast<const unsigned char*>(normalized.data()), normalized.size())));
    return out;
}

} // namespace nok
