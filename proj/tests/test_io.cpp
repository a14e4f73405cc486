#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "nok/config.hpp"
#include "nok/container.hpp"

using namespace nok;

namespace {

std::string read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_bytes(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

struct TempFile {
    std::string path;
    explicit TempFile(std::string p) : path(std::move(p)) {}
    ~TempFile() { std::remove(path.c_str()); }
};

} // namespace

TEST_CASE("container round-trips entries and meta bitwise") {
    TempFile tmp("test_container_rt.nopk");
    std::vector<ContainerEntry> entries;
    entries.push_back({"a", Tensor::from_real({2, 3}, {1.0, -2.5, 3e-300, 0.0, 1e300, -0.0})});
    entries.push_back({"b/c", Tensor::from_complex({2}, {cd(1.0, -1.0), cd(0.5, 2.0)})});
    entries.push_back({"empty", Tensor::zeros({0, 4}, Dtype::Real64)});
    std::map<std::string, std::string> meta{{"kind", "test"}, {"n", "7"}};
    container_write(tmp.path, entries, meta);

    Container c = container_read(tmp.path);
    REQUIRE(c.entries.size() == 3);
    CHECK(c.meta == meta);
    CHECK(c.has("a"));
    CHECK(!c.has("missing"));
    CHECK(c.get("a").shape() == Shape{2, 3});
    CHECK(c.get("a").rdata() == entries[0].data.rdata());
    CHECK(c.get("b/c").cdata() == entries[1].data.cdata());
    CHECK(c.get("empty").shape() == Shape{0, 4});
    CHECK_THROWS_AS((void)c.get("missing"), io_error);

    // a second write of identical content produces identical bytes.
    TempFile tmp2("test_container_rt2.nopk");
    container_write(tmp2.path, entries, meta);
    CHECK(read_bytes(tmp.path) == read_bytes(tmp2.path));
}

TEST_CASE("container with no entries is valid") {
    TempFile tmp("test_container_empty.nopk");
    container_write(tmp.path, {}, {{"only", "meta"}});
    Container c = container_read(tmp.path);
    CHECK(c.entries.empty());
    CHECK(c.meta.at("only") == "meta");
}

TEST_CASE("container rejects duplicate entry names") {
    TempFile tmp("test_container_dup.nopk");
    std::vector<ContainerEntry> entries;
    entries.push_back({"x", Tensor::scalar(1.0)});
    entries.push_back({"x", Tensor::scalar(2.0)});
    CHECK_THROWS_AS(container_write(tmp.path, entries), invalid_argument_error);
}

TEST_CASE("container detects corruption, bad magic, and future versions") {
    TempFile tmp("test_container_corrupt.nopk");
    container_write(tmp.path, {{"v", Tensor::from_real({4}, {1.0, 2.0, 3.0, 4.0})}});
    const std::string good = read_bytes(tmp.path);

    // flip one payload byte: the trailing CRC must catch it.
    std::string flipped = good;
    flipped[flipped.size() - 12] ^= 0x01;
    write_bytes(tmp.path, flipped);
    CHECK_THROWS_AS((void)container_read(tmp.path), checksum_error);

    // wrong magic.
    std::string bad_magic = good;
    bad_magic[0] = 'X';
    write_bytes(tmp.path, bad_magic);
    CHECK_THROWS_AS((void)container_read(tmp.path), io_error);

    // unsupported version field.
    std::string bad_version = good;
    bad_version[4] = static_cast<char>(kContainerVersion + 1);
    write_bytes(tmp.path, bad_version);
    CHECK_THROWS_AS((void)container_read(tmp.path), version_error);

    // truncation.
    write_bytes(tmp.path, good.substr(0, good.size() / 2));
    CHECK_THROWS_AS((void)container_read(tmp.path), io_error);

    CHECK_THROWS_AS((void)container_read("no_such_file.nopk"), io_error);
}

TEST_CASE("config parses comments, types, and dotted keys") {
    Config c = Config::parse_string(
        "# a comment\n"
        "\n"
        "train.epochs = 12   # trailing comment\n"
        "train.lr = 1e-3\n"
        "model.kind = fno\n"
        "flag = true\n");
    CHECK(c.get_int("train.epochs", 0) == 12);
    CHECK(c.get_double("train.lr", 0.0) == 1e-3);
    CHECK(c.get_string("model.kind", "") == "fno");
    CHECK(c.get_bool("flag", false));
    CHECK(c.get_int("absent", 77) == 77);
    c.require_consumed();
}

TEST_CASE("config rejects malformed input") {
    CHECK_THROWS_AS((void)Config::parse_string("novalue\n"), config_error);
    CHECK_THROWS_AS((void)Config::parse_string("= 3\n"), config_error);
    CHECK_THROWS_AS((void)Config::parse_string("a = 1\na = 2\n"), config_error);
    Config c = Config::parse_string("n = notanint\nx = nan?\nb = maybe\n");
    CHECK_THROWS_AS((void)c.get_int("n", 0), config_error);
    CHECK_THROWS_AS((void)c.get_double("x", 0.0), config_error);
    CHECK_THROWS_AS((void)c.get_bool("b", false), config_error);
    CHECK_THROWS_AS((void)Config::parse_file("no_such_config.cfg"), config_error);
}

TEST_CASE("config flags unconsumed keys") {
    Config c = Config::parse_string("used = 1\ntypo.keu = 2\n");
    CHECK(c.get_int("used", 0) == 1);
    CHECK_THROWS_AS(c.require_consumed(), config_error);
}

TEST_CASE("config fingerprint is stable and content-sensitive") {
    Config a = Config::parse_string("x = 1\ny = 2\n");
    Config b = Config::parse_string("x = 1\ny = 2\n");
    Config d = Config::parse_string("x = 1\ny = 3\n");
    CHECK(a.fingerprint() == b.fingerprint());
    CHECK(a.fingerprint() != d.fingerprint());
    CHECK(!a.fingerprint().empty());
}

TEST_CASE("crc64 check values") {
    // CRC-64/ECMA-182 of "123456789".
    const unsigned char msg[] = "123456789";
    CHECK(crc64(msg, 9) == 0x6C40DF5F0B497347ull);
    CHECK(crc64(msg, 0) == 0ull);
}
