#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "feinfn/config.hpp"

using feinfn::ConfigError;
using feinfn::ConfigMap;

TEST_SUITE("config") {

TEST_CASE("parses sections, comments, and typed values") {
    const std::string text =
        "top = 3            # key before any section header\n"
        "\n"
        "[train]\n"
        "lr = 1e-4          ; either comment marker works\n"
        "steps = 80000\n"
        "resume = false\n"
        "name =  spaced value  \n"
        "\n"
        "[ data ]\n"
        "root = /tmp/scenes\n";
    ConfigMap cfg = ConfigMap::parse(text);

    CHECK(cfg.get_int("", "top", -1) == 3);
    CHECK(cfg.get_double("train", "lr", 0.0) == doctest::Approx(1e-4));
    CHECK(cfg.get_int("train", "steps", 0) == 80000);
    CHECK(cfg.get_bool("train", "resume", true) == false);
    CHECK(cfg.get_str("train", "name", "") == "spaced value");
    CHECK(cfg.get_str("data", "root", "") == "/tmp/scenes");
    CHECK(cfg.has("train", "lr"));
    CHECK_FALSE(cfg.has("train", "missing"));
    CHECK_FALSE(cfg.has("nope", "lr"));

    // Fallbacks only apply to absent keys.
    CHECK(cfg.get_int("train", "absent", 42) == 42);
    CHECK(cfg.get_str("absent_section", "x", "dflt") == "dflt");
}

TEST_CASE("boolean spellings") {
    ConfigMap cfg = ConfigMap::parse(
        "[f]\na = true\nb = 1\nc = yes\nd = on\ne = false\ng = 0\nh = no\ni = off\nj = maybe\n");
    for (const char* k : {"a", "b", "c", "d"}) CHECK(cfg.get_bool("f", k, false));
    for (const char* k : {"e", "g", "h", "i"}) CHECK_FALSE(cfg.get_bool("f", k, true));
    CHECK_THROWS_AS(cfg.get_bool("f", "j", false), ConfigError);
}

TEST_CASE("strict parsing rejects malformed input") {
    CHECK_THROWS_AS(ConfigMap::parse("[broken\nx = 1\n"), ConfigError);
    CHECK_THROWS_AS(ConfigMap::parse("[]\n"), ConfigError);
    CHECK_THROWS_AS(ConfigMap::parse("[s]\njust a bare line\n"), ConfigError);
    CHECK_THROWS_AS(ConfigMap::parse("[s]\n= value\n"), ConfigError);
    CHECK_THROWS_AS(ConfigMap::parse("[s]\nk = 1\nk = 2\n"), ConfigError);
    // A duplicate key in a different section is fine.
    CHECK_NOTHROW(ConfigMap::parse("[s]\nk = 1\n[t]\nk = 2\n"));

    ConfigMap cfg = ConfigMap::parse("[s]\nn = 12x\nd = 1.5.2\n");
    CHECK_THROWS_AS(cfg.get_int("s", "n", 0), ConfigError);
    CHECK_THROWS_AS(cfg.get_double("s", "d", 0.0), ConfigError);
}

TEST_CASE("comment markers cut anywhere in the line") {
    ConfigMap cfg = ConfigMap::parse("[s]\nv = head # tail\n");
    CHECK(cfg.get_str("s", "v", "") == "head");
}

TEST_CASE("unconsumed tracks reads, not existence checks") {
    ConfigMap cfg = ConfigMap::parse("[a]\nx = 1\ny = 2\n[b]\nz = 3\n");
    CHECK(cfg.unconsumed().size() == 3);
    CHECK(cfg.has("a", "x"));  // has() must not mark the key consumed
    CHECK(cfg.unconsumed().size() == 3);
    cfg.get_int("a", "x", 0);
    auto left = cfg.unconsumed();
    REQUIRE(left.size() == 2);
    CHECK(left[0] == "a.y");
    CHECK(left[1] == "b.z");
    cfg.get_int("a", "y", 0);
    cfg.get_int("b", "z", 0);
    CHECK(cfg.unconsumed().empty());
}

TEST_CASE("serialize round-trips values exactly") {
    ConfigMap cfg;
    cfg.set_int("m", "count", 12345678901LL);
    cfg.set_double("m", "third", 1.0 / 3.0);
    cfg.set_double("m", "tiny", 1e-300);
    cfg.set_bool("m", "flag", true);
    cfg.set("m", "text", "hello world");

    ConfigMap back = ConfigMap::parse(cfg.serialize());
    CHECK(back.get_int("m", "count", 0) == 12345678901LL);
    CHECK(back.get_double("m", "third", 0.0) == 1.0 / 3.0);  // 17 digits: exact
    CHECK(back.get_double("m", "tiny", 0.0) == 1e-300);
    CHECK(back.get_bool("m", "flag", false));
    CHECK(back.get_str("m", "text", "") == "hello world");
}

TEST_CASE("parse_file") {
    namespace fs = std::filesystem;
    const fs::path p =
        fs::temp_directory_path() / ("feinfn_cfg_" + std::to_string(::getpid()) + ".ini");
    {
        std::ofstream out(p);
        out << "[run]\nseed = 7\n";
    }
    ConfigMap cfg = ConfigMap::parse_file(p.string());
    CHECK(cfg.get_int("run", "seed", 0) == 7);
    std::remove(p.string().c_str());
    CHECK_THROWS_AS(ConfigMap::parse_file(p.string()), ConfigError);
}

}  // TEST_SUITE
