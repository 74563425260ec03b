#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "breakpoint/rng.hpp"

TEST_CASE("splitmix64 produces the reference stream", "[rng]") {
    std::uint64_t state = 42;
    CHECK(bp::splitmix64(state) == 0xbdd732262feb6e95ull);
    CHECK(bp::splitmix64(state) == 0x28efe333b266f103ull);
    CHECK(bp::splitmix64(state) == 0x47526757130f9f52ull);
}

TEST_CASE("xoshiro256++ produces the reference stream", "[rng]") {
    bp::Xoshiro256pp g(42);
    CHECK(g.next() == 0xd0764d4f4476689full);
    CHECK(g.next() == 0x519e4174576f3791ull);
    CHECK(g.next() == 0xfbe07cfb0c24ed8cull);
    CHECK(g.next() == 0xb37d9f600cd835b8ull);
    CHECK(g.next() == 0xcb231c3874846a73ull);
}

TEST_CASE("uniform maps the top 53 bits onto [0,1)", "[rng]") {
    bp::Xoshiro256pp g(42);
    double u = g.uniform();
    CHECK(u == Catch::Approx(0.81430514512290986).epsilon(1e-15));
    CHECK(u == static_cast<double>(0xd0764d4f4476689full >> 11) * 0x1.0p-53);
    for (int i = 0; i < 1000; ++i) {
        double v = g.uniform();
        REQUIRE(v >= 0.0);
        REQUIRE(v < 1.0);
    }
}

TEST_CASE("derive_seed gives distinct reproducible substreams", "[rng]") {
    CHECK(bp::derive_seed(42, 0) == 0x5f72b163061aec7eull);
    CHECK(bp::derive_seed(42, 1) == 0x7c99d6d46a42aae9ull);
    CHECK(bp::derive_seed(42, 0) != bp::derive_seed(42, 1));
    CHECK(bp::derive_seed(42, 0) != bp::derive_seed(43, 0));
    CHECK(bp::derive_seed(42, 7) == bp::derive_seed(42, 7));
}

TEST_CASE("normal generator is deterministic in its seed", "[rng]") {
    bp::NormalGen a(42), b(42);
    for (int i = 0; i < 100; ++i) REQUIRE(a() == b());
    bp::NormalGen c(42);
    CHECK(c() == Catch::Approx(-0.76899305382100613).epsilon(1e-15));
    CHECK(c() == Catch::Approx(1.6661184587141999).epsilon(1e-15));
}

TEST_CASE("normal draws have the right first two moments", "[rng]") {
    bp::NormalGen g(7);
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        double x = g();
        sum += x;
        sumsq += x * x;
    }
    double mean = sum / n;
    double var = sumsq / n - mean * mean;
    CHECK(std::fabs(mean) < 0.01);
    CHECK(std::fabs(var - 1.0) < 0.02);
}

TEST_CASE("sign yields plus or minus one with near-equal frequency", "[rng]") {
    bp::NormalGen g(11);
    int plus = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        double s = g.sign();
        REQUIRE((s == 1.0 || s == -1.0));
        if (s == 1.0) ++plus;
    }
    CHECK(std::fabs(static_cast<double>(plus) / n - 0.5) < 0.01);
}
