#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "ashe/rng.hpp"
#include "doctest.h"

using namespace ashe;

TEST_CASE("same seed reproduces the sequence") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(43);
    bool all_equal = true;
    Rng a2(42);
    for (int i = 0; i < 10; ++i) all_equal &= (a2.next_u64() == c.next_u64());
    CHECK_FALSE(all_equal);
}

TEST_CASE("stream derivation separates consumers") {
    const uint64_t master = 7;
    std::set<uint64_t> seen;
    seen.insert(rng_stream(master, "sensor_noise"));
    seen.insert(rng_stream(master, "model_init"));
    seen.insert(rng_stream(master, "shuffle", 0));
    seen.insert(rng_stream(master, "shuffle", 1));
    seen.insert(rng_stream(master, "dropout", 0, 0));
    seen.insert(rng_stream(master, "dropout", 0, 1));
    seen.insert(rng_stream(master, "dropout", 1, 0));
    CHECK(seen.size() == 7);
    CHECK(rng_stream(master, "shuffle", 1) == rng_stream(master, "shuffle", 1));
    CHECK(rng_stream(master, "shuffle", 1) != rng_stream(master + 1, "shuffle", 1));
}

TEST_CASE("uniform stays in its half-open range") {
    Rng rng(1);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo < 0.001);
    CHECK(hi > 0.999);
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.uniform(-3.0, 5.0);
        CHECK(v >= -3.0);
        CHECK(v < 5.0);
        const double p = rng.uniform_pos();
        CHECK(p > 0.0);
        CHECK(p <= 1.0);
    }
}

TEST_CASE("uniform_int covers both inclusive endpoints") {
    Rng rng(2);
    std::vector<int> hits(6, 0);
    for (int i = 0; i < 6000; ++i) {
        const int64_t v = rng.uniform_int(-2, 3);
        REQUIRE(v >= -2);
        REQUIRE(v <= 3);
        ++hits[static_cast<size_t>(v + 2)];
    }
    for (int h : hits) CHECK(h > 800);
    CHECK(rng.uniform_int(9, 9) == 9);
}

TEST_CASE("bernoulli respects the edge probabilities") {
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        CHECK_FALSE(rng.bernoulli(0.0));
        CHECK(rng.bernoulli(1.0));
    }
    int heads = 0;
    for (int i = 0; i < 10000; ++i) heads += rng.bernoulli(0.25);
    CHECK(heads > 2200);
    CHECK(heads < 2800);
}

TEST_CASE("ziggurat normal moments") {
    Rng rng(4);
    const int n = 400000;
    double sum = 0.0, sum2 = 0.0, sum3 = 0.0;
    int beyond3 = 0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sum2 += x * x;
        sum3 += x * x * x;
        if (std::abs(x) > 3.0) ++beyond3;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    const double skew = sum3 / n;
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.02);
    CHECK(std::abs(skew) < 0.03);
    // Two-sided 3-sigma tail mass is about 0.0027.
    const double tail = static_cast<double>(beyond3) / n;
    CHECK(tail > 0.0017);
    CHECK(tail < 0.0037);
}

TEST_CASE("scaled normal applies mu and sigma") {
    Rng rng(5);
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal(10.0, 2.0);
        sum += x;
        sum2 += x * x;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(std::abs(mean - 10.0) < 0.02);
    CHECK(std::abs(var - 4.0) < 0.1);
}

TEST_CASE("shuffle permutes without loss") {
    Rng rng(6);
    std::vector<int> v(257);
    for (size_t i = 0; i < v.size(); ++i) v[i] = static_cast<int>(i);
    std::vector<int> shuffled = v;
    rng.shuffle(shuffled);
    CHECK(shuffled != v);
    std::vector<int> sorted = shuffled;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == v);

    Rng r1(7), r2(7);
    std::vector<int> a = v, b = v;
    r1.shuffle(a);
    r2.shuffle(b);
    CHECK(a == b);
}

TEST_CASE("mix64 and fnv1a64 basics") {
    CHECK(fnv1a64("") == 0xCBF29CE484222325ull);
    CHECK(fnv1a64("a") != fnv1a64("b"));
    std::set<uint64_t> outs;
    for (uint64_t i = 0; i < 1000; ++i) outs.insert(mix64(i));
    CHECK(outs.size() == 1000);
}
