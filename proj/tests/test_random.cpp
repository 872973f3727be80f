#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "aptest/random.hpp"

using namespace aptest;

TEST_CASE("identical seed and index reproduce the draw sequence exactly") {
    RandomStream a = derive_stream(42, 0);
    RandomStream b = derive_stream(42, 0);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.normal() == b.normal());
    }
}

TEST_CASE("distinct indices give distinct streams") {
    RandomStream a = derive_stream(42, 0);
    RandomStream b = derive_stream(42, 1);
    CHECK(a.normal() != b.normal());

    RandomStream c = derive_stream(42, 0);
    RandomStream d = derive_stream(43, 0);
    CHECK(c.normal() != d.normal());
}

TEST_CASE("normal draws satisfy the law of large numbers") {
    RandomStream stream = derive_stream(42, 7);
    const int n = 1000000;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        double x = stream.normal();
        sum += x;
        sum_sq += x * x;
    }
    double mean = sum / n;
    double variance = sum_sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.005);
    CHECK(std::abs(variance - 1.0) < 0.01);
}

TEST_CASE("uniform draws stay in the half-open unit interval") {
    RandomStream stream = derive_stream(7, 3);
    for (int i = 0; i < 10000; ++i) {
        double u = stream.uniform01();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("bernoulli handles degenerate probabilities") {
    RandomStream stream = derive_stream(7, 4);
    for (int i = 0; i < 1000; ++i) {
        CHECK(stream.bernoulli(1.0));
        CHECK_FALSE(stream.bernoulli(0.0));
    }
}

TEST_CASE("uniform_index covers the range") {
    RandomStream stream = derive_stream(7, 5);
    std::vector<int> seen(5, 0);
    for (int i = 0; i < 5000; ++i) {
        auto idx = stream.uniform_index(5);
        REQUIRE(idx >= 0);
        REQUIRE(idx < 5);
        seen[static_cast<std::size_t>(idx)] += 1;
    }
    for (int count : seen) {
        CHECK(count > 800);
    }
}
