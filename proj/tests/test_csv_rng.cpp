#include <doctest.h>

#include "survaudit/csv.hpp"
#include "survaudit/rng.hpp"

using namespace survaudit;

TEST_CASE("csv parse and serialize round trip") {
    const std::string text = "# config_hash=abc\na,b,c\n1,\"x,y\",3\n,,\n";
    CsvTable t = parse_csv(text, "mem");
    CHECK(t.header == std::vector<std::string>{"a", "b", "c"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.cell(0, 1) == "x,y");
    CHECK(t.cell(1, 0).empty());

    CsvTable again = parse_csv(to_csv(t, "config_hash=abc"), "mem");
    CHECK(again.rows == t.rows);
}

TEST_CASE("csv errors") {
    CHECK_THROWS_AS(parse_csv("", "mem"), DataError);
    CHECK_THROWS_AS(parse_csv("a,b\n1\n", "mem"), DataError);
    CsvTable t = parse_csv("a,b\n1,2\n", "mem");
    CHECK(t.column_index("b") == 1);
    CHECK_THROWS_AS(t.column_index("nope"), DataError);
}

TEST_CASE("missing token convention") {
    CHECK(is_missing_token(""));
    CHECK(is_missing_token("NA"));
    CHECK(is_missing_token("nan"));
    CHECK(!is_missing_token("0"));
    CHECK(!is_missing_token("none"));
}

TEST_CASE("format_double round trips") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 1e300, 0.0, 42.0}) {
        CHECK(parse_double(format_double(v), "t") == v);
    }
}

TEST_CASE("splitmix64 streams are deterministic and disjoint") {
    SplitMix64 a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
    CHECK(derive_seed(1, "split") != derive_seed(1, "train"));
    CHECK(derive_seed(1, std::uint64_t{0}) != derive_seed(1, std::uint64_t{1}));
    CHECK(derive_seed(1, "x") == derive_seed(1, "x"));
}

TEST_CASE("next_below stays in range") {
    SplitMix64 rng(7);
    for (int i = 0; i < 1000; ++i) CHECK(rng.next_below(13) < 13);
}

TEST_CASE("deterministic shuffle is order-insensitive to seed reuse") {
    std::vector<int> v1{1, 2, 3, 4, 5, 6}, v2{1, 2, 3, 4, 5, 6};
    SplitMix64 r1(9), r2(9);
    deterministic_shuffle(v1, r1);
    deterministic_shuffle(v2, r2);
    CHECK(v1 == v2);
}

TEST_CASE("gaussian draws have sane moments") {
    SplitMix64 rng(11);
    double sum = 0, sq = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double g = rng.next_gaussian();
        sum += g;
        sq += g * g;
    }
    CHECK(std::abs(sum / n) < 0.03);
    CHECK(std::abs(sq / n - 1.0) < 0.05);
}
