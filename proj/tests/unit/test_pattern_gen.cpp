#include <algorithm>
#include <array>
#include <numeric>
#include <set>

#include "doctest.h"
#include "step/pattern_gen.hpp"
#include "support.hpp"

using namespace step;
using step::test::ScriptedDraws;

namespace {

// Reflection table built by walking the grid: (r, c) -> (h-1-r, w-1-c).
std::vector<int> reflection_table(int h, int w) {
    std::vector<int> t(static_cast<std::size_t>(h * w));
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) t[static_cast<std::size_t>(r * w + c)] = (h - 1 - r) * w + (w - 1 - c);
    return t;
}

bool is_ternary(const TernaryKernel& k) {
    return std::all_of(k.values.begin(), k.values.end(), [](std::int8_t v) { return v >= -1 && v <= 1; });
}

}  // namespace

TEST_CASE("PatternRng matches the reference splitmix64 stream") {
    PatternRng zero(0);
    CHECK(zero.next_u64() == 0xE220A8397B1DCDAFULL);
    CHECK(zero.next_u64() == 0x6E789E6AA1B965F4ULL);
    CHECK(zero.next_u64() == 0x06C45D188009454FULL);
    PatternRng other(1234567);
    CHECK(other.next_u64() == 0x599ED017FB08FC85ULL);
    CHECK(other.next_u64() == 0x2C73F08458540FA5ULL);
}

TEST_CASE("uniform_int covers inclusive endpoints and rejects empty ranges") {
    PatternRng rng(5);
    std::set<std::int64_t> seen;
    for (int i = 0; i < 2000; ++i) {
        const auto v = rng.uniform_int(1, 4);
        REQUIRE(v >= 1);
        REQUIRE(v <= 4);
        seen.insert(v);
    }
    CHECK(seen == std::set<std::int64_t>{1, 2, 3, 4});
    CHECK(rng.uniform_int(7, 7) == 7);
    CHECK_THROWS_AS(rng.uniform_int(2, 1), ContractError);

    const std::array<int, 3> set{-1, 0, 1};
    std::set<int> drawn;
    for (int i = 0; i < 300; ++i) drawn.insert(rng.from_set<int>(set));
    CHECK(drawn.size() == 3);
}

TEST_CASE("same seed gives the same stream") {
    PatternRng a(99), b(99);
    for (int i = 0; i < 100; ++i) REQUIRE(a.uniform_int(-5, 5) == b.uniform_int(-5, 5));
}

TEST_CASE("mirror_index") {
    CHECK(mirror_index(0, 3, 3) == 8);
    CHECK(mirror_index(4, 3, 3) == 4);
    CHECK(mirror_index(2, 5, 5) == 22);

    for (auto [h, w] : {std::pair{3, 3}, {5, 5}, {3, 5}, {7, 1}, {4, 6}}) {
        const auto table = reflection_table(h, w);
        for (int i = 0; i < h * w; ++i) {
            REQUIRE(mirror_index(i, h, w) == table[static_cast<std::size_t>(i)]);
            REQUIRE(mirror_index(mirror_index(i, h, w), h, w) == i);
        }
    }
    CHECK(reflection_table(5, 5)[2] == 22);
    CHECK_THROWS_AS(mirror_index(9, 3, 3), ContractError);
    CHECK_THROWS_AS(mirror_index(-1, 3, 3), ContractError);
}

TEST_CASE("CS-LBP with scripted draws") {
    SUBCASE("length 0 gives an all-zero kernel") {
        ScriptedDraws d({0});
        const auto k = gen_cslbp_kernel(3, 3, d);
        CHECK(std::all_of(k.values.begin(), k.values.end(), [](auto v) { return v == 0; }));
        REQUIRE(d.ranges.size() == 1);
        CHECK(d.ranges[0] == std::pair<std::int64_t, std::int64_t>{0, 4});
    }
    SUBCASE("one pair with sign +1") {
        ScriptedDraws d({1, 1});
        CsLbpParams p;
        const auto k = gen_cslbp_kernel(3, 3, d, &p);
        const std::vector<std::int8_t> expected{1, 0, 0, 0, 0, 0, 0, 0, -1};
        CHECK(k.values == expected);
        CHECK(p.num_pairs == 4);
        CHECK(p.length == 1);
        CHECK(p.pair_signs == std::vector<std::int8_t>{1});
        CHECK(d.ranges[1] == std::pair<std::int64_t, std::int64_t>{-1, 1});
    }
    SUBCASE("dead pair from a zero sign is kept") {
        ScriptedDraws d({2, 0, -1});
        const auto k = gen_cslbp_kernel(3, 3, d);
        const std::vector<std::int8_t> expected{0, -1, 0, 0, 0, 0, 0, 1, 0};
        CHECK(k.values == expected);
    }
    SUBCASE("length bound is min(4, floor(hw/2))") {
        ScriptedDraws d3({0});
        gen_cslbp_kernel(3, 1, d3);
        CHECK(d3.ranges[0].second == 1);
        ScriptedDraws d5({0});
        gen_cslbp_kernel(5, 5, d5);
        CHECK(d5.ranges[0].second == 4);
        ScriptedDraws d1({0});
        gen_cslbp_kernel(1, 1, d1);
        CHECK(d1.ranges[0].second == 0);
    }
    SUBCASE("even sizes are rejected") {
        PatternRng rng(1);
        CHECK_THROWS_AS(gen_cslbp_kernel(4, 3, rng), ShapeError);
        CHECK_THROWS_AS(gen_cslbp_kernel(3, 2, rng), ShapeError);
    }
}

TEST_CASE("CS-LBP antisymmetry, zero center and zero sum over 1000 seeds") {
    for (int size : {3, 5}) {
        const auto table = reflection_table(size, size);
        for (std::uint64_t seed = 0; seed < 1000; ++seed) {
            PatternRng rng(seed);
            CsLbpParams p;
            const auto k = gen_cslbp_kernel(size, size, rng, &p);
            REQUIRE(is_ternary(k));
            for (int i = 0; i < size * size; ++i) {
                REQUIRE(k.values[static_cast<std::size_t>(i)] == -k.values[static_cast<std::size_t>(table[static_cast<std::size_t>(i)])]);
            }
            REQUIRE(k.at(size / 2, size / 2) == 0);
            REQUIRE(std::accumulate(k.values.begin(), k.values.end(), 0) == 0);
            REQUIRE(p.length <= std::min(4, size * size / 2));
            REQUIRE(static_cast<int>(p.pair_signs.size()) == p.length);
        }
    }
}

TEST_CASE("Haar with scripted draws") {
    SUBCASE("single full-cover rectangle") {
        // r, then row, col, ext_h, ext_w, sign draw (1 -> +1)
        ScriptedDraws d({1, 0, 0, 4, 4, 1});
        const auto k = gen_haar_kernel(5, 5, d);
        CHECK(std::all_of(k.values.begin(), k.values.end(), [](auto v) { return v == 1; }));
        CHECK(d.remaining() == 0);
    }
    SUBCASE("second rectangle overwrites the top two rows") {
        ScriptedDraws d({2, 0, 0, 4, 4, 1, 0, 0, 1, 4, 0});
        HaarParams p;
        const auto k = gen_haar_kernel(5, 5, d, &p);
        for (int r = 0; r < 5; ++r)
            for (int c = 0; c < 5; ++c) CHECK(k.at(r, c) == (r < 2 ? -1 : 1));
        REQUIRE(p.rects.size() == 2);
        CHECK(p.rects[1] == HaarRect{0, 0, 1, 4, -1});
    }
    SUBCASE("overhang is clamped, zero extent is a one-cell strip") {
        ScriptedDraws d({1, 2, 1, 0, 2, 0});
        const auto k = gen_haar_kernel(3, 3, d);
        const std::vector<std::int8_t> expected{0, 0, 0, 0, 0, 0, 0, -1, -1};
        CHECK(k.values == expected);
    }
    SUBCASE("draw ranges follow the kernel size") {
        ScriptedDraws d({1, 0, 0, 0, 0, 0});
        gen_haar_kernel(3, 7, d);
        using R = std::pair<std::int64_t, std::int64_t>;
        CHECK(d.ranges == std::vector<R>{{1, 4}, {0, 2}, {0, 6}, {0, 2}, {0, 6}, {0, 1}});
    }
    SUBCASE("non-positive sizes are rejected") {
        PatternRng rng(1);
        CHECK_THROWS_AS(gen_haar_kernel(0, 3, rng), ShapeError);
        CHECK_THROWS_AS(gen_haar_kernel(3, -1, rng), ShapeError);
    }
}

TEST_CASE("Haar kernels are ternary and replay from their rectangles") {
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        PatternRng rng(seed);
        HaarParams p;
        const auto k = gen_haar_kernel(5, 5, rng, &p);
        REQUIRE(is_ternary(k));
        REQUIRE(p.rects.size() >= 1);
        REQUIRE(p.rects.size() <= 4);
        // Independent replay: paint each rectangle cell by cell.
        std::vector<std::int8_t> grid(25, 0);
        for (const auto& r : p.rects) {
            REQUIRE((r.sign == 1 || r.sign == -1));
            for (int y = r.row; y <= r.row + r.ext_h && y < 5; ++y)
                for (int x = r.col; x <= r.col + r.ext_w && x < 5; ++x) grid[static_cast<std::size_t>(y * 5 + x)] = r.sign;
        }
        REQUIRE(grid == k.values);
        REQUIRE(render_haar(5, 5, p) == k);
    }
}

TEST_CASE("random binary kernels") {
    PatternRng a(42), b(42);
    const auto k = gen_random_binary_kernel(3, 3, a);
    CHECK(k.size() == 9);
    CHECK(std::count(k.values.begin(), k.values.end(), std::int8_t{0}) == 0);
    CHECK(gen_random_binary_kernel(3, 3, b) == k);

    PatternRng rng(2024);
    int plus = 0, total = 0;
    while (total < 10000) {
        const auto kk = gen_random_binary_kernel(10, 10, rng);
        for (auto v : kk.values) {
            REQUIRE((v == 1 || v == -1));
            plus += v == 1;
            ++total;
        }
    }
    const double frac = static_cast<double>(plus) / total;
    CHECK(frac >= 0.47);
    CHECK(frac <= 0.53);
    CHECK_THROWS_AS(gen_random_binary_kernel(0, 1, rng), ShapeError);
}

TEST_CASE("filter banks match golden values from an independent implementation") {
    const auto cs = gen_filter_bank({3, 3, 1, 4}, Family::CsLbp, 7);
    const std::vector<std::int8_t> cs_expected{0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, -1,
                                               0, 1, 0, -1, 0, 1, 0, -1, 0, 1, -1, 0, 0, 0, 0, 0, 1, -1};
    CHECK(std::vector<std::int8_t>(cs.values().begin(), cs.values().end()) == cs_expected);

    const auto haar = gen_filter_bank({3, 3, 1, 2}, Family::Haar, 1);
    const std::vector<std::int8_t> haar_expected{0, 0, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 0, -1, 0, 1, -1, -1};
    CHECK(std::vector<std::int8_t>(haar.values().begin(), haar.values().end()) == haar_expected);

    const auto bin = gen_filter_bank({3, 3, 1, 1}, Family::RandomBinary, 42);
    const std::vector<std::int8_t> bin_expected{-1, 1, -1, 1, -1, -1, -1, 1, -1};
    CHECK(std::vector<std::int8_t>(bin.values().begin(), bin.values().end()) == bin_expected);
}

TEST_CASE("filter bank determinism, layout and metadata") {
    const auto a = gen_filter_bank({3, 3, 1, 4}, Family::CsLbp, 7);
    const auto b = gen_filter_bank({3, 3, 1, 4}, Family::CsLbp, 7);
    CHECK(a.same_weights(b));
    CHECK(a.recipes() == b.recipes());
    CHECK(a.seed() == 7);
    CHECK(a.family() == Family::CsLbp);

    const auto h = gen_filter_bank({3, 3, 2, 8}, Family::Haar, 1);
    CHECK(h.shape().kernel_count() == 16);
    CHECK(h.recipes().size() == 16);
    for (int f = 0; f < 8; ++f)
        for (int c = 0; c < 2; ++c) {
            const auto k = h.kernel(f, c);
            REQUIRE(is_ternary(k));
            REQUIRE(render_haar(3, 3, std::get<HaarParams>(h.recipes()[static_cast<std::size_t>(f * 2 + c)])) == k);
            REQUIRE(k.at(1, 2) == h.at(f, c, 1, 2));
        }

    // Kernels come out filter-major then channel, all from one generator.
    PatternRng rng(derive_bank_seed(1, Family::Haar, 0));
    for (int i = 0; i < 16; ++i) REQUIRE(gen_haar_kernel(3, 3, rng) == h.kernel(i / 2, i % 2));

    CHECK_FALSE(gen_filter_bank({3, 3, 1, 4}, Family::CsLbp, 7, 1).same_weights(a));
    CHECK_FALSE(gen_filter_bank({3, 3, 1, 4}, Family::CsLbp, 8).same_weights(a));
    CHECK_THROWS_AS(gen_filter_bank({4, 4, 1, 1}, Family::CsLbp, 0), ShapeError);
    CHECK_THROWS_AS(gen_filter_bank({3, 3, 0, 1}, Family::Haar, 0), ShapeError);
}

TEST_CASE("CS-LBP bank sparsity is at least one ninth") {
    const auto bank = gen_filter_bank({3, 3, 16, 32}, Family::CsLbp, 0);
    CHECK(sparsity(bank) >= 1.0 / 9.0);
    for (int f = 0; f < 32; ++f)
        for (int c = 0; c < 16; ++c) REQUIRE(bank.at(f, c, 1, 1) == 0);
    CHECK(sparsity(gen_filter_bank({3, 3, 4, 4}, Family::RandomBinary, 3)) == 0.0);
}

TEST_CASE("family names round-trip") {
    for (auto f : {Family::CsLbp, Family::Haar, Family::RandomBinary}) CHECK(parse_family(family_name(f)) == f);
    CHECK_THROWS_AS(parse_family("sobel"), ContractError);
}
