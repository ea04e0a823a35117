#pragma once

// Shared test helpers: scripted draw sources, independent oracles, scratch dirs.

#include <cstdint>
#include <deque>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "step/conv.hpp"
#include "step/rng.hpp"
#include "step/tensor.hpp"

namespace step::test {

/// Replays a fixed list of draws; checks every requested range.
class ScriptedDraws {
public:
    explicit ScriptedDraws(std::vector<std::int64_t> draws) : draws_(draws.begin(), draws.end()) {}

    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        if (draws_.empty()) throw std::logic_error("scripted draws exhausted");
        const auto v = draws_.front();
        draws_.pop_front();
        if (v < lo || v > hi) throw std::logic_error("scripted draw outside requested range");
        ranges.emplace_back(lo, hi);
        return v;
    }

    std::size_t remaining() const { return draws_.size(); }
    std::vector<std::pair<std::int64_t, std::int64_t>> ranges;

private:
    std::deque<std::int64_t> draws_;
};

template <class T = float>
BasicTensor4<T> random_tensor(Shape4 s, PatternRng& rng, double scale = 1.0) {
    BasicTensor4<T> t(s);
    for (auto& v : t.data()) v = static_cast<T>(scale * (2.0 * rng.uniform01() - 1.0));
    return t;
}

/**
 * Brute-force cross-correlation: builds an explicitly zero-padded copy of the
 * input and sums over the window with plain nested loops in (channel, ky, kx)
 * order. Written without any of the library's geometry helpers.
 */
template <class T>
BasicTensor4<T> brute_force_conv(const BasicTensor4<T>& x, const std::vector<T>& w, int f, int kh, int kw,
                                 int stride, int pad) {
    const auto& s = x.shape();
    const int ph = s.h + 2 * pad, pw = s.w + 2 * pad;
    std::vector<T> padded(static_cast<std::size_t>(s.n) * s.c * ph * pw, T{0});
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            for (int y = 0; y < s.h; ++y)
                for (int xx = 0; xx < s.w; ++xx)
                    padded[((static_cast<std::size_t>(n) * s.c + c) * ph + y + pad) * pw + xx + pad] = x.at(n, c, y, xx);
    const int oh = (ph - kh) / stride + 1, ow = (pw - kw) / stride + 1;
    BasicTensor4<T> out({s.n, f, oh, ow});
    for (int n = 0; n < s.n; ++n)
        for (int fo = 0; fo < f; ++fo)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    T acc{0};
                    bool first = true;
                    for (int c = 0; c < s.c; ++c)
                        for (int ky = 0; ky < kh; ++ky)
                            for (int kx = 0; kx < kw; ++kx) {
                                const int y = oy * stride + ky, xx = ox * stride + kx;
                                const T wv = w[((static_cast<std::size_t>(fo) * s.c + c) * kh + ky) * kw + kx];
                                // Positions in the padding ring contribute nothing; skip them like the
                                // library does so the floating-point sum sees the same operands.
                                if (y < pad || y >= pad + s.h || xx < pad || xx >= pad + s.w) continue;
                                const T term = padded[((static_cast<std::size_t>(n) * s.c + c) * ph + y) * pw + xx] * wv;
                                acc = first ? term : acc + term;
                                first = false;
                            }
                    out.at(n, fo, oy, ox) = acc;
                }
    return out;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("step_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace step::test
