#pragma once

#include <cstdint>
#include <vector>

#include "crowdval/core.hpp"

namespace crowdval {

// Sobol sequence with Joe-Kuo direction numbers, generated in Gray-code
// order with the all-zeros point skipped. 32 fractional bits; identical
// output on every platform.

namespace sobol_detail {

struct JoeKuoRow {
    int s;
    int a;
    int m[7];
};

// Primitive polynomials and initial direction numbers for dimensions 2..21.
inline constexpr JoeKuoRow kJoeKuo[] = {
    {1, 0, {1}},
    {2, 1, {1, 3}},
    {3, 1, {1, 3, 1}},
    {3, 2, {1, 1, 1}},
    {4, 1, {1, 1, 3, 3}},
    {4, 4, {1, 3, 5, 13}},
    {5, 2, {1, 1, 5, 5, 17}},
    {5, 4, {1, 1, 5, 5, 5}},
    {5, 7, {1, 1, 7, 11, 19}},
    {5, 11, {1, 1, 5, 1, 1}},
    {5, 13, {1, 1, 1, 3, 11}},
    {5, 14, {1, 3, 5, 5, 31}},
    {6, 1, {1, 3, 3, 9, 7, 49}},
    {6, 13, {1, 1, 1, 15, 21, 21}},
    {6, 16, {1, 3, 1, 13, 27, 49}},
    {6, 19, {1, 1, 1, 15, 7, 5}},
    {6, 22, {1, 3, 1, 15, 13, 25}},
    {6, 25, {1, 1, 5, 5, 19, 61}},
    {7, 1, {1, 3, 7, 11, 23, 15, 103}},
    {7, 4, {1, 3, 7, 13, 13, 15, 69}},
};

constexpr int kMaxDim = 1 + static_cast<int>(sizeof(kJoeKuo) / sizeof(kJoeKuo[0]));
constexpr int kBits = 32;

/// Direction numbers v_1..v_kBits for one dimension (0-based), scaled so
/// v_k represents m_k / 2^k in the top bits of a 32-bit word.
inline std::vector<std::uint32_t> direction_numbers(int dim) {
    std::vector<std::uint32_t> v(kBits + 1, 0);
    if (dim == 0) {
        for (int k = 1; k <= kBits; ++k) {
            v[static_cast<std::size_t>(k)] = 1u << (kBits - k);
        }
        return v;
    }
    const JoeKuoRow& row = kJoeKuo[dim - 1];
    for (int k = 1; k <= row.s; ++k) {
        v[static_cast<std::size_t>(k)] = static_cast<std::uint32_t>(row.m[k - 1])
                                         << (kBits - k);
    }
    for (int k = row.s + 1; k <= kBits; ++k) {
        std::uint32_t value = v[static_cast<std::size_t>(k - row.s)] ^
                              (v[static_cast<std::size_t>(k - row.s)] >> row.s);
        for (int i = 1; i < row.s; ++i) {
            if ((row.a >> (row.s - 1 - i)) & 1) {
                value ^= v[static_cast<std::size_t>(k - i)];
            }
        }
        v[static_cast<std::size_t>(k)] = value;
    }
    return v;
}

}  // namespace sobol_detail

/// First `count` Sobol points in `dim` dimensions, row-major, each
/// coordinate in [0, 1). Point 0 of the raw sequence (all zeros) is skipped.
inline std::vector<double> sobol_points(int dim, int count) {
    if (dim < 1 || dim > sobol_detail::kMaxDim) {
        throw UnsupportedDimensionError("sobol_points: dimension " + std::to_string(dim) +
                                        " outside supported range [1, " +
                                        std::to_string(sobol_detail::kMaxDim) + "]");
    }
    if (count < 1) {
        throw InvalidInputError("sobol_points: count must be positive");
    }
    std::vector<std::vector<std::uint32_t>> dirs;
    dirs.reserve(static_cast<std::size_t>(dim));
    for (int j = 0; j < dim; ++j) {
        dirs.push_back(sobol_detail::direction_numbers(j));
    }
    std::vector<std::uint32_t> state(static_cast<std::size_t>(dim), 0);
    std::vector<double> out(static_cast<std::size_t>(count) * static_cast<std::size_t>(dim));
    for (int i = 1; i <= count; ++i) {
        // Gray-code step: flip the direction number indexed by the position
        // of the rightmost zero bit of i-1.
        int c = 1;
        for (std::uint32_t value = static_cast<std::uint32_t>(i - 1); value & 1; value >>= 1) {
            ++c;
        }
        for (int j = 0; j < dim; ++j) {
            state[static_cast<std::size_t>(j)] ^= dirs[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)];
            out[static_cast<std::size_t>(i - 1) * static_cast<std::size_t>(dim) +
                static_cast<std::size_t>(j)] =
                static_cast<double>(state[static_cast<std::size_t>(j)]) * 0x1.0p-32;
        }
    }
    return out;
}

}  // namespace crowdval
