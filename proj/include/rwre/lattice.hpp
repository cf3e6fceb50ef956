#ifndef RWRE_LATTICE_HPP
#define RWRE_LATTICE_HPP

#include <array>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rwre/prf.hpp"

namespace rwre {

inline constexpr int kMaxDims = 4;

// Coordinates are addressable within +-2^40; beyond that is an error,
// never wraparound.
inline constexpr std::int64_t kMaxCoord = std::int64_t{1} << 40;

/// A lattice vector in Z^d, d <= kMaxDims.
struct Vec {
    int dims = 0;
    std::array<std::int64_t, kMaxDims> c{};

    Vec() = default;

    explicit Vec(int d) : dims(d)
    {
        if (d < 1 || d > kMaxDims)
            throw std::invalid_argument("Vec: dims must be in [1, " +
                                        std::to_string(kMaxDims) + "]");
    }

    Vec(std::initializer_list<std::int64_t> xs) : dims(static_cast<int>(xs.size()))
    {
        if (dims < 1 || dims > kMaxDims)
            throw std::invalid_argument("Vec: bad initializer size");
        int i = 0;
        for (auto x : xs) c[static_cast<std::size_t>(i++)] = x;
    }

    std::int64_t operator[](int i) const { return c[static_cast<std::size_t>(i)]; }
    std::int64_t& operator[](int i) { return c[static_cast<std::size_t>(i)]; }

    bool is_zero() const
    {
        for (int i = 0; i < dims; ++i)
            if (c[static_cast<std::size_t>(i)] != 0) return false;
        return true;
    }

    friend Vec operator+(const Vec& a, const Vec& b)
    {
        Vec r(a.dims);
        for (int i = 0; i < a.dims; ++i) r[i] = a[i] + b[i];
        return r;
    }
    friend Vec operator-(const Vec& a, const Vec& b)
    {
        Vec r(a.dims);
        for (int i = 0; i < a.dims; ++i) r[i] = a[i] - b[i];
        return r;
    }
    friend Vec operator-(const Vec& a)
    {
        Vec r(a.dims);
        for (int i = 0; i < a.dims; ++i) r[i] = -a[i];
        return r;
    }
    friend bool operator==(const Vec& a, const Vec& b)
    {
        if (a.dims != b.dims) return false;
        for (int i = 0; i < a.dims; ++i)
            if (a[i] != b[i]) return false;
        return true;
    }
    friend bool operator!=(const Vec& a, const Vec& b) { return !(a == b); }
    // Lexicographic order; fixes all displacement enumeration orders.
    friend bool operator<(const Vec& a, const Vec& b)
    {
        for (int i = 0; i < a.dims; ++i) {
            if (a[i] != b[i]) return a[i] < b[i];
        }
        return false;
    }
};

inline Vec zero_vec(int dims) { return Vec(dims); }

inline Vec unit_vec(int dims, int axis)
{
    Vec r(dims);
    r[axis] = 1;
    return r;
}

inline void check_addressable(const Vec& v)
{
    for (int i = 0; i < v.dims; ++i) {
        if (v[i] > kMaxCoord || v[i] < -kMaxCoord)
            throw std::out_of_range("lattice coordinate exceeds addressable range (+-2^40)");
    }
}

struct VecHash {
    std::size_t operator()(const Vec& v) const noexcept
    {
        std::uint64_t h = prf::mix64(static_cast<std::uint64_t>(v.dims));
        for (int i = 0; i < v.dims; ++i)
            h = prf::combine(h, static_cast<std::uint64_t>(v[i]));
        return static_cast<std::size_t>(h);
    }
};

/// The finite displacement set Lambda = {d_1, ..., d_N} with its indexing.
struct JumpSet {
    int dims = 0;
    std::vector<Vec> displacements;

    int size() const { return static_cast<int>(displacements.size()); }
    const Vec& operator[](int i) const { return displacements[static_cast<std::size_t>(i)]; }

    int index_of(const Vec& d) const
    {
        for (int i = 0; i < size(); ++i)
            if (displacements[static_cast<std::size_t>(i)] == d) return i;
        return -1;
    }

    void validate() const
    {
        if (dims < 1 || dims > kMaxDims)
            throw std::invalid_argument("JumpSet: bad dims");
        if (size() < 2)
            throw std::invalid_argument("JumpSet: need at least 2 displacements");
        for (int i = 0; i < size(); ++i) {
            if (displacements[static_cast<std::size_t>(i)].dims != dims)
                throw std::invalid_argument("JumpSet: displacement dims mismatch");
            for (int j = i + 1; j < size(); ++j)
                if ((*this)[i] == (*this)[j])
                    throw std::invalid_argument("JumpSet: duplicate displacement");
        }
    }
};

} // namespace rwre

#endif // RWRE_LATTICE_HPP
