#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <sstream>
#include <utility>
#include <vector>

#include "cubal/errors.hpp"

namespace cubal {

/// Position inside the index cube {1..m}^3 together with its flattening.
///
/// The flattening is row-major and fixed once for the whole library:
///   value = (i-1)*m^2 + (j-1)*m + (k-1) + 1,   value in {1..m^3}.
/// Serialized data, structure-tensor entries and group tables all use this
/// 1-based flat numbering.
struct FlatIndex {
    int value = 1;
    int i = 1, j = 1, k = 1;

    static FlatIndex from_triple(int m, int i, int j, int k) {
        check_dim(m);
        if (i < 1 || i > m || j < 1 || j > m || k < 1 || k > m) {
            std::ostringstream os;
            os << "index (" << i << "," << j << "," << k << ") out of range for m=" << m;
            throw DimensionError(os.str());
        }
        return FlatIndex{(i - 1) * m * m + (j - 1) * m + (k - 1) + 1, i, j, k};
    }

    static FlatIndex from_value(int m, int value) {
        check_dim(m);
        if (value < 1 || value > m * m * m) {
            std::ostringstream os;
            os << "flat index " << value << " out of range for m=" << m;
            throw DimensionError(os.str());
        }
        const int z = value - 1;
        return FlatIndex{value, z / (m * m) + 1, (z / m) % m + 1, z % m + 1};
    }

  private:
    static void check_dim(int m) {
        if (m < 1) throw DimensionError("dimension must be >= 1, got " + std::to_string(m));
    }
};

/// Dense m x m x m array of real structural constants.
///
/// Value type with entrywise arithmetic; indices are 1-based to match the
/// usual structural-constant notation. Entries are expected to stay finite;
/// boundary code (deserialization, user-supplied function families) checks
/// this via is_finite().
class CubicMatrix {
  public:
    explicit CubicMatrix(int m) : dim_(m) {
        if (m < 1) throw DimensionError("dimension must be >= 1, got " + std::to_string(m));
        entries_.assign(static_cast<std::size_t>(m) * m * m, 0.0);
    }

    static CubicMatrix zero(int m) { return CubicMatrix(m); }

    static CubicMatrix basis(int m, int i, int j, int k) {
        CubicMatrix e(m);
        e.entries_[static_cast<std::size_t>(FlatIndex::from_triple(m, i, j, k).value) - 1] = 1.0;
        return e;
    }

    int dim() const { return dim_; }
    int size() const { return static_cast<int>(entries_.size()); }

    double& operator()(int i, int j, int k) { return entries_[offset(i, j, k)]; }
    double operator()(int i, int j, int k) const { return entries_[offset(i, j, k)]; }

    /// Access by 1-based flat index.
    double& flat(int value) { return entries_[flat_offset(value)]; }
    double flat(int value) const { return entries_[flat_offset(value)]; }

    std::span<const double> data() const { return entries_; }
    std::span<double> data() { return entries_; }

    bool is_finite() const {
        for (double v : entries_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    CubicMatrix& operator+=(const CubicMatrix& other) {
        require_same_dim(other);
        for (std::size_t n = 0; n < entries_.size(); ++n) entries_[n] += other.entries_[n];
        return *this;
    }

    CubicMatrix& operator-=(const CubicMatrix& other) {
        require_same_dim(other);
        for (std::size_t n = 0; n < entries_.size(); ++n) entries_[n] -= other.entries_[n];
        return *this;
    }

    CubicMatrix& operator*=(double lambda) {
        for (double& v : entries_) v *= lambda;
        return *this;
    }

    friend CubicMatrix operator+(CubicMatrix a, const CubicMatrix& b) { return a += b; }
    friend CubicMatrix operator-(CubicMatrix a, const CubicMatrix& b) { return a -= b; }
    friend CubicMatrix operator*(double lambda, CubicMatrix a) { return a *= lambda; }
    friend CubicMatrix operator*(CubicMatrix a, double lambda) { return a *= lambda; }
    friend CubicMatrix operator-(CubicMatrix a) { return a *= -1.0; }

  private:
    std::size_t offset(int i, int j, int k) const {
        return static_cast<std::size_t>(FlatIndex::from_triple(dim_, i, j, k).value) - 1;
    }
    std::size_t flat_offset(int value) const {
        return static_cast<std::size_t>(FlatIndex::from_value(dim_, value).value) - 1;
    }
    void require_same_dim(const CubicMatrix& other) const {
        if (dim_ != other.dim_)
            throw DimensionError("cubic matrix dimensions differ: " + std::to_string(dim_) +
                                 " vs " + std::to_string(other.dim_));
    }

    int dim_;
    std::vector<double> entries_;
};

inline double norm_l1(const CubicMatrix& a) {
    double s = 0.0;
    for (double v : a.data()) s += std::abs(v);
    return s;
}

inline double max_abs(const CubicMatrix& a) {
    double s = 0.0;
    for (double v : a.data()) s = std::max(s, std::abs(v));
    return s;
}

/// Entrywise comparison within an absolute tolerance; tol 0 means exact.
inline bool approx_equal(const CubicMatrix& a, const CubicMatrix& b, double tol) {
    if (a.dim() != b.dim()) return false;
    for (int n = 0; n < a.size(); ++n) {
        const double d = std::abs(a.data()[n] - b.data()[n]);
        if (d > tol) return false;
        if (tol == 0.0 && d != 0.0) return false;
    }
    return true;
}

/// Uniform [-1,1] entries from the given generator; handy for sampling-based
/// checks that need reproducible matrices.
inline CubicMatrix random_cubic(int m, std::mt19937_64& rng) {
    CubicMatrix q(m);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& v : q.data()) v = u(rng);
    return q;
}

} // namespace cubal
