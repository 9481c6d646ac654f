#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "cubal/errors.hpp"

namespace cubal {

/// Associative binary operation on I = {1..m}, given by its m x m value
/// table. Associativity is checked exhaustively at construction; a failing
/// triple is reported in the error message.
class BinaryOp {
  public:
    BinaryOp(int m, std::vector<int> table) : dim_(m), table_(std::move(table)) {
        if (m < 1) throw DimensionError("operation dimension must be >= 1");
        if (table_.size() != static_cast<std::size_t>(m) * m)
            throw ValidationError("operation table must have m*m entries");
        for (int v : table_)
            if (v < 1 || v > m)
                throw ValidationError("operation table value " + std::to_string(v) +
                                      " outside {1.." + std::to_string(m) + "}");
        for (int i = 1; i <= m; ++i)
            for (int j = 1; j <= m; ++j)
                for (int k = 1; k <= m; ++k)
                    if ((*this)((*this)(i, j), k) != (*this)(i, (*this)(j, k))) {
                        std::ostringstream os;
                        os << "operation is not associative: witness (i,j,k)=(" << i << ","
                           << j << "," << k << "), a(a(i,j),k)=" << (*this)((*this)(i, j), k)
                           << " != a(i,a(j,k))=" << (*this)(i, (*this)(j, k));
                        throw ValidationError(os.str());
                    }
    }

    int dim() const { return dim_; }

    int operator()(int i, int j) const {
        return table_[static_cast<std::size_t>(i - 1) * dim_ + (j - 1)];
    }

    const std::vector<int>& table() const { return table_; }

    bool operator==(const BinaryOp& other) const {
        return dim_ == other.dim_ && table_ == other.table_;
    }

    /// a(j,n) = j.
    static BinaryOp left_projection(int m) { return from_fn(m, [](int j, int) { return j; }); }

    /// a(j,n) = n.
    static BinaryOp right_projection(int m) { return from_fn(m, [](int, int n) { return n; }); }

    /// a(j,n) = c.
    static BinaryOp constant(int m, int c) { return from_fn(m, [c](int, int) { return c; }); }

    /// Addition in Z_m shifted to {1..m}.
    static BinaryOp cyclic(int m) {
        return from_fn(m, [m](int j, int n) { return ((j - 1) + (n - 1)) % m + 1; });
    }

    template <typename Fn> static BinaryOp from_fn(int m, Fn fn) {
        std::vector<int> t(static_cast<std::size_t>(m) * m);
        for (int i = 1; i <= m; ++i)
            for (int j = 1; j <= m; ++j) t[static_cast<std::size_t>(i - 1) * m + (j - 1)] = fn(i, j);
        return BinaryOp(m, std::move(t));
    }

  private:
    int dim_;
    std::vector<int> table_;
};

/// True when every value j in I has exactly m preimage pairs (l,n) with
/// a(l,n) = j.
inline bool is_uniformly_distributed(const BinaryOp& op) {
    const int m = op.dim();
    std::vector<int> count(static_cast<std::size_t>(m), 0);
    for (int l = 1; l <= m; ++l)
        for (int n = 1; n <= m; ++n) ++count[static_cast<std::size_t>(op(l, n)) - 1];
    for (int c : count)
        if (c != m) return false;
    return true;
}

} // namespace cubal
