#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "cubal/errors.hpp"

namespace cubal {

/// Finite group given by its Cayley table over {1..n}. The constructor
/// checks the group axioms exhaustively: associativity, a two-sided
/// identity, and a two-sided inverse for every element.
class GroupTable {
  public:
    GroupTable(int n, std::vector<int> table) : order_(n), table_(std::move(table)) {
        if (n < 1) throw DimensionError("group order must be >= 1");
        if (table_.size() != static_cast<std::size_t>(n) * n)
            throw ValidationError("group table must have n*n entries");
        for (int v : table_)
            if (v < 1 || v > n)
                throw ValidationError("group table value " + std::to_string(v) +
                                      " outside {1.." + std::to_string(n) + "}");
        for (int x = 1; x <= n; ++x)
            for (int y = 1; y <= n; ++y)
                for (int z = 1; z <= n; ++z)
                    if (op(op(x, y), z) != op(x, op(y, z))) {
                        std::ostringstream os;
                        os << "group table is not associative: witness (" << x << "," << y
                           << "," << z << ")";
                        throw ValidationError(os.str());
                    }
        identity_ = 0;
        for (int e = 1; e <= n; ++e) {
            bool ok = true;
            for (int x = 1; x <= n && ok; ++x) ok = op(e, x) == x && op(x, e) == x;
            if (ok) {
                identity_ = e;
                break;
            }
        }
        if (identity_ == 0) throw ValidationError("group table has no identity element");
        inverse_.assign(static_cast<std::size_t>(n) + 1, 0);
        for (int x = 1; x <= n; ++x) {
            for (int y = 1; y <= n; ++y)
                if (op(x, y) == identity_ && op(y, x) == identity_) {
                    inverse_[static_cast<std::size_t>(x)] = y;
                    break;
                }
            if (inverse_[static_cast<std::size_t>(x)] == 0)
                throw ValidationError("group element " + std::to_string(x) +
                                      " has no two-sided inverse");
        }
    }

    int order() const { return order_; }
    int identity() const { return identity_; }
    int inverse(int x) const { return inverse_[static_cast<std::size_t>(x)]; }

    int op(int x, int y) const {
        return table_[static_cast<std::size_t>(x - 1) * order_ + (y - 1)];
    }

    const std::vector<int>& table() const { return table_; }

    bool is_commutative() const {
        for (int x = 1; x <= order_; ++x)
            for (int y = x + 1; y <= order_; ++y)
                if (op(x, y) != op(y, x)) return false;
        return true;
    }

    bool operator==(const GroupTable& other) const {
        return order_ == other.order_ && table_ == other.table_;
    }

    /// Cyclic group Z_n on {1..n} with identity 1.
    static GroupTable cyclic(int n) {
        std::vector<int> t(static_cast<std::size_t>(n) * n);
        for (int x = 1; x <= n; ++x)
            for (int y = 1; y <= n; ++y)
                t[static_cast<std::size_t>(x - 1) * n + (y - 1)] = ((x - 1) + (y - 1)) % n + 1;
        return GroupTable(n, std::move(t));
    }

  private:
    int order_;
    std::vector<int> table_;
    int identity_ = 0;
    std::vector<int> inverse_;
};

} // namespace cubal
