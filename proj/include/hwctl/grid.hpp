#pragma once

#include <cstdint>
#include <vector>

#include "hwctl/model.hpp"

namespace hwctl {

// Uniform tensor grid on [-L, L]^d with spacing h. L/h must be integral so the
// origin is a node (the ergodic solve normalizes V(0) = 0). Node ids are
// row-major with the last dimension fastest.
struct Grid {
    int d = 0;
    double L = 0.0;
    double h = 0.0;
    int npts = 0;         // per-dimension node count, 2L/h + 1 (odd)
    long long total = 0;  // npts^d

    static Grid make(int d, double L, double h, long long max_nodes = 8000000);

    long long index(const std::vector<int>& idx) const;
    void unpack(long long node, std::vector<int>& idx) const;
    Vec coords(long long node) const;
    long long origin() const;         // node id of x = 0
    long long stride(int dim) const;  // id delta for +h in dimension dim
};

}  // namespace hwctl
