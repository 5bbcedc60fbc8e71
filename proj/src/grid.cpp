#include "hwctl/grid.hpp"

#include <cmath>
#include <string>

#include "hwctl/errors.hpp"

namespace hwctl {

Grid Grid::make(int d, double L, double h, long long max_nodes) {
    if (d < 1) throw ConfigError("grid: d must be >= 1");
    if (!(L > 0.0) || !(h > 0.0)) throw ConfigError("grid: L and h must be > 0");
    double ratio = L / h;
    long long m = static_cast<long long>(std::llround(ratio));
    if (std::fabs(ratio - static_cast<double>(m)) > 1e-9 * std::max(1.0, ratio) || m < 1)
        throw ConfigError("grid: L/h must be a positive integer so 0 is a node");
    Grid g;
    g.d = d;
    g.L = L;
    g.h = h;
    g.npts = static_cast<int>(2 * m + 1);
    g.total = 1;
    for (int i = 0; i < d; ++i) {
        g.total *= g.npts;
        if (g.total > max_nodes)
            throw CapacityError("grid: node count " + std::to_string(g.total) + "+ exceeds cap " +
                                std::to_string(max_nodes));
    }
    return g;
}

long long Grid::index(const std::vector<int>& idx) const {
    long long k = 0;
    for (int i = 0; i < d; ++i) k = k * npts + idx[i];
    return k;
}

void Grid::unpack(long long node, std::vector<int>& idx) const {
    idx.resize(d);
    for (int i = d - 1; i >= 0; --i) {
        idx[i] = static_cast<int>(node % npts);
        node /= npts;
    }
}

Vec Grid::coords(long long node) const {
    Vec x(d);
    for (int i = d - 1; i >= 0; --i) {
        x[i] = -L + static_cast<double>(node % npts) * h;
        node /= npts;
    }
    return x;
}

long long Grid::origin() const {
    long long k = 0, mid = (npts - 1) / 2;
    for (int i = 0; i < d; ++i) k = k * npts + mid;
    return k;
}

long long Grid::stride(int dim) const {
    long long s = 1;
    for (int i = d - 1; i > dim; --i) s *= npts;
    return s;
}

}  // namespace hwctl
