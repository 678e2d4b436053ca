#pragma once

#include <cstddef>
#include <vector>

namespace gon {

/// Axis-aligned box, lo[d] <= x[d] <= hi[d].
struct Box {
    std::vector<double> lo;
    std::vector<double> hi;

    std::size_t dims() const { return lo.size(); }

    bool contains(const std::vector<double>& x, double slack = 0.0) const {
        for (std::size_t d = 0; d < lo.size(); ++d) {
            if (x[d] < lo[d] - slack || x[d] > hi[d] + slack) return false;
        }
        return true;
    }

    static Box cube(std::size_t dims, double lo, double hi) {
        return Box{std::vector<double>(dims, lo), std::vector<double>(dims, hi)};
    }
};

}  // namespace gon
