#include "gon/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gon {

namespace {
constexpr double kDomainSlack = 1e-9;
constexpr std::size_t kMaxStackDims = 32;
}  // namespace

Lattice::Lattice(std::vector<int> sizes, std::vector<double> params)
    : sizes_(std::move(sizes)) {
    if (sizes_.empty()) throw InvalidRange("lattice needs at least 1 dimension");
    std::size_t count = 1;
    for (int v : sizes_) {
        if (v < 2) throw InvalidRange("lattice sizes must be at least 2");
        count *= static_cast<std::size_t>(v);
    }
    lower_.resize(sizes_.size());
    upper_.resize(sizes_.size());
    for (std::size_t d = 0; d < sizes_.size(); ++d) {
        lower_[d] = -((sizes_[d] - 1) / 2);
        upper_[d] = (sizes_[d]) / 2;  // ceil((V-1)/2)
    }
    strides_.assign(sizes_.size(), 1);
    for (std::size_t d = sizes_.size() - 1; d > 0; --d) {
        strides_[d - 1] = strides_[d] * static_cast<std::size_t>(sizes_[d]);
    }
    if (params.empty()) {
        params_.assign(count, 0.0);
    } else {
        if (params.size() != count) {
            throw InvalidRange("parameter count does not match lattice sizes");
        }
        params_ = std::move(params);
    }
}

void Lattice::set_params(std::vector<double> params) {
    if (params.size() != params_.size()) {
        throw InvalidRange("parameter count does not match lattice sizes");
    }
    params_ = std::move(params);
}

std::size_t Lattice::flat_index(std::span<const int> vertex) const {
    if (vertex.size() != sizes_.size()) {
        throw InvalidArity("vertex arity does not match lattice dimensions");
    }
    std::size_t idx = 0;
    for (std::size_t d = 0; d < sizes_.size(); ++d) {
        if (vertex[d] < lower_[d] || vertex[d] > upper_[d]) {
            std::ostringstream msg;
            msg << "vertex coordinate " << vertex[d] << " outside ["
                << lower_[d] << ", " << upper_[d] << "] in dimension " << d;
            throw OutOfDomain(msg.str());
        }
        idx += static_cast<std::size_t>(vertex[d] - lower_[d]) * strides_[d];
    }
    return idx;
}

void Lattice::cell_of(std::span<const double> x, int* base, double* frac) const {
    if (x.size() != sizes_.size()) {
        throw InvalidArity("point arity does not match lattice dimensions");
    }
    for (std::size_t d = 0; d < sizes_.size(); ++d) {
        double lo = static_cast<double>(lower_[d]);
        double hi = static_cast<double>(upper_[d]);
        double v = x[d];
        if (v < lo - kDomainSlack || v > hi + kDomainSlack) {
            std::ostringstream msg;
            msg << "coordinate " << v << " outside [" << lo << ", " << hi
                << "] in dimension " << d;
            throw OutOfDomain(msg.str());
        }
        v = std::clamp(v, lo, hi);
        // Integer points take the cell above, except the upper boundary
        // which takes the cell below so a full cell exists.
        int b = static_cast<int>(std::floor(v));
        b = std::clamp(b, lower_[d], upper_[d] - 1);
        base[d] = b;
        frac[d] = v - static_cast<double>(b);
    }
}

VertexWeights Lattice::neighbor_cell(std::span<const double> x) const {
    const std::size_t n = sizes_.size();
    VertexWeights cell;
    cell.base.resize(n);
    std::vector<double> frac(n);
    cell_of(x, cell.base.data(), frac.data());

    std::size_t base_flat = 0;
    for (std::size_t d = 0; d < n; ++d) {
        base_flat +=
            static_cast<std::size_t>(cell.base[d] - lower_[d]) * strides_[d];
    }
    const std::size_t corners = std::size_t{1} << n;
    cell.flat.resize(corners);
    cell.weight.resize(corners);
    for (std::size_t m = 0; m < corners; ++m) {
        double w = 1.0;
        std::size_t idx = base_flat;
        for (std::size_t d = 0; d < n; ++d) {
            if ((m >> d) & 1u) {
                w *= frac[d];
                idx += strides_[d];
            } else {
                w *= 1.0 - frac[d];
            }
        }
        cell.flat[m] = idx;
        cell.weight[m] = w;
    }
    return cell;
}

double Lattice::eval(std::span<const double> x) const {
    const std::size_t n = sizes_.size();
    int base_small[kMaxStackDims];
    double frac_small[kMaxStackDims];
    std::vector<int> base_big;
    std::vector<double> frac_big;
    int* base = base_small;
    double* frac = frac_small;
    if (n > kMaxStackDims) {
        base_big.resize(n);
        frac_big.resize(n);
        base = base_big.data();
        frac = frac_big.data();
    }
    cell_of(x, base, frac);

    std::size_t base_flat = 0;
    for (std::size_t d = 0; d < n; ++d) {
        base_flat += static_cast<std::size_t>(base[d] - lower_[d]) * strides_[d];
    }
    double sum = 0.0;
    const std::size_t corners = std::size_t{1} << n;
    for (std::size_t m = 0; m < corners; ++m) {
        double w = 1.0;
        std::size_t idx = base_flat;
        for (std::size_t d = 0; d < n; ++d) {
            if ((m >> d) & 1u) {
                w *= frac[d];
                idx += strides_[d];
            } else {
                w *= 1.0 - frac[d];
            }
        }
        sum += w * params_[idx];
    }
    return sum;
}

double Lattice::input_partial(std::span<const double> x, std::size_t d) const {
    if (d >= sizes_.size()) {
        throw InvalidArity("derivative dimension out of range");
    }
    VertexWeights cell = neighbor_cell(x);
    const std::size_t bit = std::size_t{1} << d;
    double sum = 0.0;
    for (std::size_t m = 0; m < cell.flat.size(); ++m) {
        sum += cell.weight[m] *
               (params_[cell.flat[m | bit]] - params_[cell.flat[m & ~bit]]);
    }
    return sum;
}

std::vector<double> Lattice::clamp_to_domain(std::vector<double> x) const {
    if (x.size() != sizes_.size()) {
        throw InvalidArity("point arity does not match lattice dimensions");
    }
    for (std::size_t d = 0; d < x.size(); ++d) {
        x[d] = std::clamp(x[d], static_cast<double>(lower_[d]),
                          static_cast<double>(upper_[d]));
    }
    return x;
}

}  // namespace gon
