#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gon/errors.hpp"

namespace gon {

/// Interpolation cell for one evaluation point: the 2^dims vertices of the
/// containing unit cell with their multilinear weights. Corner j has its
/// coordinate in dimension d raised by bit d of j, so flat[j & ~(1 << d)]
/// and flat[j | (1 << d)] are the two cell faces along d.
struct VertexWeights {
    std::vector<int> base;          // lower corner of the cell
    std::vector<std::size_t> flat;  // parameter index per corner
    std::vector<double> weight;     // multilinear weight per corner
};

/// Multilinear interpolation over a grid of integer vertices. A lattice
/// with per-dimension size V[d] has vertex coordinates in
/// [-floor((V[d]-1)/2), ceil((V[d]-1)/2)], centering odd sizes on 0.
/// Parameters are stored row-major with dimension 0 slowest.
///
/// Points on an interior integer plane belong to the cell above it, so
/// derivatives there are right-sided; on the upper boundary the cell below
/// is used instead. Evaluation outside the vertex box is an error; callers
/// that want clamping apply clamp_to_domain first.
class Lattice {
public:
    explicit Lattice(std::vector<int> sizes, std::vector<double> params = {});

    std::size_t dims() const { return sizes_.size(); }
    const std::vector<int>& sizes() const { return sizes_; }
    int lower(std::size_t d) const { return lower_[d]; }
    int upper(std::size_t d) const { return upper_[d]; }

    std::size_t param_count() const { return params_.size(); }
    const std::vector<double>& params() const { return params_; }
    void set_params(std::vector<double> params);
    void set_param(std::size_t i, double v) { params_[i] = v; }

    /// Row-major flat index of an integer vertex.
    std::size_t flat_index(std::span<const int> vertex) const;

    VertexWeights neighbor_cell(std::span<const double> x) const;

    double eval(std::span<const double> x) const;

    /// Partial derivative along dimension d, exact within the containing
    /// cell: the weighted sum over cell vertices of the parameter
    /// difference across the cell face in dimension d.
    double input_partial(std::span<const double> x, std::size_t d) const;

    /// Componentwise clamp onto the vertex box.
    std::vector<double> clamp_to_domain(std::vector<double> x) const;

private:
    // Cell lower corner and fractional offsets; throws OutOfDomain when x
    // is further than 1e-9 outside the box, clamps smaller drift.
    void cell_of(std::span<const double> x, int* base, double* frac) const;

    std::vector<int> sizes_;
    std::vector<int> lower_;
    std::vector<int> upper_;
    std::vector<std::size_t> strides_;
    std::vector<double> params_;
};

}  // namespace gon
