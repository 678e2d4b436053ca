#pragma once

#include <cstddef>
#include <vector>

#include "gon/errors.hpp"

namespace gon {

/// Sparse interpolation weights for one evaluation point:
/// eval(x) == sum_i weight[i] * values[index[i]].
/// One entry when x sits on a keypoint or in a clamped tail, two when it
/// falls strictly inside a segment.
struct PlfWeights {
    std::size_t index[2];
    double weight[2];
    int count = 0;
};

/// Piecewise-linear function on strictly increasing keypoints. Evaluation
/// clamps to the end values outside the key range. Values are free; the
/// monotone / unimodal shape restrictions live in the constraint module.
class PiecewiseLinearFn {
public:
    PiecewiseLinearFn(std::vector<double> keys, std::vector<double> values);

    /// Clamped linear interpolation. Exact at keypoints: eval(keys[k])
    /// returns values[k] with no rounding.
    double eval(double x) const;

    double operator()(double x) const { return eval(x); }

    /// Smallest x with eval(x) == y, defined for monotone values. Picks the
    /// smallest keypoint whose value reaches y and inverts the segment to
    /// its left, so a flat run at level y maps to the run's left endpoint.
    /// Throws NotInvertibleAtValue when y is outside the value range.
    double invert_at(double y) const;

    /// Interpolation weights over values at x; at most two nonzero entries
    /// in [0, 1] summing to 1.
    PlfWeights value_weights(double x) const;

    std::size_t size() const { return keys_.size(); }
    const std::vector<double>& keys() const { return keys_; }
    const std::vector<double>& values() const { return values_; }

    double min_key() const { return keys_.front(); }
    double max_key() const { return keys_.back(); }

    void set_values(std::vector<double> values);
    void set_value(std::size_t k, double v) { values_[k] = v; }

private:
    // Segment index i in [0, K-2] and offset t in [0, 1]; clamped tails
    // report t == 0 or t == 1 on the boundary segment.
    void locate(double x, std::size_t& i, double& t) const;

    std::vector<double> keys_;
    std::vector<double> values_;
};

/// Empirical quantile of an ascending sample vector, linear interpolation
/// between order statistics with inclusive endpoints: q = 0 gives the min,
/// q = 1 the max.
double sorted_quantile(const std::vector<double>& ascending, double q);

/// Keypoint layout for a calibrator over [lo, hi]: endpoints plus count - 2
/// evenly spaced empirical quantiles of the samples. Exact collisions are
/// spread apart by eps = 1e-6 * (hi - lo) so keys stay strictly increasing.
std::vector<double> init_keys_from_quantiles(std::vector<double> samples,
                                             std::size_t count, double lo,
                                             double hi);

}  // namespace gon
