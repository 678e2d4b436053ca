#include "gon/calibrator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gon {

PiecewiseLinearFn::PiecewiseLinearFn(std::vector<double> keys,
                                     std::vector<double> values)
    : keys_(std::move(keys)), values_(std::move(values)) {
    if (keys_.size() < 2) {
        throw InvalidRange("piecewise-linear function needs at least 2 keypoints");
    }
    if (keys_.size() != values_.size()) {
        throw InvalidRange("keypoint and value counts differ");
    }
    for (std::size_t k = 0; k + 1 < keys_.size(); ++k) {
        if (!(keys_[k] < keys_[k + 1])) {
            std::ostringstream msg;
            msg << "keys must be strictly increasing, violated at index " << k;
            throw InvalidRange(msg.str());
        }
    }
    for (double k : keys_) {
        if (!std::isfinite(k)) throw InvalidRange("keys must be finite");
    }
}

void PiecewiseLinearFn::set_values(std::vector<double> values) {
    if (values.size() != keys_.size()) {
        throw InvalidRange("value count differs from keypoint count");
    }
    values_ = std::move(values);
}

void PiecewiseLinearFn::locate(double x, std::size_t& i, double& t) const {
    if (x <= keys_.front()) {
        i = 0;
        t = 0.0;
        return;
    }
    if (x >= keys_.back()) {
        i = keys_.size() - 2;
        t = 1.0;
        return;
    }
    // First key strictly greater than x; x is interior so the result is
    // in [1, K-1].
    std::size_t hi = static_cast<std::size_t>(
        std::upper_bound(keys_.begin(), keys_.end(), x) - keys_.begin());
    i = hi - 1;
    t = (x - keys_[i]) / (keys_[i + 1] - keys_[i]);
}

double PiecewiseLinearFn::eval(double x) const {
    std::size_t i;
    double t;
    locate(x, i, t);
    if (t == 0.0) return values_[i];
    if (t == 1.0) return values_[i + 1];
    return values_[i] + t * (values_[i + 1] - values_[i]);
}

PlfWeights PiecewiseLinearFn::value_weights(double x) const {
    std::size_t i;
    double t;
    locate(x, i, t);
    PlfWeights w;
    if (t == 0.0) {
        w.index[0] = i;
        w.weight[0] = 1.0;
        w.count = 1;
    } else if (t == 1.0) {
        w.index[0] = i + 1;
        w.weight[0] = 1.0;
        w.count = 1;
    } else {
        w.index[0] = i;
        w.weight[0] = 1.0 - t;
        w.index[1] = i + 1;
        w.weight[1] = t;
        w.count = 2;
    }
    return w;
}

double PiecewiseLinearFn::invert_at(double y) const {
    // Non-increasing values are inverted through negation; endpoints decide
    // the direction (interior non-monotonicity is the caller's error).
    if (values_.front() > values_.back()) {
        std::vector<double> neg(values_.size());
        for (std::size_t k = 0; k < neg.size(); ++k) neg[k] = -values_[k];
        return PiecewiseLinearFn(keys_, std::move(neg)).invert_at(-y);
    }
    if (y < values_.front() || y > values_.back()) {
        std::ostringstream msg;
        msg << "value " << y << " outside calibrator range [" << values_.front()
            << ", " << values_.back() << "]";
        throw NotInvertibleAtValue(msg.str());
    }
    // Smallest index whose value reaches y. Minimality guarantees the
    // segment to its left rises strictly, so flat runs at level y resolve
    // to their left endpoint.
    std::size_t idx = static_cast<std::size_t>(
        std::lower_bound(values_.begin(), values_.end(), y) - values_.begin());
    if (idx == 0) return keys_.front();
    double v0 = values_[idx - 1];
    double v1 = values_[idx];
    return keys_[idx - 1] + (y - v0) / (v1 - v0) * (keys_[idx] - keys_[idx - 1]);
}

double sorted_quantile(const std::vector<double>& ascending, double q) {
    if (ascending.empty()) {
        throw DegenerateInput("quantile of empty sample set");
    }
    const std::size_t n = ascending.size();
    if (q <= 0.0) return ascending.front();
    if (q >= 1.0) return ascending.back();
    double pos = q * static_cast<double>(n - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= n) return ascending.back();
    double frac = pos - static_cast<double>(lo);
    return ascending[lo] + frac * (ascending[lo + 1] - ascending[lo]);
}

std::vector<double> init_keys_from_quantiles(std::vector<double> samples,
                                             std::size_t count, double lo,
                                             double hi) {
    if (count < 2) throw InvalidRange("keypoint count must be at least 2");
    double width = hi - lo;
    if (!(width > 0.0) || !std::isfinite(width)) {
        throw DegenerateInput("keypoint domain has no width");
    }
    if (samples.empty() && count > 2) {
        throw DegenerateInput("no samples to place interior keypoints");
    }

    std::vector<double> keys;
    keys.reserve(count);
    keys.push_back(lo);
    std::sort(samples.begin(), samples.end());
    for (std::size_t j = 1; j + 1 < count; ++j) {
        double q = static_cast<double>(j) / static_cast<double>(count - 1);
        keys.push_back(std::clamp(sorted_quantile(samples, q), lo, hi));
    }
    keys.push_back(hi);

    // Spread exact collisions. Interior runs fan out symmetrically; runs
    // touching an endpoint keep the endpoint pinned and fan inward.
    const double eps = 1e-6 * width;
    std::size_t a = 0;
    while (a < keys.size()) {
        std::size_t b = a + 1;
        while (b < keys.size() && keys[b] == keys[a]) ++b;
        std::size_t m = b - a;
        if (m > 1) {
            double v = keys[a];
            for (std::size_t j = 0; j < m; ++j) {
                double jj = static_cast<double>(j);
                double mm = static_cast<double>(m);
                if (v == lo) {
                    keys[a + j] = lo + jj * eps;
                } else if (v == hi) {
                    keys[a + j] = hi - (mm - 1.0 - jj) * eps;
                } else {
                    keys[a + j] = v + (2.0 * jj + 1.0 - mm) * eps;
                }
            }
        }
        a = b;
    }

    for (std::size_t k = 0; k + 1 < keys.size(); ++k) {
        if (!(keys[k] < keys[k + 1])) {
            throw DegenerateInput(
                "sample quantiles collide too densely for distinct keypoints");
        }
    }
    return keys;
}

}  // namespace gon
