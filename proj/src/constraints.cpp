#include "gon/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "gon/rng.hpp"

namespace gon {

void ConstraintSet::add(LinearConstraint c) {
    auto& cs = c.coeffs;
    cs.erase(std::remove_if(cs.begin(), cs.end(),
                            [](const auto& e) { return e.second == 0.0; }),
             cs.end());
    if (cs.empty()) {
        if (c.bound > 0.0) {
            throw InvalidRange("constraint with no coefficients and positive bound");
        }
        return;
    }
    std::sort(cs.begin(), cs.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    items_.push_back(std::move(c));
}

void ConstraintSet::merge(const ConstraintSet& other) {
    items_.insert(items_.end(), other.items_.begin(), other.items_.end());
}

namespace {

// Bit-exact canonical key of a constraint.
std::string constraint_key(const LinearConstraint& c) {
    std::string key;
    key.reserve(c.coeffs.size() * 16 + 8);
    auto push = [&key](const void* p, std::size_t n) {
        key.append(static_cast<const char*>(p), n);
    };
    for (const auto& [i, v] : c.coeffs) {
        push(&i, sizeof(i));
        push(&v, sizeof(v));
    }
    push(&c.bound, sizeof(c.bound));
    return key;
}

}  // namespace

void ConstraintSet::dedup() {
    std::set<std::string> seen;
    std::vector<LinearConstraint> kept;
    kept.reserve(items_.size());
    for (auto& c : items_) {
        if (seen.insert(constraint_key(c)).second) kept.push_back(std::move(c));
    }
    items_ = std::move(kept);
}

double ConstraintSet::max_violation(std::span<const double> phi) const {
    double worst = 0.0;
    for (const auto& c : items_) worst = std::max(worst, c.violation(phi));
    return worst;
}

std::size_t ParameterLayout::add_block(std::string name, std::size_t size) {
    if (find(name)) throw InvalidRange("duplicate parameter block: " + name);
    if (size == 0) throw InvalidRange("empty parameter block: " + name);
    names_.push_back(std::move(name));
    offsets_.push_back(total_);
    sizes_.push_back(size);
    total_ += size;
    return names_.size() - 1;
}

std::optional<std::size_t> ParameterLayout::find(std::string_view name) const {
    for (std::size_t b = 0; b < names_.size(); ++b) {
        if (names_[b] == name) return b;
    }
    return std::nullopt;
}

ConstraintSet monotone_range_constraints(const ParameterLayout& layout,
                                         std::size_t block, double lower,
                                         double upper, double margin) {
    const std::size_t off = layout.offset(block);
    const std::size_t k = layout.size_of(block);
    if (k < 2) throw InvalidRange("monotone chain needs at least 2 values");
    if (!(lower <= upper)) throw InvalidRange("empty value range");
    ConstraintSet cs;
    for (std::size_t i = 0; i + 1 < k; ++i) {
        cs.add({{{off + i + 1, 1.0}, {off + i, -1.0}}, margin});
    }
    cs.add({{{off, 1.0}}, lower});
    cs.add({{{off + k - 1, -1.0}}, -upper});
    return cs;
}

ConstraintSet unimodal_plf_constraints(const ParameterLayout& layout,
                                       std::size_t block, double margin) {
    const std::size_t off = layout.offset(block);
    const std::size_t k = layout.size_of(block);
    if (k < 3) throw InvalidRange("unimodal chain needs at least 3 values");
    if (k % 2 == 0) {
        throw EvenKeypointCount("unimodal chain needs an odd value count");
    }
    const std::size_t peak = (k - 1) / 2;
    ConstraintSet cs;
    for (std::size_t i = 0; i + 1 < k; ++i) {
        if (i < peak) {
            cs.add({{{off + i + 1, 1.0}, {off + i, -1.0}}, margin});
        } else {
            cs.add({{{off + i, 1.0}, {off + i + 1, -1.0}}, margin});
        }
    }
    return cs;
}

ConstraintSet unimodal_lattice_constraints(const ParameterLayout& layout,
                                           std::size_t block,
                                           const std::vector<int>& sizes,
                                           std::size_t* raw_candidates) {
    const std::size_t dims = sizes.size();
    if (dims == 0) throw InvalidRange("lattice needs at least 1 dimension");
    if (dims >= 8 * sizeof(std::size_t)) {
        throw InvalidRange("lattice dimension too large to enumerate");
    }
    std::size_t count = 1;
    std::vector<int> low(dims), high(dims);
    std::vector<std::size_t> stride(dims, 1);
    for (int v : sizes) {
        if (v < 3) throw InvalidRange("unimodal lattice sizes must be at least 3");
        if (v % 2 == 0) {
            throw EvenLatticeSize("unimodal lattice sizes must be odd");
        }
        count *= static_cast<std::size_t>(v);
    }
    for (std::size_t d = 0; d < dims; ++d) {
        low[d] = -(sizes[d] - 1) / 2;
        high[d] = (sizes[d] - 1) / 2;
    }
    for (std::size_t d = dims - 1; d > 0; --d) {
        stride[d - 1] = stride[d] * static_cast<std::size_t>(sizes[d]);
    }
    const std::size_t off = layout.offset(block);
    if (layout.size_of(block) != count) {
        throw InvalidRange("parameter block size does not match lattice sizes");
    }

    auto flat_of = [&](const std::vector<int>& v) {
        std::size_t idx = 0;
        for (std::size_t d = 0; d < dims; ++d) {
            idx += static_cast<std::size_t>(v[d] - low[d]) * stride[d];
        }
        return off + idx;
    };

    std::size_t raw = 0;
    ConstraintSet cs;
    std::vector<int> v(dims, 0);
    for (std::size_t vi = 0; vi < count; ++vi) {
        // Decode vertex vi in row-major order, dimension 0 slowest.
        std::size_t rem = vi;
        for (std::size_t d = 0; d < dims; ++d) {
            v[d] = low[d] + static_cast<int>(rem / stride[d]);
            rem %= stride[d];
        }
        const std::size_t side_count = std::size_t{1} << dims;
        for (std::size_t delta = 0; delta < side_count; ++delta) {
            bool valid = true;
            for (std::size_t d = 0; d < dims && valid; ++d) {
                if ((delta >> d) & 1u) {
                    valid = v[d] + 1 <= high[d];
                } else {
                    valid = v[d] - 1 >= low[d];
                }
            }
            if (!valid) continue;
            ++raw;
            // Accumulate +v[d] on the lower-side vertex and -v[d] on the
            // upper-side vertex for each dimension; terms with v[d] == 0
            // or cancelling contributions drop out.
            std::map<std::size_t, double> acc;
            std::vector<int> nb = v;
            for (std::size_t d = 0; d < dims; ++d) {
                if (v[d] == 0) continue;
                const bool up = (delta >> d) & 1u;
                nb[d] = up ? v[d] : v[d] - 1;  // lower-side vertex coord
                acc[flat_of(nb)] += static_cast<double>(v[d]);
                nb[d] = up ? v[d] + 1 : v[d];  // upper-side vertex coord
                acc[flat_of(nb)] -= static_cast<double>(v[d]);
                nb[d] = v[d];
            }
            LinearConstraint c;
            for (const auto& [idx, coeff] : acc) {
                if (coeff != 0.0) c.coeffs.emplace_back(idx, coeff);
            }
            c.bound = 0.0;
            if (!c.coeffs.empty()) cs.add(std::move(c));
        }
    }
    cs.dedup();
    if (raw_candidates) *raw_candidates = raw;
    return cs;
}

ConstraintSet box_constraints(const ParameterLayout& layout, std::size_t block,
                              double lower, double upper) {
    const std::size_t off = layout.offset(block);
    const std::size_t k = layout.size_of(block);
    ConstraintSet cs;
    for (std::size_t i = 0; i < k; ++i) {
        if (std::isfinite(lower)) cs.add({{{off + i, 1.0}}, lower});
        if (std::isfinite(upper)) cs.add({{{off + i, -1.0}}, -upper});
    }
    return cs;
}

ProjectionResult project_dykstra(std::vector<double> phi,
                                 const ConstraintSet& constraints,
                                 std::size_t max_sweeps, double tol) {
    ProjectionResult result;
    const auto& items = constraints.items();
    std::vector<double> norm_sq(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        double s = 0.0;
        for (const auto& [_, c] : items[i].coeffs) s += c * c;
        norm_sq[i] = s;
    }
    // Dykstra correction for a halfspace is always a nonnegative multiple
    // of its normal, so one scalar per constraint carries the full state.
    // A feasible iterate alone does not mean the algorithm has converged
    // (corrections can keep shifting it), so stopping also requires the
    // sweep to have moved the point by at most tol.
    std::vector<double> mu(items.size(), 0.0);
    while (result.sweeps < max_sweeps) {
        double moved = 0.0;
        for (std::size_t i = 0; i < items.size(); ++i) {
            const auto& c = items[i];
            double reach = (c.bound - c.dot(phi)) / norm_sq[i];
            double mu_new = mu[i] + reach;
            if (mu_new < 0.0) mu_new = 0.0;
            double step = mu_new - mu[i];
            if (step != 0.0) {
                for (const auto& [idx, coeff] : c.coeffs) {
                    phi[idx] += step * coeff;
                }
                moved = std::max(moved,
                                 std::abs(step) * std::sqrt(norm_sq[i]));
            }
            mu[i] = mu_new;
        }
        ++result.sweeps;
        result.max_violation = constraints.max_violation(phi);
        if (result.max_violation <= tol && moved <= tol) {
            result.converged = true;
            break;
        }
    }
    result.phi = std::move(phi);
    return result;
}

RayReport check_rays_from_origin(const ScalarField& fn, const Box& domain,
                                 const std::vector<std::vector<double>>& directions,
                                 std::size_t steps, double tol) {
    const std::size_t dims = domain.dims();
    for (std::size_t d = 0; d < dims; ++d) {
        if (domain.lo[d] > 0.0 || domain.hi[d] < 0.0) {
            throw InvalidRange("ray domain must contain the origin");
        }
    }
    if (steps == 0) throw InvalidRange("ray check needs at least 1 step");

    RayReport report;
    report.rays = directions.size();
    report.steps = steps;
    std::vector<double> point(dims);
    for (std::size_t r = 0; r < directions.size(); ++r) {
        const auto& dir = directions[r];
        if (dir.size() != dims) {
            throw InvalidArity("ray direction arity does not match domain");
        }
        // Largest t with t * dir still inside the box.
        double t_max = std::numeric_limits<double>::infinity();
        for (std::size_t d = 0; d < dims; ++d) {
            if (dir[d] > 0.0) {
                t_max = std::min(t_max, domain.hi[d] / dir[d]);
            } else if (dir[d] < 0.0) {
                t_max = std::min(t_max, domain.lo[d] / dir[d]);
            }
        }
        if (!std::isfinite(t_max)) continue;  // zero direction
        double prev = 0.0;
        for (std::size_t j = 0; j <= steps; ++j) {
            double t = t_max * static_cast<double>(j) / static_cast<double>(steps);
            for (std::size_t d = 0; d < dims; ++d) point[d] = t * dir[d];
            double value = fn(point);
            if (j > 0) {
                double increase = value - prev;
                if (increase > tol) {
                    report.violations.push_back({r, j - 1, increase});
                }
                if (increase > report.max_increase) {
                    report.max_increase = increase;
                }
            }
            prev = value;
        }
    }
    return report;
}

RayReport verify_unimodal_by_rays(const ScalarField& fn, const Box& domain,
                                  std::size_t rays, std::size_t steps,
                                  double tol, std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t dims = domain.dims();
    std::vector<std::vector<double>> directions;
    directions.reserve(rays);
    while (directions.size() < rays) {
        std::vector<double> dir(dims);
        double norm_sq = 0.0;
        for (std::size_t d = 0; d < dims; ++d) {
            dir[d] = rng.normal();
            norm_sq += dir[d] * dir[d];
        }
        if (norm_sq < 1e-12) continue;
        double inv = 1.0 / std::sqrt(norm_sq);
        for (double& c : dir) c *= inv;
        directions.push_back(std::move(dir));
    }
    return check_rays_from_origin(fn, domain, directions, steps, tol);
}

}  // namespace gon
