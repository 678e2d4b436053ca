#include "gon/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gon/rng.hpp"

namespace gon {

namespace {

void check_arity(std::size_t got, std::size_t want, const char* what) {
    if (got != want) {
        std::ostringstream msg;
        msg << what << " arity " << got << " does not match model arity " << want;
        throw InvalidArity(msg.str());
    }
}

// Block start offsets of the flat parameter vector. Must agree with
// make_layout's block order.
struct FlatOffsets {
    std::vector<std::size_t> cal;
    std::vector<std::size_t> lat;
    std::size_t alpha = 0;
    std::vector<std::size_t> r;  // [cond * dims + dim]
    std::size_t total = 0;
};

FlatOffsets flat_offsets(const GonModel& m, const CgonModel* cg = nullptr) {
    FlatOffsets off;
    std::size_t at = 0;
    off.cal.reserve(m.calibrators.size());
    for (const auto& c : m.calibrators) {
        off.cal.push_back(at);
        at += c.size();
    }
    off.lat.reserve(m.lattices.size());
    for (const auto& l : m.lattices) {
        off.lat.push_back(at);
        at += l.param_count();
    }
    off.alpha = at;
    at += 1 + m.alphas.size();
    if (cg) {
        off.r.reserve(cg->cond_dims() * m.dims());
        for (const auto& row : cg->r_calibrators) {
            for (const auto& p : row) {
                off.r.push_back(at);
                at += p.size();
            }
        }
    }
    off.total = at;
    return off;
}

// Clamps the calibrated point onto [-V, V]^D; clamped[d] marks coordinates
// that actually moved, which block gradient flow.
void clamp_calibrated(const GonModel& m, std::vector<double>& point,
                      std::vector<bool>* clamped) {
    const double v = m.vertex_radius();
    if (clamped) clamped->assign(point.size(), false);
    for (std::size_t d = 0; d < point.size(); ++d) {
        if (point[d] < -v) {
            point[d] = -v;
            if (clamped) (*clamped)[d] = true;
        } else if (point[d] > v) {
            point[d] = v;
            if (clamped) (*clamped)[d] = true;
        }
    }
}

void calibrate(const GonModel& m, std::span<const double> x,
               std::vector<double>& point, std::vector<bool>* clamped) {
    check_arity(x.size(), m.dims(), "input");
    point.resize(m.dims());
    for (std::size_t d = 0; d < m.dims(); ++d) {
        point[d] = m.calibrators[d].eval(x[d]);
    }
    clamp_calibrated(m, point, clamped);
}

// r_d(z) = sum_i r_calibrators[i][d](z[i]).
void offset_of(const CgonModel& m, std::span<const double> z,
               std::vector<double>& r) {
    check_arity(z.size(), m.cond_dims(), "conditional input");
    r.assign(m.core.dims(), 0.0);
    for (std::size_t i = 0; i < m.cond_dims(); ++i) {
        for (std::size_t d = 0; d < m.core.dims(); ++d) {
            r[d] += m.r_calibrators[i][d].eval(z[i]);
        }
    }
}

void calibrate_cond(const CgonModel& m, std::span<const double> x,
                    std::span<const double> z, std::vector<double>& point,
                    std::vector<bool>* clamped) {
    check_arity(x.size(), m.core.dims(), "input");
    std::vector<double> r;
    offset_of(m, z, r);
    point.resize(m.core.dims());
    for (std::size_t d = 0; d < m.core.dims(); ++d) {
        point[d] = 0.5 * (m.core.calibrators[d].eval(x[d]) + r[d]);
    }
    clamp_calibrated(m.core, point, clamped);
}

double ensemble_at(const GonModel& m, const std::vector<double>& point) {
    double sum = m.alpha0;
    std::vector<double> local;
    for (std::size_t t = 0; t < m.lattices.size(); ++t) {
        const auto& proj = m.projections[t];
        local.resize(proj.size());
        for (std::size_t q = 0; q < proj.size(); ++q) {
            local[q] = point[proj[q]];
        }
        sum += m.alphas[t] * m.lattices[t].eval(local);
    }
    return sum;
}

}  // namespace

double gon_eval(const GonModel& m, std::span<const double> x) {
    std::vector<double> point;
    calibrate(m, x, point, nullptr);
    return ensemble_at(m, point);
}

double ensemble_eval(const GonModel& m, std::span<const double> calibrated) {
    check_arity(calibrated.size(), m.dims(), "calibrated point");
    std::vector<double> point(calibrated.begin(), calibrated.end());
    return ensemble_at(m, point);
}

Box calibrated_domain(const GonModel& m) {
    return Box::cube(m.dims(), -m.vertex_radius(), m.vertex_radius());
}

double cgon_eval(const CgonModel& m, std::span<const double> x,
                 std::span<const double> z) {
    std::vector<double> point;
    calibrate_cond(m, x, z, point, nullptr);
    return ensemble_at(m.core, point);
}

Maximizer gon_maximizer(const GonModel& m) {
    Maximizer best;
    best.point.resize(m.dims());
    for (std::size_t d = 0; d < m.dims(); ++d) {
        best.point[d] = m.calibrators[d].invert_at(0.0);
        ++best.inversions;
    }
    best.value = gon_eval(m, best.point);
    return best;
}

Maximizer cgon_maximizer(const CgonModel& m, std::span<const double> z) {
    std::vector<double> r;
    offset_of(m, z, r);
    Maximizer best;
    best.point.resize(m.core.dims());
    for (std::size_t d = 0; d < m.core.dims(); ++d) {
        const auto& cal = m.core.calibrators[d];
        double target = -r[d];
        double lo = std::min(cal.values().front(), cal.values().back());
        double hi = std::max(cal.values().front(), cal.values().back());
        if (target < lo || target > hi) {
            std::ostringstream msg;
            msg << "conditional maximizer target " << target
                << " outside calibrator range [" << lo << ", " << hi
                << "] in dimension " << d;
            throw ConditionalMaximizerOutOfRange(d, msg.str());
        }
        best.point[d] = cal.invert_at(target);
        ++best.inversions;
    }
    best.value = cgon_eval(m, best.point, z);
    return best;
}

namespace {

// Shared gradient core. When cg is non-null the calibrated point is the
// average with r(z) and value sensitivities are halved.
void backward_impl(const GonModel& m, const CgonModel* cg,
                   std::span<const double> x, std::span<const double> z,
                   double upstream, std::span<double> grad) {
    FlatOffsets off = flat_offsets(m, cg);
    if (grad.size() != off.total) {
        throw InvalidArity("gradient buffer size does not match layout");
    }
    std::vector<double> point;
    std::vector<bool> clamped;
    if (cg) {
        calibrate_cond(*cg, x, z, point, &clamped);
    } else {
        calibrate(m, x, point, &clamped);
    }

    std::vector<double> dpoint(m.dims(), 0.0);
    std::vector<double> local;
    grad[off.alpha] += upstream;
    for (std::size_t t = 0; t < m.lattices.size(); ++t) {
        const auto& proj = m.projections[t];
        local.resize(proj.size());
        for (std::size_t q = 0; q < proj.size(); ++q) {
            local[q] = point[proj[q]];
        }
        VertexWeights cell = m.lattices[t].neighbor_cell(local);
        const auto& theta = m.lattices[t].params();
        double value = 0.0;
        for (std::size_t c = 0; c < cell.flat.size(); ++c) {
            value += cell.weight[c] * theta[cell.flat[c]];
            grad[off.lat[t] + cell.flat[c]] +=
                upstream * m.alphas[t] * cell.weight[c];
        }
        grad[off.alpha + 1 + t] += upstream * value;
        for (std::size_t q = 0; q < proj.size(); ++q) {
            const std::size_t bit = std::size_t{1} << q;
            double partial = 0.0;
            for (std::size_t c = 0; c < cell.flat.size(); ++c) {
                partial += cell.weight[c] * (theta[cell.flat[c | bit]] -
                                             theta[cell.flat[c & ~bit]]);
            }
            dpoint[proj[q]] += m.alphas[t] * partial;
        }
    }

    const double scale = cg ? 0.5 : 1.0;
    for (std::size_t d = 0; d < m.dims(); ++d) {
        if (clamped[d] || dpoint[d] == 0.0) continue;
        double sens = upstream * scale * dpoint[d];
        PlfWeights w = m.calibrators[d].value_weights(x[d]);
        for (int i = 0; i < w.count; ++i) {
            grad[off.cal[d] + w.index[i]] += sens * w.weight[i];
        }
        if (cg) {
            for (std::size_t i = 0; i < cg->cond_dims(); ++i) {
                PlfWeights rw = cg->r_calibrators[i][d].value_weights(z[i]);
                for (int k = 0; k < rw.count; ++k) {
                    grad[off.r[i * m.dims() + d] + rw.index[k]] +=
                        sens * rw.weight[k];
                }
            }
        }
    }
}

}  // namespace

void gon_backward(const GonModel& m, std::span<const double> x,
                  double upstream, std::span<double> grad) {
    backward_impl(m, nullptr, x, {}, upstream, grad);
}

void cgon_backward(const CgonModel& m, std::span<const double> x,
                   std::span<const double> z, double upstream,
                   std::span<double> grad) {
    backward_impl(m.core, &m, x, z, upstream, grad);
}

std::vector<std::vector<std::size_t>> build_random_projections(
    std::size_t dims, std::size_t arity, std::size_t count,
    std::uint64_t seed) {
    if (dims == 0 || arity == 0 || count == 0) {
        throw InvalidArity("projections need positive dims, arity and count");
    }
    if (arity > dims) {
        throw InvalidArity("projection arity exceeds input dimensions");
    }
    if (arity * count < dims) {
        throw InvalidArity("projections cannot cover all inputs");
    }
    Rng rng(seed);
    std::vector<std::size_t> pool(dims);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (int attempt = 0; attempt < 1000000; ++attempt) {
        std::vector<std::vector<std::size_t>> lists;
        lists.reserve(count);
        std::vector<bool> covered(dims, false);
        for (std::size_t t = 0; t < count; ++t) {
            for (std::size_t j = 0; j < arity; ++j) {
                std::size_t k = j + rng.index(dims - j);
                std::swap(pool[j], pool[k]);
            }
            std::vector<std::size_t> take(pool.begin(),
                                          pool.begin() + static_cast<long>(arity));
            std::sort(take.begin(), take.end());
            for (std::size_t idx : take) covered[idx] = true;
            lists.push_back(std::move(take));
        }
        if (std::all_of(covered.begin(), covered.end(),
                        [](bool b) { return b; })) {
            return lists;
        }
    }
    throw InvalidArity("could not cover all inputs with random projections");
}

ParameterLayout make_layout(const GonModel& m) {
    ParameterLayout layout;
    for (std::size_t d = 0; d < m.dims(); ++d) {
        layout.add_block("cal" + std::to_string(d), m.calibrators[d].size());
    }
    for (std::size_t t = 0; t < m.lattices.size(); ++t) {
        layout.add_block("lat" + std::to_string(t),
                         m.lattices[t].param_count());
    }
    layout.add_block("alpha", 1 + m.alphas.size());
    return layout;
}

ParameterLayout make_layout(const CgonModel& m) {
    ParameterLayout layout = make_layout(m.core);
    for (std::size_t i = 0; i < m.cond_dims(); ++i) {
        for (std::size_t d = 0; d < m.core.dims(); ++d) {
            layout.add_block("r" + std::to_string(i) + "_" + std::to_string(d),
                             m.r_calibrators[i][d].size());
        }
    }
    return layout;
}

std::vector<double> get_params(const GonModel& m) {
    FlatOffsets off = flat_offsets(m);
    std::vector<double> phi(off.total);
    for (std::size_t d = 0; d < m.dims(); ++d) {
        const auto& v = m.calibrators[d].values();
        std::copy(v.begin(), v.end(), phi.begin() + static_cast<long>(off.cal[d]));
    }
    for (std::size_t t = 0; t < m.lattices.size(); ++t) {
        const auto& p = m.lattices[t].params();
        std::copy(p.begin(), p.end(), phi.begin() + static_cast<long>(off.lat[t]));
    }
    phi[off.alpha] = m.alpha0;
    std::copy(m.alphas.begin(), m.alphas.end(),
              phi.begin() + static_cast<long>(off.alpha) + 1);
    return phi;
}

std::vector<double> get_params(const CgonModel& m) {
    FlatOffsets off = flat_offsets(m.core, &m);
    std::vector<double> phi = get_params(m.core);
    phi.resize(off.total);
    for (std::size_t i = 0; i < m.cond_dims(); ++i) {
        for (std::size_t d = 0; d < m.core.dims(); ++d) {
            const auto& v = m.r_calibrators[i][d].values();
            std::copy(v.begin(), v.end(),
                      phi.begin() + static_cast<long>(off.r[i * m.core.dims() + d]));
        }
    }
    return phi;
}

void set_params(GonModel& m, std::span<const double> phi) {
    FlatOffsets off = flat_offsets(m);
    if (phi.size() < off.total) {
        throw InvalidArity("parameter vector too short for model");
    }
    for (std::size_t d = 0; d < m.dims(); ++d) {
        std::vector<double> v(phi.begin() + static_cast<long>(off.cal[d]),
                              phi.begin() + static_cast<long>(off.cal[d] +
                                                              m.calibrators[d].size()));
        m.calibrators[d].set_values(std::move(v));
    }
    for (std::size_t t = 0; t < m.lattices.size(); ++t) {
        std::vector<double> p(phi.begin() + static_cast<long>(off.lat[t]),
                              phi.begin() + static_cast<long>(off.lat[t] +
                                                              m.lattices[t].param_count()));
        m.lattices[t].set_params(std::move(p));
    }
    m.alpha0 = phi[off.alpha];
    for (std::size_t t = 0; t < m.alphas.size(); ++t) {
        m.alphas[t] = phi[off.alpha + 1 + t];
    }
}

void set_params(CgonModel& m, std::span<const double> phi) {
    FlatOffsets off = flat_offsets(m.core, &m);
    if (phi.size() != off.total) {
        throw InvalidArity("parameter vector size does not match model");
    }
    set_params(m.core, phi);
    for (std::size_t i = 0; i < m.cond_dims(); ++i) {
        for (std::size_t d = 0; d < m.core.dims(); ++d) {
            std::size_t at = off.r[i * m.core.dims() + d];
            std::vector<double> v(
                phi.begin() + static_cast<long>(at),
                phi.begin() + static_cast<long>(at + m.r_calibrators[i][d].size()));
            m.r_calibrators[i][d].set_values(std::move(v));
        }
    }
}

ConstraintSet build_constraints(const GonModel& m, double margin) {
    ParameterLayout layout = make_layout(m);
    const double v = m.vertex_radius();
    ConstraintSet cs;
    for (std::size_t d = 0; d < m.dims(); ++d) {
        cs.merge(monotone_range_constraints(layout, d, -v, v, margin));
    }
    for (std::size_t t = 0; t < m.lattices.size(); ++t) {
        cs.merge(unimodal_lattice_constraints(layout, m.dims() + t,
                                              m.lattices[t].sizes()));
    }
    const std::size_t alpha_off =
        layout.offset(m.dims() + m.lattices.size());
    for (std::size_t t = 0; t < m.alphas.size(); ++t) {
        ConstraintSet nonneg;
        nonneg.add({{{alpha_off + 1 + t, 1.0}}, 0.0});
        cs.merge(nonneg);
    }
    return cs;
}

ConstraintSet build_constraints(const CgonModel& m, double margin) {
    ParameterLayout layout = make_layout(m);
    ConstraintSet cs = build_constraints(m.core, margin);
    const double v = m.core.vertex_radius();
    const double cap = v / static_cast<double>(m.cond_dims());
    const std::size_t first_r =
        m.core.dims() + m.core.lattices.size() + 1;
    for (std::size_t b = 0; b < m.cond_dims() * m.core.dims(); ++b) {
        cs.merge(box_constraints(layout, first_r + b, -cap, cap));
    }
    return cs;
}

}  // namespace gon
