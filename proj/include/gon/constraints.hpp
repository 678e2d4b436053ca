#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gon/errors.hpp"
#include "gon/types.hpp"

namespace gon {

/// Halfspace over a flat parameter vector: sum_i coeff_i * phi[index_i] >= bound.
/// Coefficient entries are sorted by index and nonzero.
struct LinearConstraint {
    std::vector<std::pair<std::size_t, double>> coeffs;
    double bound = 0.0;

    double dot(std::span<const double> phi) const {
        double s = 0.0;
        for (const auto& [i, c] : coeffs) s += c * phi[i];
        return s;
    }

    /// Positive amount by which phi falls short of the bound, 0 if satisfied.
    double violation(std::span<const double> phi) const {
        double short_by = bound - dot(phi);
        return short_by > 0.0 ? short_by : 0.0;
    }
};

/// Ordered collection of halfspaces. add() drops zero coefficients and
/// discards constraints that reduce to 0 >= bound with bound <= 0.
class ConstraintSet {
public:
    void add(LinearConstraint c);
    void merge(const ConstraintSet& other);

    /// Removes exact duplicates (identical indices, coefficients, bound),
    /// keeping first occurrences in order.
    void dedup();

    std::size_t size() const { return items_.size(); }
    bool empty() const { return items_.empty(); }
    const std::vector<LinearConstraint>& items() const { return items_; }

    double max_violation(std::span<const double> phi) const;

private:
    std::vector<LinearConstraint> items_;
};

/// Assigns contiguous flat-vector ranges to named parameter blocks
/// (calibrator values, lattice parameters, mixture weights, ...). Constraint
/// generators address parameters through block offsets so one projection
/// acts on the whole model.
class ParameterLayout {
public:
    /// Registers a block and returns its id. Names must be unique.
    std::size_t add_block(std::string name, std::size_t size);

    std::size_t block_count() const { return names_.size(); }
    std::size_t offset(std::size_t block) const { return offsets_[block]; }
    std::size_t size_of(std::size_t block) const { return sizes_[block]; }
    const std::string& name(std::size_t block) const { return names_[block]; }
    std::optional<std::size_t> find(std::string_view name) const;

    /// Total flat vector length.
    std::size_t total() const { return total_; }

private:
    std::vector<std::string> names_;
    std::vector<std::size_t> offsets_;
    std::vector<std::size_t> sizes_;
    std::size_t total_ = 0;
};

/// Monotone chain with range bounds for one value block of size K:
/// v[k+1] - v[k] >= margin for each adjacent pair, v[0] >= lower and
/// v[K-1] <= upper. K + 1 constraints.
ConstraintSet monotone_range_constraints(const ParameterLayout& layout,
                                         std::size_t block, double lower,
                                         double upper, double margin);

/// Unimodal shape for one value block of odd size K: values rise by at
/// least margin up to the middle index, then fall by at least margin.
/// K - 1 constraints.
ConstraintSet unimodal_plf_constraints(const ParameterLayout& layout,
                                       std::size_t block, double margin);

/// Unimodality of a lattice block with the given odd per-dimension sizes,
/// as the full family of vertex difference constraints: for every vertex v
/// and every choice of side per dimension whose neighbors exist,
///     sum_d (theta[v - (1-delta_d) e_d] - theta[v + delta_d e_d]) * v[d] >= 0.
/// Candidates whose coefficients all cancel are dropped and exact
/// duplicates are deduplicated. raw_candidates, when non-null, receives
/// the pre-pruning candidate count.
ConstraintSet unimodal_lattice_constraints(const ParameterLayout& layout,
                                           std::size_t block,
                                           const std::vector<int>& sizes,
                                           std::size_t* raw_candidates = nullptr);

/// Componentwise bounds on a block; non-finite bounds are skipped, so a
/// one-sided box emits one constraint per entry.
ConstraintSet box_constraints(const ParameterLayout& layout, std::size_t block,
                              double lower, double upper);

struct ProjectionResult {
    std::vector<double> phi;
    std::size_t sweeps = 0;
    double max_violation = 0.0;
    bool converged = false;
};

/// Dykstra's alternating projection onto the intersection of halfspaces.
/// Runs up to max_sweeps full passes, stopping after any pass that both
/// left the maximum violation at most tol and moved the iterate by at most
/// tol. Run to convergence this is the Euclidean projection; a feasible
/// input is returned unchanged.
ProjectionResult project_dykstra(std::vector<double> phi,
                                 const ConstraintSet& constraints,
                                 std::size_t max_sweeps, double tol);

struct RayViolation {
    std::size_t ray;
    std::size_t step;
    double increase;
};

struct RayReport {
    std::vector<RayViolation> violations;
    std::size_t rays = 0;
    std::size_t steps = 0;
    double max_increase = 0.0;

    bool ok() const { return violations.empty(); }
};

using ScalarField = std::function<double(std::span<const double>)>;

/// Walks each supplied direction from the origin to the domain boundary in
/// `steps` equal increments and records every adjacent increase above tol.
/// A function that is non-increasing along all rays from 0 produces no
/// violations.
RayReport check_rays_from_origin(const ScalarField& fn, const Box& domain,
                                 const std::vector<std::vector<double>>& directions,
                                 std::size_t steps, double tol);

/// check_rays_from_origin over `rays` random directions (uniform on the
/// sphere, seeded).
RayReport verify_unimodal_by_rays(const ScalarField& fn, const Box& domain,
                                  std::size_t rays, std::size_t steps,
                                  double tol, std::uint64_t seed);

}  // namespace gon
