#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "gon/model.hpp"
#include "gon/rng.hpp"

using gon::CgonModel;
using gon::GonModel;
using gon::PiecewiseLinearFn;

namespace {

// The 3x3 lattice with a center peak whose composition with bent
// calibrators stops being unimodal: g(2,2) = 0.5 < g(3,3) = 1.
GonModel counterexample_model() {
    GonModel m;
    m.lattice_size = 3;
    m.calibrators.push_back(PiecewiseLinearFn({0.0, 1.0, 3.0},
                                              {-1.0, 0.0, 1.0}));
    m.calibrators.push_back(PiecewiseLinearFn({0.0, 2.0, 3.0},
                                              {-1.0, 1.0, 1.0}));
    gon::Lattice lat({3, 3});
    auto set = [&lat](int a, int b, double v) {
        std::vector<int> vert{a, b};
        lat.set_param(lat.flat_index(vert), v);
    };
    set(0, 0, 3.0);
    set(-1, 0, 2.0);
    set(1, 0, 2.0);
    set(0, -1, 0.0);
    set(0, 1, 0.0);
    set(-1, -1, 1.0);
    set(1, -1, 1.0);
    set(-1, 1, 1.0);
    set(1, 1, 1.0);
    m.lattices.push_back(std::move(lat));
    m.projections.push_back({0, 1});
    m.alpha0 = 0.0;
    m.alphas = {1.0};
    m.features = {"x0", "x1"};
    return m;
}

GonModel random_gon(gon::Rng& rng, std::size_t dims, std::size_t keypoints,
                    int lattice_size, std::size_t arity, std::size_t count) {
    GonModel m;
    m.lattice_size = lattice_size;
    const double v = static_cast<double>((lattice_size - 1) / 2);
    for (std::size_t d = 0; d < dims; ++d) {
        std::vector<double> keys(keypoints), values(keypoints);
        double key = rng.uniform(-4.0, -2.0);
        for (std::size_t k = 0; k < keypoints; ++k) {
            keys[k] = key;
            key += rng.uniform(0.2, 1.5);
        }
        // Strictly increasing values spanning most of [-v, v] so the zero
        // crossing exists and no calibrated point gets clamped.
        for (std::size_t k = 0; k < keypoints; ++k) {
            double t = static_cast<double>(k) /
                       static_cast<double>(keypoints - 1);
            values[k] = -0.9 * v + 1.8 * v * t + rng.uniform(-0.02, 0.02);
        }
        std::sort(values.begin(), values.end());
        m.calibrators.push_back(PiecewiseLinearFn(keys, values));
        m.features.push_back("x" + std::to_string(d));
    }
    m.projections = gon::build_random_projections(dims, arity, count,
                                                  rng.next_u64());
    for (std::size_t t = 0; t < count; ++t) {
        std::vector<int> sizes(arity, lattice_size);
        std::size_t n = 1;
        for (int s : sizes) n *= static_cast<std::size_t>(s);
        std::vector<double> params(n);
        for (auto& p : params) p = rng.uniform(-1.0, 1.0);
        m.lattices.push_back(gon::Lattice(std::move(sizes), std::move(params)));
    }
    m.alpha0 = rng.uniform(-0.5, 0.5);
    m.alphas.resize(count);
    for (auto& a : m.alphas) a = rng.uniform(0.0, 1.0);
    return m;
}

std::vector<double> random_input(gon::Rng& rng, const GonModel& m) {
    std::vector<double> x(m.dims());
    for (std::size_t d = 0; d < m.dims(); ++d) {
        x[d] = rng.uniform(m.calibrators[d].min_key(),
                           m.calibrators[d].max_key());
    }
    return x;
}

}  // namespace

TEST_CASE("composed counterexample evaluates exactly") {
    GonModel m = counterexample_model();
    std::vector<double> x{1.0, 1.0};
    CHECK(gon::gon_eval(m, x) == 3.0);
    x = {2.0, 2.0};
    CHECK(gon::gon_eval(m, x) == 0.5);
    x = {3.0, 3.0};
    CHECK(gon::gon_eval(m, x) == 1.0);
}

TEST_CASE("maximizer inverts each calibrator at zero") {
    GonModel m = counterexample_model();
    gon::Maximizer mx = gon::gon_maximizer(m);
    REQUIRE(mx.point.size() == 2);
    CHECK(mx.point[0] == 1.0);
    CHECK(mx.point[1] == 1.0);
    CHECK(mx.value == 3.0);
    CHECK(mx.inversions == 2);
}

TEST_CASE("maximizer beats dense sampling on random feasible models") {
    gon::Rng rng(2024);
    for (int rep = 0; rep < 5; ++rep) {
        std::size_t dims = 1 + rng.index(4);
        GonModel m = random_gon(rng, dims, 6, 3, std::min<std::size_t>(2, dims),
                                dims);
        // Project the lattice and mixture parameters to feasibility so the
        // peak-at-zero argument applies.
        gon::ConstraintSet cs = gon::build_constraints(m, 0.0);
        gon::ProjectionResult pr =
            gon::project_dykstra(gon::get_params(m), cs, 20000, 1e-12);
        REQUIRE(pr.converged);
        gon::set_params(m, pr.phi);

        gon::Maximizer mx = gon::gon_maximizer(m);
        CHECK(mx.inversions == dims);
        double best = -1e300;
        for (int probe = 0; probe < 20000; ++probe) {
            std::vector<double> x = random_input(rng, m);
            best = std::max(best, gon::gon_eval(m, x));
        }
        CHECK(mx.value >= best - 1e-9);
    }
}

TEST_CASE("maximizer requires zero in the calibrator range") {
    GonModel m = counterexample_model();
    m.calibrators[0].set_values({0.5, 0.7, 1.0});
    CHECK_THROWS_AS(gon::gon_maximizer(m), gon::NotInvertibleAtValue);
}

TEST_CASE("conditional evaluation averages the offset in") {
    CgonModel m;
    m.core = counterexample_model();
    m.cond_features = {"z0"};
    // One conditional input shifting both dimensions by constant 0.5.
    m.r_calibrators.push_back({PiecewiseLinearFn({0.0, 1.0}, {0.5, 0.5}),
                               PiecewiseLinearFn({0.0, 1.0}, {0.5, 0.5})});
    std::vector<double> x{1.0, 1.0};
    std::vector<double> z{0.3};
    // Calibrated point (0,0) moves to ((0+0.5)/2, (0+0.5)/2).
    std::vector<double> shifted{0.25, 0.25};
    CHECK(gon::cgon_eval(m, x, z) ==
          doctest::Approx(gon::ensemble_eval(m.core, shifted)));
}

TEST_CASE("conditional maximizer inverts at the negated offset") {
    CgonModel m;
    m.core = counterexample_model();
    m.cond_features = {"z0"};
    m.r_calibrators.push_back({PiecewiseLinearFn({0.0, 1.0}, {0.0, 0.5}),
                               PiecewiseLinearFn({0.0, 1.0}, {0.0, -0.5})});
    std::vector<double> z{1.0};
    gon::Maximizer mx = gon::cgon_maximizer(m, z);
    REQUIRE(mx.point.size() == 2);
    // c_1 hits -0.5 at x = 0.5, c_2 hits +0.5 at x = 1.5.
    CHECK(mx.point[0] == doctest::Approx(0.5));
    CHECK(mx.point[1] == doctest::Approx(1.5));
    CHECK(mx.inversions == 2);
    // At the extracted point the averaged calibrated coordinates vanish.
    std::vector<double> origin{0.0, 0.0};
    CHECK(gon::cgon_eval(m, mx.point, z) ==
          doctest::Approx(gon::ensemble_eval(m.core, origin)));
}

TEST_CASE("conditional maximizer names the out-of-range dimension") {
    CgonModel m;
    m.core = counterexample_model();
    m.cond_features = {"z0"};
    // Offset 3 in dimension 1 pushes the target outside [-1, 1].
    m.r_calibrators.push_back({PiecewiseLinearFn({0.0, 1.0}, {0.0, 0.0}),
                               PiecewiseLinearFn({0.0, 1.0}, {3.0, 3.0})});
    std::vector<double> z{0.5};
    try {
        gon::cgon_maximizer(m, z);
        FAIL("expected ConditionalMaximizerOutOfRange");
    } catch (const gon::ConditionalMaximizerOutOfRange& e) {
        CHECK(e.dim() == 1);
    }
}

TEST_CASE("backward matches finite differences") {
    gon::Rng rng(99);
    const double h = 1e-6;
    for (int rep = 0; rep < 6; ++rep) {
        std::size_t dims = 1 + rng.index(3);
        std::size_t arity = 1 + rng.index(std::min<std::size_t>(2, dims));
        GonModel m = random_gon(rng, dims, 5, 3, arity, dims);
        gon::ParameterLayout layout = gon::make_layout(m);
        for (int probe = 0; probe < 25; ++probe) {
            std::vector<double> x = random_input(rng, m);
            double upstream = rng.uniform(0.5, 2.0);
            std::vector<double> grad(layout.total(), 0.0);
            gon::gon_backward(m, x, upstream, grad);
            std::vector<double> phi = gon::get_params(m);
            for (std::size_t i = 0; i < phi.size(); ++i) {
                GonModel probe_model = m;
                std::vector<double> bumped = phi;
                bumped[i] = phi[i] + h;
                gon::set_params(probe_model, bumped);
                double up = gon::gon_eval(probe_model, x);
                bumped[i] = phi[i] - h;
                gon::set_params(probe_model, bumped);
                double down = gon::gon_eval(probe_model, x);
                double fd = upstream * (up - down) / (2.0 * h);
                CHECK(grad[i] ==
                      doctest::Approx(fd).epsilon(1e-5).scale(1.0));
            }
        }
    }
}

TEST_CASE("backward accumulates into the gradient buffer") {
    gon::Rng rng(7);
    GonModel m = random_gon(rng, 2, 4, 3, 2, 2);
    gon::ParameterLayout layout = gon::make_layout(m);
    std::vector<double> x = random_input(rng, m);
    std::vector<double> once(layout.total(), 0.0);
    gon::gon_backward(m, x, 1.0, once);
    std::vector<double> twice(layout.total(), 0.0);
    gon::gon_backward(m, x, 1.0, twice);
    gon::gon_backward(m, x, 1.0, twice);
    for (std::size_t i = 0; i < once.size(); ++i) {
        CHECK(twice[i] == doctest::Approx(2.0 * once[i]));
    }
    std::vector<double> small(layout.total() - 1, 0.0);
    CHECK_THROWS_AS(gon::gon_backward(m, x, 1.0, small), gon::InvalidArity);
}

TEST_CASE("conditional backward matches finite differences") {
    gon::Rng rng(123);
    const double h = 1e-6;
    for (int rep = 0; rep < 4; ++rep) {
        CgonModel m;
        std::size_t dims = 1 + rng.index(2);
        m.core = random_gon(rng, dims, 4, 3, 1, dims);
        std::size_t cond = 1 + rng.index(2);
        for (std::size_t i = 0; i < cond; ++i) {
            std::vector<PiecewiseLinearFn> row;
            for (std::size_t d = 0; d < dims; ++d) {
                row.push_back(PiecewiseLinearFn(
                    {0.0, 0.5, 1.0},
                    {rng.uniform(-0.2, 0.0), rng.uniform(-0.05, 0.05),
                     rng.uniform(0.0, 0.2)}));
            }
            m.r_calibrators.push_back(std::move(row));
            m.cond_features.push_back("z" + std::to_string(i));
        }
        gon::ParameterLayout layout = gon::make_layout(m);
        for (int probe = 0; probe < 20; ++probe) {
            std::vector<double> x = random_input(rng, m.core);
            std::vector<double> z(cond);
            for (auto& v : z) v = rng.uniform(0.0, 1.0);
            std::vector<double> grad(layout.total(), 0.0);
            gon::cgon_backward(m, x, z, 1.0, grad);
            std::vector<double> phi = gon::get_params(m);
            for (std::size_t i = 0; i < phi.size(); ++i) {
                CgonModel probe_model = m;
                std::vector<double> bumped = phi;
                bumped[i] = phi[i] + h;
                gon::set_params(probe_model, bumped);
                double up = gon::cgon_eval(probe_model, x, z);
                bumped[i] = phi[i] - h;
                gon::set_params(probe_model, bumped);
                double down = gon::cgon_eval(probe_model, x, z);
                double fd = (up - down) / (2.0 * h);
                CHECK(grad[i] ==
                      doctest::Approx(fd).epsilon(1e-5).scale(1.0));
            }
        }
    }
}

TEST_CASE("random projections cover every input") {
    gon::Rng rng(55);
    for (int rep = 0; rep < 20; ++rep) {
        std::size_t dims = 2 + rng.index(7);
        std::size_t arity = 1 + rng.index(std::min<std::size_t>(3, dims));
        std::size_t count = (dims + arity - 1) / arity + rng.index(4);
        auto lists =
            gon::build_random_projections(dims, arity, count, rng.next_u64());
        REQUIRE(lists.size() == count);
        std::set<std::size_t> covered;
        for (const auto& list : lists) {
            REQUIRE(list.size() == arity);
            CHECK(std::is_sorted(list.begin(), list.end()));
            std::set<std::size_t> unique(list.begin(), list.end());
            CHECK(unique.size() == arity);
            for (std::size_t idx : list) {
                CHECK(idx < dims);
                covered.insert(idx);
            }
        }
        CHECK(covered.size() == dims);
    }
    auto a = gon::build_random_projections(6, 2, 4, 77);
    auto b = gon::build_random_projections(6, 2, 4, 77);
    CHECK(a == b);
    CHECK_THROWS_AS(gon::build_random_projections(3, 4, 2, 0),
                    gon::InvalidArity);
    CHECK_THROWS_AS(gon::build_random_projections(8, 2, 3, 0),
                    gon::InvalidArity);
}

TEST_CASE("parameter round trip") {
    gon::Rng rng(31);
    GonModel m = random_gon(rng, 3, 5, 3, 2, 3);
    std::vector<double> phi = gon::get_params(m);
    gon::ParameterLayout layout = gon::make_layout(m);
    REQUIRE(phi.size() == layout.total());
    for (auto& v : phi) v += 0.125;
    gon::set_params(m, phi);
    std::vector<double> back = gon::get_params(m);
    CHECK(back == phi);
}

TEST_CASE("constraint system accepts a tent model and flags a broken one") {
    gon::Rng rng(13);
    GonModel m = random_gon(rng, 2, 5, 3, 2, 2);
    gon::ConstraintSet cs = gon::build_constraints(m, 0.0);
    gon::ProjectionResult pr =
        gon::project_dykstra(gon::get_params(m), cs, 20000, 1e-12);
    REQUIRE(pr.converged);
    gon::set_params(m, pr.phi);
    CHECK(cs.max_violation(gon::get_params(m)) <= 1e-10);
    // Breaking monotonicity of one calibrator is caught.
    GonModel broken = m;
    auto values = broken.calibrators[0].values();
    std::swap(values.front(), values.back());
    broken.calibrators[0].set_values(values);
    CHECK(cs.max_violation(gon::get_params(broken)) > 0.0);
    // A negative mixture weight is caught.
    GonModel negated = m;
    negated.alphas[0] = -0.5;
    CHECK(cs.max_violation(gon::get_params(negated)) > 0.0);
}

TEST_CASE("json round trip preserves the model exactly") {
    gon::Rng rng(404);
    GonModel m = random_gon(rng, 3, 4, 5, 2, 2);
    std::string text = gon::model_to_json_text(m);
    CHECK(text == gon::model_to_json_text(m));
    gon::LoadedModel loaded = gon::model_from_json_text(text);
    const auto* g = std::get_if<GonModel>(&loaded);
    REQUIRE(g != nullptr);
    CHECK(g->features == m.features);
    CHECK(g->lattice_size == m.lattice_size);
    CHECK(g->projections == m.projections);
    CHECK(g->alpha0 == m.alpha0);
    CHECK(g->alphas == m.alphas);
    for (std::size_t d = 0; d < m.dims(); ++d) {
        CHECK(g->calibrators[d].keys() == m.calibrators[d].keys());
        CHECK(g->calibrators[d].values() == m.calibrators[d].values());
    }
    for (std::size_t t = 0; t < m.lattice_count(); ++t) {
        CHECK(g->lattices[t].params() == m.lattices[t].params());
        CHECK(g->lattices[t].sizes() == m.lattices[t].sizes());
    }
    std::vector<double> x{0.0, 0.0, 0.0};
    CHECK(gon::gon_eval(*g, x) == gon::gon_eval(m, x));
}

TEST_CASE("conditional json round trip") {
    gon::Rng rng(405);
    CgonModel m;
    m.core = random_gon(rng, 2, 4, 3, 1, 2);
    m.cond_features = {"z0"};
    m.r_calibrators.push_back(
        {PiecewiseLinearFn({0.0, 1.0}, {-0.1, 0.1}),
         PiecewiseLinearFn({0.0, 1.0}, {0.2, -0.2})});
    std::string text = gon::model_to_json_text(m);
    gon::LoadedModel loaded = gon::model_from_json_text(text);
    const auto* cg = std::get_if<CgonModel>(&loaded);
    REQUIRE(cg != nullptr);
    CHECK(cg->cond_features == m.cond_features);
    REQUIRE(cg->r_calibrators.size() == 1);
    CHECK(cg->r_calibrators[0][0].values() == m.r_calibrators[0][0].values());
    std::vector<double> x{0.5, 0.5};
    std::vector<double> z{0.5};
    CHECK(gon::cgon_eval(*cg, x, z) == gon::cgon_eval(m, x, z));
}

TEST_CASE("model files are written byte for byte reproducibly") {
    gon::Rng rng(21);
    GonModel m = random_gon(rng, 2, 4, 3, 2, 2);
    const std::string path_a = "/tmp/gon_model_a.json";
    const std::string path_b = "/tmp/gon_model_b.json";
    gon::save_model(path_a, m);
    gon::save_model(path_b, m);
    std::ifstream fa(path_a, std::ios::binary);
    std::ifstream fb(path_b, std::ios::binary);
    std::string a((std::istreambuf_iterator<char>(fa)),
                  std::istreambuf_iterator<char>());
    std::string b((std::istreambuf_iterator<char>(fb)),
                  std::istreambuf_iterator<char>());
    CHECK(a == b);
    CHECK(!a.empty());
    gon::LoadedModel loaded = gon::load_model(path_a);
    CHECK(std::holds_alternative<GonModel>(loaded));
    std::remove(path_a.c_str());
    std::remove(path_b.c_str());
}

TEST_CASE("malformed model documents are rejected") {
    CHECK_THROWS_AS(gon::model_from_json_text("not json"), gon::DataError);
    CHECK_THROWS_AS(gon::model_from_json_text("[1,2]"), gon::DataError);
    CHECK_THROWS_AS(gon::model_from_json_text("{}"), gon::DataError);

    gon::Rng rng(3);
    GonModel m = random_gon(rng, 2, 4, 3, 2, 2);
    std::string text = gon::model_to_json_text(m);

    std::string wrong_version = text;
    auto at = wrong_version.find("\"format_version\": 1");
    REQUIRE(at != std::string::npos);
    wrong_version.replace(at, 19, "\"format_version\": 9");
    CHECK_THROWS_AS(gon::model_from_json_text(wrong_version), gon::DataError);

    std::string bad_kind = text;
    at = bad_kind.find("\"kind\": \"gon\"");
    REQUIRE(at != std::string::npos);
    bad_kind.replace(at, 13, "\"kind\": \"zzz\"");
    CHECK_THROWS_AS(gon::model_from_json_text(bad_kind), gon::DataError);

    CHECK_THROWS_AS(gon::load_model("/tmp/gon_no_such_file.json"),
                    gon::DataError);
}

TEST_CASE("core_of reaches through both variants") {
    gon::Rng rng(8);
    GonModel g = random_gon(rng, 2, 4, 3, 2, 2);
    gon::LoadedModel as_gon = g;
    CHECK(gon::core_of(as_gon).dims() == 2);
    CgonModel cg;
    cg.core = g;
    cg.cond_features = {"z0"};
    cg.r_calibrators.push_back({PiecewiseLinearFn({0.0, 1.0}, {0.0, 0.0}),
                                PiecewiseLinearFn({0.0, 1.0}, {0.0, 0.0})});
    gon::LoadedModel as_cgon = cg;
    CHECK(gon::core_of(as_cgon).dims() == 2);
}
