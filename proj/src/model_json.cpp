#include <fstream>
#include <sstream>

#include "gon/model.hpp"
#include "json.hpp"

namespace gon {

namespace {

using nlohmann::json;

json plf_to_json(const PiecewiseLinearFn& f) {
    return json{{"keys", f.keys()}, {"values", f.values()}};
}

PiecewiseLinearFn plf_from_json(const json& j) {
    return PiecewiseLinearFn(j.at("keys").get<std::vector<double>>(),
                             j.at("values").get<std::vector<double>>());
}

json core_to_json(const GonModel& m, const char* kind, std::size_t cond_dims) {
    json j;
    j["format_version"] = kFormatVersion;
    j["kind"] = kind;
    j["dims"] = m.dims();
    j["cond_dims"] = cond_dims;
    j["lattice_size"] = m.lattice_size;
    j["features"] = m.features;
    json cals = json::array();
    for (const auto& c : m.calibrators) cals.push_back(plf_to_json(c));
    j["calibrators"] = std::move(cals);
    json lats = json::array();
    for (std::size_t t = 0; t < m.lattices.size(); ++t) {
        lats.push_back(json{{"sizes", m.lattices[t].sizes()},
                            {"inputs", m.projections[t]},
                            {"params", m.lattices[t].params()}});
    }
    j["lattices"] = std::move(lats);
    j["alpha0"] = m.alpha0;
    j["alphas"] = m.alphas;
    return j;
}

void structural_check(bool ok, const char* what) {
    if (!ok) throw DataError(std::string("model file invalid: ") + what);
}

GonModel core_from_json(const json& j) {
    GonModel m;
    m.lattice_size = j.at("lattice_size").get<int>();
    structural_check(m.lattice_size >= 3, "lattice_size below 3");
    structural_check(m.lattice_size % 2 == 1, "lattice_size must be odd");
    const std::size_t dims = j.at("dims").get<std::size_t>();
    structural_check(dims >= 1, "dims below 1");
    m.features = j.at("features").get<std::vector<std::string>>();
    structural_check(m.features.size() == dims, "feature name count != dims");
    for (const auto& c : j.at("calibrators")) {
        m.calibrators.push_back(plf_from_json(c));
    }
    structural_check(m.calibrators.size() == dims, "calibrator count != dims");
    for (const auto& l : j.at("lattices")) {
        auto sizes = l.at("sizes").get<std::vector<int>>();
        auto inputs = l.at("inputs").get<std::vector<std::size_t>>();
        auto params = l.at("params").get<std::vector<double>>();
        structural_check(inputs.size() == sizes.size(),
                         "lattice inputs do not match sizes");
        std::vector<bool> seen(dims, false);
        for (std::size_t idx : inputs) {
            structural_check(idx < dims, "lattice input index out of range");
            structural_check(!seen[idx], "duplicate lattice input index");
            seen[idx] = true;
        }
        for (int s : sizes) {
            structural_check(s == m.lattice_size,
                             "lattice sizes differ from lattice_size");
        }
        m.lattices.emplace_back(std::move(sizes), std::move(params));
        m.projections.push_back(std::move(inputs));
    }
    structural_check(!m.lattices.empty(), "no lattices");
    m.alpha0 = j.at("alpha0").get<double>();
    m.alphas = j.at("alphas").get<std::vector<double>>();
    structural_check(m.alphas.size() == m.lattices.size(),
                     "alpha count != lattice count");
    return m;
}

}  // namespace

std::string model_to_json_text(const GonModel& m) {
    return core_to_json(m, "gon", 0).dump(2) + "\n";
}

std::string model_to_json_text(const CgonModel& m) {
    json j = core_to_json(m.core, "cgon", m.cond_dims());
    j["cond_features"] = m.cond_features;
    json rows = json::array();
    for (const auto& row : m.r_calibrators) {
        json cols = json::array();
        for (const auto& p : row) cols.push_back(plf_to_json(p));
        rows.push_back(std::move(cols));
    }
    j["r_calibrators"] = std::move(rows);
    return j.dump(2) + "\n";
}

LoadedModel model_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("model file is not valid JSON: ") + e.what());
    }
    try {
        structural_check(j.is_object(), "top level is not an object");
        structural_check(j.at("format_version").get<int>() == kFormatVersion,
                         "unsupported format_version");
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "gon") {
            structural_check(j.at("cond_dims").get<std::size_t>() == 0,
                             "gon model with cond_dims != 0");
            return core_from_json(j);
        }
        structural_check(kind == "cgon", "kind must be gon or cgon");
        CgonModel m;
        m.core = core_from_json(j);
        const std::size_t cond = j.at("cond_dims").get<std::size_t>();
        structural_check(cond >= 1, "cgon model with cond_dims == 0");
        m.cond_features = j.at("cond_features").get<std::vector<std::string>>();
        structural_check(m.cond_features.size() == cond,
                         "cond feature name count != cond_dims");
        for (const auto& row : j.at("r_calibrators")) {
            std::vector<PiecewiseLinearFn> cols;
            for (const auto& p : row) cols.push_back(plf_from_json(p));
            structural_check(cols.size() == m.core.dims(),
                             "offset calibrator row width != dims");
            m.r_calibrators.push_back(std::move(cols));
        }
        structural_check(m.r_calibrators.size() == cond,
                         "offset calibrator row count != cond_dims");
        return m;
    } catch (const json::exception& e) {
        throw DataError(std::string("model file invalid: ") + e.what());
    }
}

void save_model(const std::string& path, const LoadedModel& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open model file for writing: " + path);
    if (const auto* g = std::get_if<GonModel>(&m)) {
        out << model_to_json_text(*g);
    } else {
        out << model_to_json_text(std::get<CgonModel>(m));
    }
    if (!out) throw DataError("failed writing model file: " + path);
}

LoadedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return model_from_json_text(buf.str());
}

}  // namespace gon
