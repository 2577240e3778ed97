#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "incompat/hierarchy.hpp"
#include "incompat/multicopy.hpp"
#include "incompat/simgrid.hpp"
#include "incompat/structures.hpp"

namespace incompat {

using Json = nlohmann::ordered_json;

/// Matrices travel as nested arrays of [re, im] pairs, row-major.
inline Json matrix_to_json(const CMatrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            row.push_back(Json::array({m(i, j).real(), m(i, j).imag()}));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline CMatrix matrix_from_json(const Json& j) {
    if (!j.is_array() || j.empty()) throw std::invalid_argument("matrix JSON: expected rows");
    const std::size_t nrows = j.size();
    const std::size_t ncols = j.at(0).size();
    CMatrix m(static_cast<Eigen::Index>(nrows), static_cast<Eigen::Index>(ncols));
    for (std::size_t i = 0; i < nrows; ++i) {
        const Json& row = j.at(i);
        if (row.size() != ncols) throw std::invalid_argument("matrix JSON: ragged rows");
        for (std::size_t k = 0; k < ncols; ++k) {
            const Json& entry = row.at(k);
            if (!entry.is_array() || entry.size() != 2) {
                throw std::invalid_argument("matrix JSON: entries must be [re, im]");
            }
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                Complex(entry.at(0).get<double>(), entry.at(1).get<double>());
        }
    }
    return m;
}

inline Json assemblage_to_json(const Assemblage& a) {
    Json j;
    j["d"] = a.dim();
    Json measurements = Json::array();
    for (int x = 0; x < a.settings(); ++x) {
        Json effects = Json::array();
        for (int out = 0; out < a.outcomes(x); ++out) {
            effects.push_back(matrix_to_json(a.effect(x, out)));
        }
        measurements.push_back(std::move(effects));
    }
    j["measurements"] = std::move(measurements);
    return j;
}

inline Assemblage assemblage_from_json(const Json& j) {
    if (!j.contains("d") || !j.contains("measurements")) {
        throw std::invalid_argument("assemblage JSON: need keys d and measurements");
    }
    const int d = j.at("d").get<int>();
    std::vector<Measurement> measurements;
    for (const Json& effects : j.at("measurements")) {
        std::vector<HermitianOp> ops;
        for (const Json& e : effects) {
            CMatrix m = matrix_from_json(e);
            if (m.rows() != d || m.cols() != d) {
                throw std::invalid_argument("assemblage JSON: effect dimension mismatch");
            }
            ops.emplace_back(std::move(m));
        }
        measurements.emplace_back(std::move(ops));
    }
    return Assemblage(std::move(measurements));
}

inline Json parent_to_json(const ParentPovm& p) {
    Json j;
    Json settings = Json::array();
    for (int s : p.settings) settings.push_back(s + 1);  // 1-based outside the library
    j["settings"] = std::move(settings);
    j["outcome_labels"] = p.outcome_labels;
    Json effects = Json::array();
    for (const auto& e : p.effects) effects.push_back(matrix_to_json(e));
    j["effects"] = std::move(effects);
    return j;
}

inline Json decomposition_to_json(const ConvexDecomposition& dec) {
    Json terms = Json::array();
    for (const auto& term : dec.terms) {
        Json t;
        Json blocks = Json::array();
        for (const auto& b : term.partition.blocks) {
            Json block = Json::array();
            for (int x : b) block.push_back(x + 1);
            blocks.push_back(std::move(block));
        }
        t["partition"] = std::move(blocks);
        t["weight"] = term.weight;
        Json parents = Json::array();
        for (const auto& p : term.block_parents) parents.push_back(parent_to_json(p));
        t["block_parents"] = std::move(parents);
        terms.push_back(std::move(t));
    }
    Json j;
    j["terms"] = std::move(terms);
    return j;
}

inline Json multicopy_parent_to_json(const MultiCopyParent& p) {
    Json j;
    j["n_copies"] = p.n_copies;
    j["copy_dim"] = p.copy_dim;
    j["outcome_labels"] = p.outcome_labels;
    Json effects = Json::array();
    for (const auto& e : p.effects) effects.push_back(matrix_to_json(e));
    j["effects"] = std::move(effects);
    return j;
}

inline Json pre_to_json(const RMatrix& probs) {
    Json rows = Json::array();
    for (Eigen::Index x = 0; x < probs.rows(); ++x) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < probs.cols(); ++c) row.push_back(probs(x, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline RMatrix pre_from_json(const Json& j) {
    if (!j.is_array() || j.empty()) throw std::invalid_argument("pre JSON: expected rows");
    const std::size_t nrows = j.size();
    const std::size_t ncols = j.at(0).size();
    RMatrix m(static_cast<Eigen::Index>(nrows), static_cast<Eigen::Index>(ncols));
    for (std::size_t x = 0; x < nrows; ++x) {
        if (j.at(x).size() != ncols) throw std::invalid_argument("pre JSON: ragged rows");
        for (std::size_t c = 0; c < ncols; ++c) {
            m(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(c)) =
                j.at(x).at(c).get<double>();
        }
    }
    return m;
}

inline Json certificate_to_json(const GridCertificate& cert) {
    Json j;
    j["step"] = cert.step;
    j["points_per_coordinate_cardinalities"] = {
        {"outcomes", cert.outcomes}, {"settings", cert.settings}, {"simulators", cert.simulators}};
    j["grid_points_evaluated"] = cert.grid_points_evaluated;
    j["nu_g_star"] = cert.nu_g_star;
    j["epsilon"] = cert.epsilon;
    j["lower_bound"] = cert.lower_bound;
    j["argmin_pre"] = pre_to_json(cert.argmin_pre);
    j["failed_points"] = cert.failed_points;
    j["valid"] = cert.valid();
    j["certifies_nonmembership"] = cert.valid() && cert.lower_bound > 0.0;
    return j;
}

inline Json entry_to_json(const ProfileEntry& e) {
    Json j;
    if (e.ok()) {
        j["eta"] = *e.eta;
    } else {
        j["eta"] = nullptr;
    }
    j["status"] = e.status;
    j["runtime_sec"] = e.runtime_sec;
    return j;
}

inline Json profile_to_json(const ThresholdProfile& p) {
    Json j;
    j["descriptor"] = p.descriptor;
    j["n"] = p.n;
    j["chain_tolerance"] = p.chain_tolerance;
    j["solve_tolerance"] = p.solve_tolerance;
    j["eta_jm"] = entry_to_json(p.jm);
    j["eta_sim_det"] = entry_to_json(p.sim_det);
    j["eta_sim_fixed"] = entry_to_json(p.sim_fixed);
    j["eta_nwise"] = entry_to_json(p.nwise);
    j["eta_ncopy"] = entry_to_json(p.ncopy);
    j["clone_bound"] = entry_to_json(p.clone);
    if (p.sim_det.ok()) j["det_witness"] = p.det_witness.to_string();
    if (p.best_pre.size() > 0) j["best_pre"] = pre_to_json(p.best_pre);
    return j;
}

inline Json fuzz_report_to_json(const FuzzReport& r) {
    Json j;
    j["d"] = r.d;
    j["m"] = r.m;
    j["k"] = r.k;
    j["n"] = r.n;
    j["count"] = r.count;
    j["seed"] = r.seed;
    j["violations"] = r.violations;
    j["inconclusive"] = r.inconclusive;
    Json profiles = Json::array();
    for (const auto& p : r.profiles) profiles.push_back(profile_to_json(p));
    j["profiles"] = std::move(profiles);
    return j;
}

}  // namespace incompat
