#pragma once

// JSON (de)serialization for the file formats spoken by the CLI.
//
// Channel file:
//   { "spec": {"K": int, "users": [{"M":int,"N":int,"d":int}, ...]},
//     "seed": int|null,
//     "cross": {"i,j": {"rows":int,"cols":int,"re":[...],"im":[...]}, ...},
//     "direct": {"i": {...}, ...} }
// Matrix entries are row-major. The strategy file mirrors the matrix format:
//   { "U": [matrix, ...], "V": [matrix, ...] }  (arrays ordered by user)

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ia/core.hpp"
#include "ia/feasibility.hpp"
#include "ia/schubert.hpp"
#include "ia/verify.hpp"

namespace ia {

using Json = nlohmann::json;

inline Json matrix_to_json(const Matrix& m) {
    Json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    std::vector<double> re, im;
    re.reserve(static_cast<std::size_t>(m.size()));
    im.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            re.push_back(m(r, c).real());
            im.push_back(m(r, c).imag());
        }
    j["re"] = re;
    j["im"] = im;
    return j;
}

inline Matrix matrix_from_json(const Json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto re = j.at("re").get<std::vector<double>>();
    const auto im = j.at("im").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(re.size()) != rows * cols || re.size() != im.size())
        throw ShapeMismatch("matrix JSON: entry arrays do not match rows*cols");
    Matrix m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c, ++k) m(r, c) = Complex(re[k], im[k]);
    return m;
}

inline Json spec_to_json(const ProblemSpec& spec) {
    Json users = Json::array();
    for (const auto& u : spec.users) users.push_back({{"M", u.M}, {"N", u.N}, {"d", u.d}});
    return Json{{"K", spec.K}, {"users", users}};
}

inline ProblemSpec spec_from_json(const Json& j) {
    ProblemSpec spec;
    spec.K = j.at("K").get<int>();
    for (const auto& u : j.at("users"))
        spec.users.push_back(
            UserDims{u.at("M").get<int>(), u.at("N").get<int>(), u.at("d").get<int>()});
    spec.validate();
    return spec;
}

inline Json channels_to_json(const ChannelSet& ch) {
    Json j;
    j["spec"] = spec_to_json(ch.spec);
    j["seed"] = ch.seed ? Json(*ch.seed) : Json(nullptr);
    Json cross = Json::object();
    for (const auto& [key, m] : ch.cross)
        cross[std::to_string(key.first) + "," + std::to_string(key.second)] = matrix_to_json(m);
    j["cross"] = cross;
    Json direct = Json::object();
    for (const auto& [i, m] : ch.direct) direct[std::to_string(i)] = matrix_to_json(m);
    j["direct"] = direct;
    return j;
}

inline ChannelSet channels_from_json(const Json& j) {
    ChannelSet ch;
    ch.spec = spec_from_json(j.at("spec"));
    if (j.contains("seed") && !j.at("seed").is_null())
        ch.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& [key, m] : j.at("cross").items()) {
        const auto comma = key.find(',');
        if (comma == std::string::npos)
            throw ShapeMismatch("cross channel key must look like \"i,j\"");
        const int i = std::stoi(key.substr(0, comma));
        const int jj = std::stoi(key.substr(comma + 1));
        ch.cross[{i, jj}] = matrix_from_json(m);
    }
    if (j.contains("direct"))
        for (const auto& [key, m] : j.at("direct").items())
            ch.direct[std::stoi(key)] = matrix_from_json(m);
    ch.validate();
    return ch;
}

inline Json strategy_to_json(const Strategy& s) {
    Json u = Json::array(), v = Json::array();
    for (const auto& m : s.U) u.push_back(matrix_to_json(m));
    for (const auto& m : s.V) v.push_back(matrix_to_json(m));
    return Json{{"U", u}, {"V", v}};
}

inline Strategy strategy_from_json(const Json& j) {
    Strategy s;
    for (const auto& m : j.at("U")) s.U.push_back(matrix_from_json(m));
    for (const auto& m : j.at("V")) s.V.push_back(matrix_from_json(m));
    return s;
}

inline Json certificate_to_json(const Certificate& c) {
    Json j{{"condition", c.condition}, {"value", c.value}};
    if (!c.users.empty()) j["users"] = c.users;
    return j;
}

inline Json verdict_to_json(const FeasibilityVerdict& v) {
    Json j;
    j["status"] = to_string(v.status);
    j["dimension"] = v.dimension ? Json(*v.dimension) : Json(nullptr);
    Json certs = Json::array();
    for (const auto& c : v.certificates) certs.push_back(certificate_to_json(c));
    j["certificates"] = certs;
    return j;
}

inline Json report_to_json(const VerificationReport& r) {
    Json pairs = Json::object();
    for (const auto& [key, res] : r.pair_residuals)
        pairs[std::to_string(key.first) + "," + std::to_string(key.second)] = res;
    Json direct = Json::array();
    for (bool b : r.direct_rank_ok) direct.push_back(b);
    return Json{{"passed", r.passed},
                {"tol", r.tol},
                {"max_orthogonality_residual", r.max_orthogonality_residual},
                {"pair_residuals", pairs},
                {"dims_ok", r.dims_ok},
                {"direct_rank_ok", direct}};
}

inline Json partition_to_json(const Partition& p) { return Json(p.parts()); }

inline Json witness_to_json(const Witness& w) {
    Json choices = Json::array();
    for (const auto& c : w.choices)
        choices.push_back({{"receiver", c.receiver},
                           {"transmitter", c.transmitter},
                           {"tx_partition", partition_to_json(c.tx)},
                           {"rx_partition", partition_to_json(c.rx)}});
    Json factors = Json::array();
    for (std::size_t f = 0; f < w.factor_classes.size(); ++f) {
        Json terms = Json::array();
        for (const auto& [p, coeff] : w.factor_classes[f])
            terms.push_back({{"partition", partition_to_json(p)}, {"coeff", coeff.str()}});
        const int k = static_cast<int>(f);
        factors.push_back({{"factor", k < w.K ? "U" + std::to_string(k + 1)
                                              : "V" + std::to_string(k - w.K + 1)},
                           {"class", terms}});
    }
    return Json{{"K", w.K},           {"d", w.d},
                {"N", w.N},           {"verified", w.verified},
                {"choices", choices}, {"factor_classes", factors}};
}

inline Json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    Json j;
    in >> j;
    return j;
}

inline void save_json(const std::string& path, const Json& j, int indent = 2) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(indent) << "\n";
}

}  // namespace ia
