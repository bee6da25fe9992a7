#include "ncgm/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ncgm {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

ordered_json parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path + " for reading");
    try {
        return ordered_json::parse(in);
    } catch (const ordered_json::parse_error& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << text;
    if (!out) throw IoError("failed writing " + path);
}

void write_json_file(const std::string& path, const ordered_json& j) {
    write_text(path, j.dump(2) + "\n");
}

const ordered_json& require(const ordered_json& j, const std::string& key,
                            const std::string& path) {
    auto it = j.find(key);
    if (it == j.end()) throw std::invalid_argument(path + ": missing field \"" + key + "\"");
    return *it;
}

int require_int(const ordered_json& j, const std::string& key, const std::string& path) {
    const ordered_json& v = require(j, key, path);
    if (!v.is_number_integer()) {
        throw std::invalid_argument(path + ": field \"" + key + "\" must be an integer");
    }
    return v.get<int>();
}

std::vector<double> flat_matrix(const Matrix& a) {
    std::vector<double> out;
    out.reserve(a.size());
    for (int r = 0; r < a.rows(); ++r) {
        for (int c = 0; c < a.cols(); ++c) out.push_back(a(r, c));
    }
    return out;
}

Matrix matrix_from_flat(const ordered_json& v, int m, const std::string& what,
                        const std::string& path) {
    if (!v.is_array() || static_cast<int>(v.size()) != m * m) {
        std::ostringstream os;
        os << path << ": " << what << " must be a flat row-major array of " << m * m << " numbers";
        throw std::invalid_argument(os.str());
    }
    Matrix a(m, m);
    for (int r = 0; r < m; ++r) {
        for (int c = 0; c < m; ++c) {
            const ordered_json& x = v[static_cast<std::size_t>(m * r + c)];
            if (!x.is_number()) throw std::invalid_argument(path + ": " + what + " has a non-numeric entry");
            a(r, c) = x.get<double>();
        }
    }
    return a;
}

ordered_json model_json(const DoubleSidedPoly& h, const EdgeSet& edges,
                        const std::optional<DiagonalMAPoly>& a, const std::string& estimator_tag) {
    ordered_json j;
    j["m"] = h.m;
    j["n"] = h.n;
    j["p"] = a ? a->order() : 0;
    ordered_json e = ordered_json::array();
    for (const auto& [l, i] : edges.edges()) e.push_back(ordered_json::array({l, i}));
    j["edges"] = std::move(e);
    ordered_json blocks = ordered_json::array();
    for (int k = 0; k <= h.n; ++k) blocks.push_back(flat_matrix(h.block(k)));
    j["H"] = std::move(blocks);
    if (a && a->order() > 0) j["A"] = a->coeffs();
    if (!estimator_tag.empty()) j["metadata"] = ordered_json{{"estimator", estimator_tag}};
    return j;
}

ordered_json solver_report_json(const SolverReport& rep) {
    ordered_json j;
    j["objective_value"] = rep.objective_value;
    j["gradient_norm"] = rep.gradient_norm;
    j["iterations"] = rep.iterations;
    j["moment_residual"] = rep.moment_residual;
    j["positivity_margin"] = rep.positivity_margin;
    j["converged"] = rep.converged;
    j["status"] = to_string(rep.status);
    j["message"] = rep.message;
    return j;
}

ordered_json config_json(const ExperimentConfig& c) {
    ordered_json j;
    j["m"] = c.m;
    j["n"] = c.n;
    j["p"] = c.p;
    j["density"] = c.density;
    j["feasibility_target"] = c.feasibility_target;
    j["data_lengths"] = c.data_lengths;
    j["num_trials"] = c.num_trials;
    j["estimators"] = c.estimators;
    j["seed"] = c.seed;
    j["norm"] = c.norm == ErrorNorm::frobenius ? "frobenius" : "spectral";
    return j;
}

void reject_unknown_keys(const ordered_json& j, const std::vector<std::string>& known,
                         const std::string& path, const std::string& scope) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw std::invalid_argument(path + ": unknown " + scope + " key \"" + key + "\"");
        }
    }
}

}  // namespace

void write_model(const std::string& path, const NoncausalModel& model,
                 const std::string& estimator_tag) {
    write_json_file(path, model_json(model.h(), model.graph(), model.a(), estimator_tag));
}

void write_extracted_model(const std::string& path, const DoubleSidedPoly& h) {
    write_json_file(path, model_json(h, EdgeSet::full(h.m), std::nullopt, "me"));
}

ModelFile read_model_file(const std::string& path) {
    const ordered_json j = parse_file(path);
    const int m = require_int(j, "m", path);
    const int n = require_int(j, "n", path);
    const int p = require_int(j, "p", path);
    if (m < 1) throw std::invalid_argument(path + ": m must be positive");
    if (n < 0 || p < 0) throw std::invalid_argument(path + ": n and p must be nonnegative");

    const ordered_json& edges_j = require(j, "edges", path);
    if (!edges_j.is_array()) throw std::invalid_argument(path + ": edges must be an array of pairs");
    std::set<std::pair<int, int>> pairs;
    for (const ordered_json& e : edges_j) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer()) {
            throw std::invalid_argument(path + ": edges must be an array of 1-based index pairs");
        }
        pairs.insert({e[0].get<int>(), e[1].get<int>()});
    }
    EdgeSet edges(m, std::move(pairs));

    const ordered_json& blocks_j = require(j, "H", path);
    if (!blocks_j.is_array() || static_cast<int>(blocks_j.size()) != n + 1) {
        throw std::invalid_argument(path + ": H must be an array of n+1 matrices");
    }
    DoubleSidedPoly h(m, n);
    for (int k = 0; k <= n; ++k) {
        h.block(k) = matrix_from_flat(blocks_j[static_cast<std::size_t>(k)],
                                      m, "H[" + std::to_string(k) + "]", path);
    }

    std::optional<DiagonalMAPoly> a;
    if (p > 0) {
        const ordered_json& a_j = require(j, "A", path);
        if (!a_j.is_array() || static_cast<int>(a_j.size()) != m) {
            throw std::invalid_argument(path + ": A must be an array of m coefficient arrays");
        }
        std::vector<std::vector<double>> coeffs(m);
        for (int l = 0; l < m; ++l) {
            const ordered_json& row = a_j[static_cast<std::size_t>(l)];
            if (!row.is_array() || static_cast<int>(row.size()) != p) {
                throw std::invalid_argument(path + ": A[" + std::to_string(l) +
                                            "] must hold p coefficients");
            }
            coeffs[l] = row.get<std::vector<double>>();
        }
        try {
            a.emplace(m, p, std::move(coeffs));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(path + ": " + e.what());
        }
    }

    std::string estimator;
    if (auto it = j.find("metadata"); it != j.end() && it->is_object()) {
        if (auto est = it->find("estimator"); est != it->end() && est->is_string()) {
            estimator = est->get<std::string>();
        }
    }

    if (estimator != "me") {
        const std::vector<std::string> violations = validate(h, edges);
        if (!violations.empty()) {
            std::ostringstream os;
            os << path << ": " << violations.front();
            for (std::size_t i = 1; i < violations.size(); ++i) os << "; " << violations[i];
            throw std::invalid_argument(os.str());
        }
    }
    return ModelFile{std::move(h), std::move(a), std::move(edges), std::move(estimator)};
}

NoncausalModel read_model(const std::string& path) {
    ModelFile f = read_model_file(path);
    try {
        return NoncausalModel(std::move(f.h), std::move(f.edges), std::move(f.a));
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

EdgeSet read_edges(const std::string& path) {
    const ordered_json j = parse_file(path);
    const int m = require_int(j, "m", path);
    if (m < 1) throw std::invalid_argument(path + ": m must be positive");
    const ordered_json& edges_j = require(j, "edges", path);
    if (!edges_j.is_array()) throw std::invalid_argument(path + ": edges must be an array of pairs");
    std::set<std::pair<int, int>> pairs;
    for (const ordered_json& e : edges_j) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer()) {
            throw std::invalid_argument(path + ": edges must be an array of 1-based index pairs");
        }
        pairs.insert({e[0].get<int>(), e[1].get<int>()});
    }
    try {
        return EdgeSet(m, std::move(pairs));
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

void write_data_csv(const std::string& path, const Matrix& data) {
    const int m = static_cast<int>(data.rows());
    std::ostringstream os;
    for (int l = 1; l <= m; ++l) os << (l > 1 ? "," : "") << "y" << l;
    os << "\n";
    for (int t = 0; t < data.cols(); ++t) {
        for (int l = 0; l < m; ++l) os << (l > 0 ? "," : "") << format_double(data(l, t));
        os << "\n";
    }
    write_text(path, os.str());
}

Matrix read_data_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path + " for reading");
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument(path + ": empty file");
    int m = 0;
    {
        std::istringstream header(line);
        std::string cell;
        while (std::getline(header, cell, ',')) {
            ++m;
            const std::string expected = "y" + std::to_string(m);
            if (cell != expected) {
                throw std::invalid_argument(path + ": header column " + std::to_string(m) +
                                            " is \"" + cell + "\", expected \"" + expected + "\"");
            }
        }
    }
    if (m == 0) throw std::invalid_argument(path + ": no columns in header");

    std::vector<std::vector<double>> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                            ": cannot parse \"" + cell + "\" as a number");
            }
        }
        if (static_cast<int>(row.size()) != m) {
            throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": expected " +
                                        std::to_string(m) + " values, got " +
                                        std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::invalid_argument(path + ": no data rows");
    Matrix data(m, static_cast<int>(rows.size()));
    for (std::size_t t = 0; t < rows.size(); ++t) {
        for (int l = 0; l < m; ++l) data(l, static_cast<int>(t)) = rows[t][static_cast<std::size_t>(l)];
    }
    return data;
}

void write_cov(const std::string& path, const CovSequence& r) {
    ordered_json j;
    j["m"] = r.m;
    j["n"] = r.n;
    ordered_json lags = ordered_json::array();
    for (int k = 0; k <= r.n; ++k) lags.push_back(flat_matrix(r.lag(k)));
    j["lags"] = std::move(lags);
    write_json_file(path, j);
}

CovSequence read_cov(const std::string& path) {
    const ordered_json j = parse_file(path);
    const int m = require_int(j, "m", path);
    const int n = require_int(j, "n", path);
    if (m < 1 || n < 0) throw std::invalid_argument(path + ": invalid dimensions");
    const ordered_json& lags_j = require(j, "lags", path);
    if (!lags_j.is_array() || static_cast<int>(lags_j.size()) != n + 1) {
        throw std::invalid_argument(path + ": lags must be an array of n+1 matrices");
    }
    CovSequence r(m, n);
    for (int k = 0; k <= n; ++k) {
        r.lag(k) = matrix_from_flat(lags_j[static_cast<std::size_t>(k)],
                                    m, "lags[" + std::to_string(k) + "]", path);
    }
    const double scale = std::max(r.lag(0).cwiseAbs().maxCoeff(), 1e-300);
    if ((r.lag(0) - r.lag(0).transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw std::invalid_argument(path + ": R0 is not symmetric");
    }
    r.lag(0) = (0.5 * (r.lag(0) + r.lag(0).transpose())).eval();
    return r;
}

ExperimentConfig read_config(const std::string& path) {
    const ordered_json j = parse_file(path);
    if (!j.is_object()) throw std::invalid_argument(path + ": config must be a JSON object");
    reject_unknown_keys(j,
                        {"m", "n", "p", "density", "feasibility_target", "data_lengths",
                         "num_trials", "estimators", "seed", "norm", "solver", "pem"},
                        path, "config");
    ExperimentConfig c;
    auto get_int = [&](const char* key, int& out) {
        if (auto it = j.find(key); it != j.end()) {
            if (!it->is_number_integer()) {
                throw std::invalid_argument(path + ": \"" + key + "\" must be an integer");
            }
            out = it->get<int>();
        }
    };
    auto get_double = [&](const ordered_json& obj, const char* key, double& out) {
        if (auto it = obj.find(key); it != obj.end()) {
            if (!it->is_number()) {
                throw std::invalid_argument(path + ": \"" + std::string(key) + "\" must be a number");
            }
            out = it->get<double>();
        }
    };
    get_int("m", c.m);
    get_int("n", c.n);
    get_int("p", c.p);
    get_double(j, "density", c.density);
    get_double(j, "feasibility_target", c.feasibility_target);
    if (auto it = j.find("data_lengths"); it != j.end()) {
        if (!it->is_array() || it->empty()) {
            throw std::invalid_argument(path + ": \"data_lengths\" must be a non-empty array");
        }
        c.data_lengths = it->get<std::vector<int>>();
    }
    get_int("num_trials", c.num_trials);
    if (auto it = j.find("estimators"); it != j.end()) {
        if (!it->is_array() || it->empty()) {
            throw std::invalid_argument(path + ": \"estimators\" must be a non-empty array");
        }
        c.estimators = it->get<std::vector<std::string>>();
    }
    if (auto it = j.find("seed"); it != j.end()) {
        if (!it->is_number_integer()) throw std::invalid_argument(path + ": \"seed\" must be an integer");
        c.seed = it->get<std::uint64_t>();
    }
    if (auto it = j.find("norm"); it != j.end()) {
        const std::string norm = it->get<std::string>();
        if (norm == "spectral") {
            c.norm = ErrorNorm::spectral;
        } else if (norm == "frobenius") {
            c.norm = ErrorNorm::frobenius;
        } else {
            throw std::invalid_argument(path + ": \"norm\" must be \"spectral\" or \"frobenius\"");
        }
    }
    if (auto it = j.find("solver"); it != j.end()) {
        reject_unknown_keys(*it,
                            {"grid_size", "max_iterations", "gradient_tolerance",
                             "feasibility_floor", "line_search_shrink"},
                            path, "solver");
        if (auto g = it->find("grid_size"); g != it->end()) c.solver.grid_size = g->get<int>();
        if (auto g = it->find("max_iterations"); g != it->end()) c.solver.max_iterations = g->get<int>();
        get_double(*it, "gradient_tolerance", c.solver.gradient_tolerance);
        get_double(*it, "feasibility_floor", c.solver.feasibility_floor);
        get_double(*it, "line_search_shrink", c.solver.line_search_shrink);
    }
    if (auto it = j.find("pem"); it != j.end()) {
        reject_unknown_keys(*it, {"max_iterations", "tolerance", "stability_margin"}, path, "pem");
        if (auto g = it->find("max_iterations"); g != it->end()) c.pem.max_iterations = g->get<int>();
        get_double(*it, "tolerance", c.pem.tolerance);
        get_double(*it, "stability_margin", c.pem.stability_margin);
    }
    try {
        c.check();
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
    return c;
}

void write_solver_report(const std::string& path, const SolverReport& rep) {
    write_json_file(path, solver_report_json(rep));
}

void write_arma_report(const std::string& path, const ArmaReport& rep) {
    ordered_json j;
    ordered_json pem = ordered_json::array();
    for (const PemFit& fit : rep.pem) {
        ordered_json f;
        f["a"] = fit.a;
        f["c"] = fit.c;
        f["variance"] = fit.variance;
        f["iterations"] = fit.iterations;
        pem.push_back(std::move(f));
    }
    j["pem"] = std::move(pem);
    j["dual"] = solver_report_json(rep.dual);
    write_json_file(path, j);
}

void write_results_csv(const std::string& path, const std::vector<TrialResult>& results,
                       const ExperimentConfig& config) {
    std::ostringstream os;
    os << "# norm=" << (config.norm == ErrorNorm::frobenius ? "frobenius" : "spectral")
       << " me_mapping=i_minus_phi_invsqrt seed=" << config.seed << "\n";
    os << "trial,estimator,N,relative_error,converged\n";
    for (const TrialResult& row : results) {
        os << row.trial << "," << row.estimator << "," << row.data_length << ","
           << format_double(row.relative_error) << "," << (row.converged ? 1 : 0) << "\n";
    }
    write_text(path, os.str());
}

void write_summary_json(const std::string& path, const McResult& mc,
                        const ExperimentConfig& config) {
    ordered_json j;
    j["config"] = config_json(config);
    j["me_mapping"] = "i_minus_phi_invsqrt";
    ordered_json cells = ordered_json::array();
    for (const SummaryEntry& e : mc.summary) {
        ordered_json cell;
        cell["estimator"] = e.estimator;
        cell["N"] = e.data_length;
        cell["converged"] = e.converged_count;
        cell["total"] = e.total;
        if (e.converged_count > 0) {
            cell["median"] = e.median;
            cell["q1"] = e.q1;
            cell["q3"] = e.q3;
        }
        cells.push_back(std::move(cell));
    }
    j["summary"] = std::move(cells);
    write_json_file(path, j);
}

}  // namespace ncgm
