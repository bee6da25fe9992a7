#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <unistd.h>
#include <fstream>
#include <json.hpp>
#include <string>

#include "ncgm/experiments.hpp"
#include "ncgm/io.hpp"
#include "ncgm/simulate.hpp"
#include "ncgm/te_solver.hpp"

using namespace ncgm;

namespace {

/// Temporary directory shared by the cases in this file, wiped on exit.
struct TempDir {
    std::filesystem::path root;
    TempDir() {
        root = std::filesystem::temp_directory_path() /
               ("ncgm_io_test_" + std::to_string(::getpid()));
        std::filesystem::create_directories(root);
    }
    ~TempDir() { std::filesystem::remove_all(root); }
    std::string operator/(const std::string& name) const { return (root / name).string(); }
};

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    return nlohmann::json::parse(in);
}

void dump_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

}  // namespace

TEST_CASE("model files round-trip bitwise") {
    TempDir tmp;
    const NoncausalModel model = random_arma(4, 2, 1, 0.6, 0.85, 77);
    const std::string path = tmp / "model.json";
    write_model(path, model);

    const NoncausalModel back = read_model(path);
    REQUIRE(back.h().blocks.size() == model.h().blocks.size());
    for (int k = 0; k <= 2; ++k) {
        CHECK((back.h().block(k).array() == model.h().block(k).array()).all());
    }
    REQUIRE(back.a().has_value());
    for (int l = 0; l < 4; ++l) {
        CHECK(back.a()->channel(l) == model.a()->channel(l));
    }
    CHECK(back.graph().edges() == model.graph().edges());

    const EdgeSet edges = read_edges(path);
    CHECK(edges.edges() == model.graph().edges());
}

TEST_CASE("model json carries an estimator tag only when one is given") {
    TempDir tmp;
    const NoncausalModel model = random_model(3, 1, 1.0, 0.8, 5);
    const std::string plain = tmp / "plain.json";
    const std::string tagged = tmp / "tagged.json";
    write_model(plain, model);
    write_model(tagged, model, "te");

    CHECK(!load_json(plain).contains("metadata"));
    CHECK(load_json(tagged)["metadata"]["estimator"] == "te");
    const auto j = load_json(tagged);
    CHECK(!j.contains("A"));
    CHECK(j["p"] == 0);
}

TEST_CASE("reading a hand-tampered model enforces structure by name") {
    TempDir tmp;
    const NoncausalModel model = random_model(3, 1, 1.0, 0.8, 6);
    const std::string path = tmp / "model.json";
    write_model(path, model);

    auto j = load_json(path);
    j["H"][0][0] = 0.3;  // nonzero diagonal in the lag-0 block
    dump_text(path, j.dump(2) + "\n");
    CHECK_THROWS_WITH_AS(read_model(path), doctest::Contains("diagonal"), std::invalid_argument);

    write_model(path, model);
    j = load_json(path);
    j["H"][0][1] = 0.9;  // breaks lag-0 symmetry
    dump_text(path, j.dump(2) + "\n");
    CHECK_THROWS_WITH_AS(read_model(path), doctest::Contains("symmetric"), std::invalid_argument);
}

TEST_CASE("smoothing-extraction output skips the structural checks") {
    TempDir tmp;
    // A dense polynomial with nonzero diagonals, as the spectrum-inversion
    // mapping produces. The relaxed reader must accept it.
    DoubleSidedPoly h(2, 1);
    h.block(0) << 0.05, 0.2, 0.2, -0.03;
    h.block(1) << 0.1, 0.04, -0.02, 0.08;
    const std::string path = tmp / "me.json";
    write_extracted_model(path, h);

    const ModelFile file = read_model_file(path);
    CHECK(file.estimator == "me");
    CHECK((file.h.block(0).array() == h.block(0).array()).all());
    CHECK((file.h.block(1).array() == h.block(1).array()).all());
    // The strict single-model reader refuses the same file.
    CHECK_THROWS_AS(read_model(path), std::invalid_argument);
}

TEST_CASE("data csv round-trips exactly and reports malformed input by line") {
    TempDir tmp;
    const NoncausalModel model = random_model(3, 1, 1.0, 0.8, 11);
    const Matrix data = sample_trajectory(model, 40, 1234);
    const std::string path = tmp / "data.csv";
    write_data_csv(path, data);
    const Matrix back = read_data_csv(path);
    REQUIRE(back.rows() == data.rows());
    REQUIRE(back.cols() == data.cols());
    CHECK((back.array() == data.array()).all());

    dump_text(tmp / "bad_header.csv", "y1,x2\n0.0,0.0\n");
    CHECK_THROWS_WITH_AS(read_data_csv(tmp / "bad_header.csv"), doctest::Contains("header"),
                         std::invalid_argument);
    dump_text(tmp / "ragged.csv", "y1,y2\n0.0,0.0\n1.0\n");
    CHECK_THROWS_WITH_AS(read_data_csv(tmp / "ragged.csv"), doctest::Contains(":3"),
                         std::invalid_argument);
    dump_text(tmp / "garbled.csv", "y1\nnope\n");
    CHECK_THROWS_AS(read_data_csv(tmp / "garbled.csv"), std::invalid_argument);
    CHECK_THROWS_AS(read_data_csv(tmp / "missing.csv"), IoError);
}

TEST_CASE("covariance files round-trip and reject an asymmetric lag-0 block") {
    TempDir tmp;
    const NoncausalModel model = random_model(3, 2, 0.8, 0.8, 19);
    const CovSequence r = cov_from_spectrum(spectrum_from_h(model.h(), 256), 2);
    const std::string path = tmp / "cov.json";
    write_cov(path, r);
    const CovSequence back = read_cov(path);
    REQUIRE(back.n == r.n);
    for (int k = 0; k <= r.n; ++k) {
        CHECK((back.lag(k) - r.lag(k)).cwiseAbs().maxCoeff() <= 1e-15);
    }

    auto j = load_json(path);
    j["lags"][0][1] = j["lags"][0][1].get<double>() + 0.5;
    dump_text(path, j.dump(2) + "\n");
    CHECK_THROWS_WITH_AS(read_cov(path), doctest::Contains("symmetric"), std::invalid_argument);
}

TEST_CASE("config files fill defaults and reject unknown keys") {
    TempDir tmp;
    const std::string path = tmp / "config.json";
    dump_text(path, R"({"m": 5, "n": 1, "num_trials": 4, "seed": 3})");
    const ExperimentConfig c = read_config(path);
    CHECK(c.m == 5);
    CHECK(c.n == 1);
    CHECK(c.p == 0);
    CHECK(c.num_trials == 4);
    CHECK(c.seed == 3);
    CHECK(c.density == doctest::Approx(0.1));
    CHECK(c.feasibility_target == doctest::Approx(0.9));
    CHECK(c.data_lengths == std::vector<int>{500, 1000, 2000});
    CHECK(c.estimators == std::vector<std::string>{"te", "tef", "me"});
    CHECK(c.norm == ErrorNorm::spectral);

    dump_text(path, R"({"m": 5, "n": 1, "grid_size": 128})");
    CHECK_THROWS_WITH_AS(read_config(path), doctest::Contains("grid_size"),
                         std::invalid_argument);
    dump_text(path, R"({"m": 5, "n": 1, "solver": {"grid_sz": 128}})");
    CHECK_THROWS_WITH_AS(read_config(path), doctest::Contains("grid_sz"),
                         std::invalid_argument);
    dump_text(path, R"({"m": 5, "n": 1, "norm": "nuclear"})");
    CHECK_THROWS_WITH_AS(read_config(path), doctest::Contains("norm"), std::invalid_argument);
    dump_text(path, R"({"m": 0, "n": 1})");
    CHECK_THROWS_AS(read_config(path), std::invalid_argument);
    CHECK_THROWS_AS(read_config(tmp / "absent.json"), IoError);
}

TEST_CASE("nested solver and pem settings are honored") {
    TempDir tmp;
    const std::string path = tmp / "config.json";
    dump_text(path, R"({"m": 4, "n": 2, "p": 1,
                        "solver": {"grid_size": 128, "gradient_tolerance": 1e-7},
                        "pem": {"max_iterations": 9}})");
    const ExperimentConfig c = read_config(path);
    CHECK(c.solver.grid_size == 128);
    CHECK(c.solver.gradient_tolerance == doctest::Approx(1e-7));
    CHECK(c.pem.max_iterations == 9);
    CHECK(c.pem.tolerance == doctest::Approx(1e-9));
}

TEST_CASE("results csv starts with a metadata comment and one row per trial") {
    TempDir tmp;
    ExperimentConfig c;
    c.seed = 42;
    std::vector<TrialResult> rows(2);
    rows[0].trial = 0;
    rows[0].estimator = "te";
    rows[0].data_length = 500;
    rows[0].relative_error = 0.25;
    rows[0].converged = true;
    rows[1].trial = 0;
    rows[1].estimator = "me";
    rows[1].data_length = 500;
    rows[1].relative_error = 0.5;
    rows[1].converged = false;

    const std::string path = tmp / "results.csv";
    write_results_csv(path, rows, c);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "# norm=spectral me_mapping=i_minus_phi_invsqrt seed=42");
    std::getline(in, line);
    CHECK(line == "trial,estimator,N,relative_error,converged");
    std::getline(in, line);
    CHECK(line == "0,te,500,0.25,1");
    std::getline(in, line);
    CHECK(line == "0,me,500,0.5,0");
}

TEST_CASE("summary json omits quantiles for cells with no converged trials") {
    TempDir tmp;
    ExperimentConfig c;
    c.m = 2;
    c.seed = 7;
    McResult mc;
    SummaryEntry ok;
    ok.estimator = "te";
    ok.data_length = 500;
    ok.converged_count = 3;
    ok.total = 4;
    ok.median = 0.2;
    ok.q1 = 0.1;
    ok.q3 = 0.3;
    SummaryEntry dead;
    dead.estimator = "me";
    dead.data_length = 500;
    dead.converged_count = 0;
    dead.total = 4;
    mc.summary = {ok, dead};

    const std::string path = tmp / "summary.json";
    write_summary_json(path, mc, c);
    const auto j = load_json(path);
    CHECK(j["config"]["m"] == 2);
    CHECK(j["config"]["seed"] == 7);
    CHECK(j["me_mapping"] == "i_minus_phi_invsqrt");
    REQUIRE(j["summary"].size() == 2);
    CHECK(j["summary"][0]["estimator"] == "te");
    CHECK(j["summary"][0]["median"] == doctest::Approx(0.2));
    CHECK(j["summary"][1]["converged"] == 0);
    CHECK(!j["summary"][1].contains("median"));
}

TEST_CASE("solver reports serialize status and diagnostics") {
    TempDir tmp;
    SolverReport rep;
    rep.objective_value = -1.5;
    rep.gradient_norm = 2e-9;
    rep.iterations = 17;
    rep.moment_residual = 3e-7;
    rep.positivity_margin = 0.42;
    rep.converged = true;
    rep.status = SolveStatus::converged;
    rep.message = "gradient tolerance reached";
    const std::string path = tmp / "report.json";
    write_solver_report(path, rep);
    const auto j = load_json(path);
    CHECK(j["objective_value"] == doctest::Approx(-1.5));
    CHECK(j["iterations"] == 17);
    CHECK(j["converged"] == true);
    CHECK(j["status"] == "converged");
    CHECK(j["positivity_margin"] == doctest::Approx(0.42));
    CHECK(j["message"] == "gradient tolerance reached");
}
