// Release gate: end-to-end checks of the identification pipeline, one line of
// output per check. Exits nonzero if any check fails. Expects the path of the
// command-line binary via --cli; everything else runs in-process.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ncgm/arma_pipeline.hpp"
#include "ncgm/baseline_me.hpp"
#include "ncgm/experiments.hpp"
#include "ncgm/io.hpp"
#include "ncgm/simulate.hpp"
#include "ncgm/te_solver.hpp"

using namespace ncgm;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

std::string fail(const std::string& what) { return what; }

/// Exact covariance lags of the spectrum (I - H)^{-2}, on a fine grid so the
/// quadrature error sits far below every tolerance used here.
CovSequence exact_moments(const DoubleSidedPoly& h, int grid = 2048) {
    return cov_from_spectrum(spectrum_from_h(h, grid), h.n);
}

double max_edge_residual(const DoubleSidedPoly& h_hat, const CovSequence& r, const EdgeSet& g) {
    const CovSequence c = cov_from_spectrum(spectrum_from_h(h_hat, 4096), r.n);
    double worst = 0.0;
    for (int k = 0; k <= r.n; ++k) {
        for (const auto& [l, i] : g.edges()) {
            worst = std::max(worst, std::abs(c.lag(k)(l - 1, i - 1) - r.lag(k)(l - 1, i - 1)));
        }
    }
    return worst;
}

double max_block_diff(const DoubleSidedPoly& a, const DoubleSidedPoly& b) {
    double worst = 0.0;
    for (int k = 0; k <= a.n; ++k) {
        worst = std::max(worst, (a.block(k) - b.block(k)).cwiseAbs().maxCoeff());
    }
    return worst;
}

// ---------------------------------------------------------------------------

std::string check_analytic_recovery() {
    CovSequence r(2, 0);
    r.lag(0) << 1.25 / 0.5625, 1.0 / 0.5625, 1.0 / 0.5625, 1.25 / 0.5625;
    const auto start = Clock::now();
    const auto [h, rep] = solve(r, EdgeSet::full(2));
    const double elapsed = seconds_since(start);
    if (!rep.converged) return fail("solver did not converge: " + rep.message);
    const double err = std::abs(h.block(0)(0, 1) - 0.5);
    if (err > 1e-5) return fail("coupling error " + std::to_string(err));
    if (elapsed >= 1.0) return fail("took " + std::to_string(elapsed) + " s");
    return "";
}

std::string check_gradient() {
    const int grid = 256;
    const double eps = 1e-6;
    for (int i = 0; i < 21; ++i) {
        const int m = 2 + i % 5;
        const int n = i % 3;
        // Two nodes leave a single possible edge, which needs full density.
        const double density = m == 2 ? 1.0 : 0.6;
        const NoncausalModel point = random_model(m, n, density, 0.55 + 0.02 * i, 100 + i);
        const CovSequence r = exact_moments(random_model(m, n, 1.0, 0.7, 200 + i).h());
        const EdgeParamMap map(point.graph(), n);
        const Vector x = map.pack(point.h());
        const Vector g = gradient(point.h(), r, point.graph(), grid);

        Vector fd(map.dim());
        for (int j = 0; j < map.dim(); ++j) {
            Vector xp = x, xm = x;
            xp[j] += eps;
            xm[j] -= eps;
            fd[j] = (objective(map.unpack(xp), r, grid) - objective(map.unpack(xm), r, grid)) /
                    (2.0 * eps);
        }
        const double diff = (g - fd).norm();
        const double scale = std::max(1.0, g.norm());
        if (diff > 1e-6 * scale) {
            return fail("point " + std::to_string(i) + ": finite-difference gap " +
                        std::to_string(diff / scale));
        }
    }
    return "";
}

std::string check_moment_matching() {
    for (int i = 0; i < 5; ++i) {
        const int m = 3 + i % 4;
        const int n = 1 + i % 2;
        const NoncausalModel truth = random_model(m, n, 0.4, 0.85, 300 + i);
        SolverOptions opts;
        opts.grid_size = 1024;
        const CovSequence r = cov_from_spectrum(spectrum_from_h(truth.h(), 1024), n);
        const auto [h, rep] = solve(r, truth.graph(), opts);
        if (!rep.converged) return fail("instance " + std::to_string(i) + " did not converge");
        const double res = max_edge_residual(h, r, truth.graph());
        if (res > 1e-6) {
            return fail("instance " + std::to_string(i) + ": residual " + std::to_string(res));
        }
    }
    return "";
}

std::string check_self_consistency() {
    for (int i = 0; i < 6; ++i) {
        const int m = 2 + i % 5;
        const int n = i % 3;
        const NoncausalModel truth = random_model(m, n, m == 2 ? 1.0 : 0.5, 0.85, 400 + i);
        SolverOptions opts;
        opts.grid_size = 1024;
        const CovSequence r = cov_from_spectrum(spectrum_from_h(truth.h(), 1024), n);
        const auto [h, rep] = solve(r, truth.graph(), opts);
        if (!rep.converged) return fail("instance " + std::to_string(i) + " did not converge");
        const double err = max_block_diff(h, truth.h());
        if (err > 1e-5) {
            return fail("instance " + std::to_string(i) + ": recovery error " + std::to_string(err));
        }
        const double inv = max_block_diff(extract_h(spectrum_from_h(truth.h(), 1024), n), truth.h());
        if (inv > 1e-8) {
            return fail("instance " + std::to_string(i) + ": extraction error " + std::to_string(inv));
        }
    }
    return "";
}

std::string check_distances() {
    if (d_hellinger(SpectrumGrid::identity(3, 256)) != 0.0) {
        return fail("transport distance of the identity is nonzero");
    }
    DoubleSidedPoly flat4(1, 0);
    flat4.block(0)(0, 0) = 0.5;  // (1 - 0.5)^{-2} = 4 at every frequency
    const double d4 = d_hellinger(spectrum_from_h(flat4, 256));
    if (std::abs(d4 - 1.0) > 1e-10) return fail("scalar distance " + std::to_string(d4));
    for (int i = 0; i < 100; ++i) {
        const int m = 2 + i % 4;
        const int n = i % 3;
        DoubleSidedPoly h = random_model(m, n, m == 2 ? 1.0 : 0.7, 0.5 + 0.004 * i, 500 + i).h();
        const SpectrumGrid phi = spectrum_from_h(h, 256);
        if (d_hellinger(phi) < 0.0) return fail("negative transport distance at " + std::to_string(i));
        if (d_rel(phi) < 0.0) return fail("negative entropy rate at " + std::to_string(i));
    }
    return "";
}

std::string check_simulation_fidelity() {
    DoubleSidedPoly h(2, 0);
    h.block(0) << 0.0, 0.5, 0.5, 0.0;
    const NoncausalModel model(h, EdgeSet::full(2));
    const int num = 100000;
    const Matrix y = sample_trajectory(model, num, 606);

    Matrix r0_exact(2, 2);
    r0_exact << 1.25 / 0.5625, 1.0 / 0.5625, 1.0 / 0.5625, 1.25 / 0.5625;
    const Matrix r0_hat = sample_cov(y, 0).lag(0);
    const double lag_err = (r0_hat - r0_exact).cwiseAbs().maxCoeff();
    if (lag_err > 0.05) return fail("lag-0 error " + std::to_string(lag_err));

    const Matrix eps = residual(model.h(), y);
    const Matrix c = sample_cov(eps, 0).lag(0);
    const double white = (c - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff();
    const double bound = 5.0 / std::sqrt(static_cast<double>(eps.cols()));
    if (white >= bound) {
        return fail("residual whiteness " + std::to_string(white) + " >= " + std::to_string(bound));
    }
    return "";
}

std::string check_consistency_trend() {
    const auto start = Clock::now();
    const NoncausalModel truth = random_model(6, 2, 0.2, 0.9, 777);
    SolverOptions opts;
    opts.grid_size = 512;
    const std::vector<int> lengths = {500, 2000, 8000};
    std::vector<double> medians;
    for (std::size_t li = 0; li < lengths.size(); ++li) {
        std::vector<double> errors;
        for (int t = 0; t < 20; ++t) {
            const std::uint64_t seed = 9000 + 100 * static_cast<std::uint64_t>(li) + t;
            const Matrix y = sample_trajectory(truth, lengths[li], seed);
            const auto [h, rep] = solve(sample_cov(y, 2), truth.graph(), opts);
            if (rep.converged) errors.push_back(relative_error(h, truth.h()));
        }
        if (errors.size() < 15) {
            return fail("too few converged trials at N=" + std::to_string(lengths[li]));
        }
        medians.push_back(median(errors));
    }
    for (std::size_t i = 1; i < medians.size(); ++i) {
        if (!(medians[i] < medians[i - 1])) {
            std::ostringstream os;
            os << "medians not decreasing:";
            for (double m : medians) os << " " << m;
            return fail(os.str());
        }
    }
    const double elapsed = seconds_since(start);
    if (elapsed >= 600.0) return fail("took " + std::to_string(elapsed) + " s");
    return "";
}

std::string check_estimator_ordering() {
    const int threads =
        std::max(1, std::min(8, static_cast<int>(std::thread::hardware_concurrency())));
    for (const int p : {0, 1}) {
        ExperimentConfig c;
        c.m = 8;
        c.n = 2;
        c.p = p;
        c.density = 0.1;
        c.data_lengths = {1000};
        c.num_trials = 20;
        c.estimators = {"te", "tef", "me"};
        c.seed = 2026;
        c.solver.grid_size = 512;
        const McResult mc = run_monte_carlo(c, threads);
        double te = -1.0, tef = -1.0, me = -1.0;
        for (const SummaryEntry& e : mc.summary) {
            if (e.converged_count == 0) {
                return fail("no converged trials for " + e.estimator +
                            (p == 0 ? " (instantaneous-interaction run)" : " (filtered run)"));
            }
            if (e.estimator == "te") te = e.median;
            if (e.estimator == "tef") tef = e.median;
            if (e.estimator == "me") me = e.median;
        }
        if (!(te < tef && te < me)) {
            std::ostringstream os;
            os << (p == 0 ? "instantaneous-interaction run" : "filtered run")
               << ": medians te=" << te << " tef=" << tef << " me=" << me;
            return fail(os.str());
        }
    }
    return "";
}

std::string check_me_baseline() {
    for (int i = 0; i < 6; ++i) {
        const int m = 2 + i % 4;
        const int n = 1 + i % 3;
        const CovSequence r = exact_moments(random_model(m, n, m == 2 ? 1.0 : 0.8, 0.8, 600 + i).h());
        const MeModel me = me_var(r);
        const CovSequence back = cov_from_spectrum(me_spectrum(me, 2048), n);
        for (int k = 0; k <= n; ++k) {
            const double err = (back.lag(k) - r.lag(k)).cwiseAbs().maxCoeff();
            if (err > 1e-8) {
                return fail("instance " + std::to_string(i) + ": lag " + std::to_string(k) +
                            " mismatch " + std::to_string(err));
            }
        }

        // Direct dense solve of the same one-sided normal equations.
        const int dim = m * n;
        Matrix gram(dim, dim);
        for (int jj = 1; jj <= n; ++jj) {
            for (int k = 1; k <= n; ++k) {
                const int d = k - jj;
                const Matrix blk = d >= 0 ? r.lag(d) : Matrix(r.lag(-d).transpose());
                gram.block((jj - 1) * m, (k - 1) * m, m, m) = blk;
            }
        }
        Matrix rhs(dim, m);
        for (int k = 1; k <= n; ++k) rhs.block((k - 1) * m, 0, m, m) = r.lag(k).transpose();
        const Matrix stacked = gram.transpose().colPivHouseholderQr().solve(rhs);
        for (int k = 1; k <= n; ++k) {
            const Matrix a_direct = stacked.block((k - 1) * m, 0, m, m).transpose();
            const double gap = (me.a[static_cast<std::size_t>(k - 1)] - a_direct)
                                   .cwiseAbs()
                                   .maxCoeff();
            if (gap > 1e-10) {
                return fail("instance " + std::to_string(i) + ": recursion vs direct gap " +
                            std::to_string(gap));
            }
        }
    }
    return "";
}

// ---------------------------------------------------------------------------

std::string g_cli;

int run_cli(const std::string& args) {
    const std::string cmd = "\"" + g_cli + "\" " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string check_cli_determinism() {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "ncgm_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto at = [&](const std::string& name) { return (dir / name).string(); };

    const std::string sim_args =
        "simulate --m 4 --n 1 --p 1 --density 0.5 --feasibility-target 0.85 --N 400 --seed 5";
    if (run_cli(sim_args + " --out-model " + at("m1.json") + " --out-data " + at("d1.csv")) != 0 ||
        run_cli(sim_args + " --out-model " + at("m2.json") + " --out-data " + at("d2.csv")) != 0) {
        return fail("simulate invocation failed");
    }
    if (slurp(at("m1.json")) != slurp(at("m2.json")) || slurp(at("d1.csv")) != slurp(at("d2.csv"))) {
        return fail("repeated simulate runs differ");
    }

    if (run_cli("estimate --data " + at("d1.csv") + " --method tef --n 1 --p 1 --out " +
                at("e1.json") + " --report " + at("r1.json")) != 0 ||
        run_cli("estimate --data " + at("d1.csv") + " --method tef --n 1 --p 1 --out " +
                at("e2.json") + " --report " + at("r2.json")) != 0) {
        return fail("estimate invocation failed");
    }
    if (slurp(at("e1.json")) != slurp(at("e2.json")) || slurp(at("r1.json")) != slurp(at("r2.json"))) {
        return fail("repeated estimate runs differ");
    }

    if (run_cli("estimate --data " + at("d1.csv") + " --method me --n 1 --p 1 --out " +
                at("me1.json") + " --report " + at("mr1.json")) != 0 ||
        run_cli("estimate --data " + at("d1.csv") + " --method me --n 1 --p 1 --out " +
                at("me2.json") + " --report " + at("mr2.json")) != 0) {
        return fail("baseline estimate invocation failed");
    }
    if (slurp(at("me1.json")) != slurp(at("me2.json"))) {
        return fail("repeated baseline estimate runs differ");
    }
    if (read_model_file(at("me1.json")).estimator != "me") {
        return fail("baseline output is not tagged as such");
    }

    std::ofstream cfg(at("config.json"));
    cfg << R"({"m": 5, "n": 1, "p": 1, "density": 0.4, "num_trials": 6,)"
        << R"( "data_lengths": [300], "seed": 11})" << "\n";
    cfg.close();
    if (run_cli("mc --config " + at("config.json") + " --out-results " + at("res1.csv") +
                " --out-summary " + at("sum1.json") + " --threads 1") != 0 ||
        run_cli("mc --config " + at("config.json") + " --out-results " + at("res4.csv") +
                " --out-summary " + at("sum4.json") + " --threads 4") != 0) {
        return fail("mc invocation failed");
    }
    if (slurp(at("res1.csv")) != slurp(at("res4.csv"))) {
        return fail("trial table differs between 1 and 4 threads");
    }
    if (slurp(at("sum1.json")) != slurp(at("sum4.json"))) {
        return fail("summary differs between 1 and 4 threads");
    }
    fs::remove_all(dir);
    return "";
}

}  // namespace

int main(int argc, char** argv) {
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--cli") g_cli = argv[i + 1];
    }
    if (g_cli.empty()) {
        std::cerr << "usage: test_acceptance --cli <path-to-binary>\n";
        return 2;
    }

    struct Check {
        std::string label;
        std::function<std::string()> run;
    };
    const std::vector<Check> checks = {
        {"analytic recovery of the two-node coupling", check_analytic_recovery},
        {"gradient matches central finite differences", check_gradient},
        {"constrained moments match at convergence", check_moment_matching},
        {"exact-moment self-consistency round trip", check_self_consistency},
        {"distance identities and non-negativity", check_distances},
        {"trajectory moments and residual whiteness", check_simulation_fidelity},
        {"error decreases with sample size", check_consistency_trend},
        {"sparse estimator beats full and baseline", check_estimator_ordering},
        {"baseline recursion matches direct solve", check_me_baseline},
        {"byte-identical reruns at any thread count", check_cli_determinism},
    };

    int failures = 0;
    for (std::size_t i = 0; i < checks.size(); ++i) {
        std::string detail;
        const auto start = Clock::now();
        try {
            detail = checks[i].run();
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double elapsed = seconds_since(start);
        std::ostringstream line;
        line << "[" << (i + 1) << "/" << checks.size() << "] "
             << (detail.empty() ? "pass" : "FAIL") << " (" << std::fixed << std::setprecision(1)
             << elapsed << " s) " << checks[i].label;
        if (!detail.empty()) {
            line << ": " << detail;
            ++failures;
        }
        std::cout << line.str() << std::endl;
    }
    if (failures > 0) {
        std::cout << failures << " of " << checks.size() << " checks failed" << std::endl;
        return 1;
    }
    std::cout << "all " << checks.size() << " checks passed" << std::endl;
    return 0;
}
