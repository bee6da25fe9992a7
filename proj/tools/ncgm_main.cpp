// Command-line front end: model simulation, single-series estimation, and
// Monte Carlo comparison of the transportation-distance and maximum-entropy
// estimators.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ncgm/arma_pipeline.hpp"
#include "ncgm/baseline_me.hpp"
#include "ncgm/experiments.hpp"
#include "ncgm/io.hpp"
#include "ncgm/simulate.hpp"
#include "ncgm/spectra.hpp"
#include "ncgm/te_solver.hpp"

namespace {

struct SimulateArgs {
    int m = 0;
    int n = 0;
    int p = 0;
    double density = 0.0;
    double feasibility_target = 0.0;
    int num_samples = 0;
    std::uint64_t seed = 0;
    std::string out_model;
    std::string out_data;
};

struct EstimateArgs {
    std::string data;
    std::string method;
    std::string edges;
    int n = 0;
    int p = 0;
    std::string out;
    std::string report;
    ncgm::SolverOptions solver;
};

struct McArgs {
    std::string config;
    std::string out_results;
    std::string out_summary;
    int threads = 1;
};

int run_simulate(const SimulateArgs& args) {
    const ncgm::NoncausalModel model =
        args.p == 0
            ? ncgm::random_model(args.m, args.n, args.density, args.feasibility_target, args.seed)
            : ncgm::random_arma(args.m, args.n, args.p, args.density, args.feasibility_target,
                                args.seed);
    const ncgm::Matrix data = ncgm::sample_trajectory(model, args.num_samples, args.seed);
    ncgm::write_model(args.out_model, model);
    ncgm::write_data_csv(args.out_data, data);
    return 0;
}

int run_estimate(const EstimateArgs& args) {
    const ncgm::Matrix data = ncgm::read_data_csv(args.data);
    const int m = static_cast<int>(data.rows());

    if (args.method == "me") {
        ncgm::Matrix filtered = data;
        if (args.p > 0) {
            std::vector<std::vector<double>> coeffs(static_cast<std::size_t>(m));
            for (int l = 0; l < m; ++l) {
                const ncgm::PemFit fit =
                    ncgm::pem_scalar(data.row(l).transpose(), args.n, args.p);
                coeffs[static_cast<std::size_t>(l)] = fit.a;
            }
            const ncgm::DiagonalMAPoly a(m, args.p, std::move(coeffs));
            const ncgm::Matrix residuals = ncgm::inverse_filter(a, data);
            const int discard = std::max(50, 10 * args.p);
            if (residuals.cols() <= discard + args.n) {
                throw std::invalid_argument("series too short after filter transient discard");
            }
            filtered = residuals.rightCols(residuals.cols() - discard);
        }
        const ncgm::CovSequence r = ncgm::sample_cov(filtered, args.n);
        const ncgm::MeModel me = ncgm::me_var(r);
        const ncgm::SpectrumGrid phi = ncgm::me_spectrum(me, args.solver.grid_size);
        const ncgm::DoubleSidedPoly h = ncgm::extract_h(phi, args.n);
        ncgm::write_extracted_model(args.out, h);

        const ncgm::CovSequence r_hat = ncgm::cov_from_spectrum(phi, args.n);
        double resid = 0.0;
        for (int k = 0; k <= args.n; ++k) {
            resid = std::max(resid, (r_hat.lag(k) - r.lag(k)).cwiseAbs().maxCoeff());
        }
        nlohmann::ordered_json rep;
        rep["method"] = "me";
        rep["converged"] = true;
        rep["moment_residual"] = resid;
        std::ofstream out(args.report, std::ios::binary);
        if (!out) throw ncgm::IoError("cannot open " + args.report + " for writing");
        out << rep.dump(2) << "\n";
        if (!out) throw ncgm::IoError("failed writing " + args.report);
        return 0;
    }

    ncgm::EdgeSet g = ncgm::EdgeSet::full(m);
    if (args.method == "te") {
        if (args.edges.empty()) {
            throw std::invalid_argument("--method te requires --edges");
        }
        g = ncgm::read_edges(args.edges);
        if (g.node_count() != m) {
            throw std::invalid_argument("edge file declares " + std::to_string(g.node_count()) +
                                        " nodes but the data has " + std::to_string(m) +
                                        " channels");
        }
    } else if (!args.edges.empty()) {
        throw std::invalid_argument("--edges is only used with --method te");
    }

    if (args.p == 0) {
        const ncgm::CovSequence r = ncgm::sample_cov(data, args.n);
        const auto [h, rep] = ncgm::solve(r, g, args.solver);
        ncgm::write_model(args.out, ncgm::NoncausalModel(h, g), args.method);
        ncgm::write_solver_report(args.report, rep);
        return rep.converged ? 0 : 3;
    }
    const auto [model, rep] =
        ncgm::estimate_arma(data, args.n, args.p, g, ncgm::PemOptions{}, args.solver);
    ncgm::write_model(args.out, model, args.method);
    ncgm::write_arma_report(args.report, rep);
    return rep.dual.converged ? 0 : 3;
}

int run_mc(const McArgs& args) {
    const ncgm::ExperimentConfig config = ncgm::read_config(args.config);
    const ncgm::McResult mc = ncgm::run_monte_carlo(config, args.threads);
    ncgm::write_results_csv(args.out_results, mc.results, config);
    ncgm::write_summary_json(args.out_summary, mc, config);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse non-causal graphical model identification for multivariate time series"};
    app.require_subcommand(1);

    SimulateArgs sim;
    CLI::App* simulate = app.add_subcommand(
        "simulate", "Draw a random feasible model and sample a stationary trajectory");
    simulate->add_option("--m", sim.m, "number of channels")->required();
    simulate->add_option("--n", sim.n, "double-sided interaction order")->required();
    simulate->add_option("--p", sim.p, "per-channel moving-average order (0 for pure AR)")
        ->required();
    simulate->add_option("--density", sim.density, "fraction of possible edges to draw")
        ->required();
    simulate
        ->add_option("--feasibility-target", sim.feasibility_target,
                     "largest eigenvalue of the interaction part on the unit circle")
        ->required();
    simulate->add_option("--N", sim.num_samples, "number of samples to keep")->required();
    simulate->add_option("--seed", sim.seed, "random seed")->required();
    simulate->add_option("--out-model", sim.out_model, "output model JSON path")->required();
    simulate->add_option("--out-data", sim.out_data, "output trajectory CSV path")->required();

    EstimateArgs est;
    CLI::App* estimate =
        app.add_subcommand("estimate", "Identify a model from a trajectory CSV");
    estimate->add_option("--data", est.data, "input trajectory CSV")->required();
    estimate->add_option("--method", est.method, "estimator: te, tef, or me")
        ->required()
        ->check(CLI::IsMember({"te", "tef", "me"}));
    estimate->add_option("--edges", est.edges, "edge set JSON (required for te)");
    estimate->add_option("--n", est.n, "double-sided interaction order")->required();
    estimate->add_option("--p", est.p, "per-channel moving-average order")->default_val(0);
    estimate->add_option("--out", est.out, "output model JSON path")->required();
    estimate->add_option("--report", est.report, "output report JSON path")->required();
    estimate->add_option("--grid-size", est.solver.grid_size, "unit-circle quadrature points");
    estimate->add_option("--max-iter", est.solver.max_iterations, "solver iteration cap");
    estimate->add_option("--tol", est.solver.gradient_tolerance, "solver gradient tolerance");

    McArgs mc;
    CLI::App* monte = app.add_subcommand("mc", "Run a Monte Carlo estimator comparison");
    monte->add_option("--config", mc.config, "experiment config JSON")->required();
    monte->add_option("--out-results", mc.out_results, "per-trial results CSV path")->required();
    monte->add_option("--out-summary", mc.out_summary, "summary JSON path")->required();
    monte->add_option("--threads", mc.threads, "worker thread count")->default_val(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const bool is_estimate = estimate->parsed();
    try {
        if (simulate->parsed()) return run_simulate(sim);
        if (is_estimate) return run_estimate(est);
        if (mc.threads < 1) throw std::invalid_argument("--threads must be at least 1");
        return run_mc(mc);
    } catch (const ncgm::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return is_estimate ? 3 : 1;
    }
}
