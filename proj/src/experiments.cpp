#include "ncgm/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>
#include <tuple>

#include <Eigen/SVD>

#include "ncgm/baseline_me.hpp"
#include "ncgm/simulate.hpp"
#include "ncgm/spectra.hpp"

namespace ncgm {

namespace {

std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t model_seed(const ExperimentConfig& cfg, int trial) {
    return mix64(mix64(cfg.seed ^ 0x6d6f64656cULL) ^ static_cast<std::uint64_t>(trial));
}

std::uint64_t trajectory_seed(const ExperimentConfig& cfg, int trial, int len) {
    return mix64(mix64(mix64(cfg.seed ^ 0x74726aULL) ^ static_cast<std::uint64_t>(trial)) ^
                 static_cast<std::uint64_t>(len));
}

Matrix stack_blocks(const DoubleSidedPoly& h) {
    Matrix out(h.m, h.m * (h.n + 1));
    for (int k = 0; k <= h.n; ++k) out.middleCols(h.m * k, h.m) = h.block(k);
    return out;
}

double matrix_norm(const Matrix& a, ErrorNorm norm) {
    if (norm == ErrorNorm::frobenius) return a.norm();
    return Eigen::JacobiSVD<Matrix>(a).singularValues()(0);
}

/// Covariance lags seen by the dual solve and the ME baseline: the data for
/// p = 0, otherwise the inverse-filtered series with its start-up discarded.
CovSequence pipeline_cov(const Matrix& data, const ExperimentConfig& cfg) {
    if (cfg.p == 0) return sample_cov(data, cfg.n);
    const int m = static_cast<int>(data.rows());
    std::vector<std::vector<double>> coeffs(m);
    for (int l = 0; l < m; ++l) {
        coeffs[l] = pem_scalar(data.row(l).transpose(), cfg.n, cfg.p, cfg.pem).a;
    }
    DiagonalMAPoly a(m, cfg.p, std::move(coeffs));
    Matrix xi = inverse_filter(a, data);
    const int discard = std::max(50, 10 * cfg.p);
    if (xi.cols() - discard <= cfg.n) throw std::runtime_error("too few samples after burn-in discard");
    return sample_cov(xi.rightCols(xi.cols() - discard).eval(), cfg.n);
}

TrialResult one_estimate(const ExperimentConfig& cfg, const NoncausalModel& truth,
                         const Matrix& data, int trial, const std::string& estimator, int len) {
    TrialResult row;
    row.trial = trial;
    row.estimator = estimator;
    row.data_length = len;
    const auto start = std::chrono::steady_clock::now();
    try {
        if (estimator == "me") {
            const CovSequence r = pipeline_cov(data, cfg);
            const MeModel me = me_var(r);
            const SpectrumGrid phi = me_spectrum(me, cfg.solver.grid_size);
            row.relative_error = relative_error(extract_h(phi, cfg.n), truth.h(), cfg.norm);
            row.converged = true;
        } else {
            const EdgeSet g = estimator == "te" ? truth.graph() : EdgeSet::full(cfg.m);
            if (cfg.p == 0) {
                auto [h, report] = solve(sample_cov(data, cfg.n), g, cfg.solver);
                row.relative_error = relative_error(h, truth.h(), cfg.norm);
                row.converged = report.converged;
            } else {
                auto [model, report] = estimate_arma(data, cfg.n, cfg.p, g, cfg.pem, cfg.solver);
                row.relative_error = relative_error(model.h(), truth.h(), cfg.norm);
                row.converged = report.dual.converged;
            }
        }
    } catch (const std::exception&) {
        row.relative_error = std::numeric_limits<double>::quiet_NaN();
        row.converged = false;
    }
    row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return row;
}

/// Type-7 quantile (linear interpolation between order statistics) of sorted
/// values.
double quantile_sorted(const std::vector<double>& sorted, double q) {
    const std::size_t count = sorted.size();
    if (count == 1) return sorted[0];
    const double pos = q * static_cast<double>(count - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, count - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

void ExperimentConfig::check() const {
    if (m < 1) throw std::invalid_argument("m must be positive");
    if (n < 0 || p < 0) throw std::invalid_argument("orders must be nonnegative");
    if (density <= 0.0 || density > 1.0) throw std::invalid_argument("density must lie in (0, 1]");
    if (feasibility_target <= 0.0 || feasibility_target >= 1.0) {
        throw std::invalid_argument("feasibility_target must lie in (0, 1)");
    }
    if (data_lengths.empty()) throw std::invalid_argument("data_lengths must be non-empty");
    for (int len : data_lengths) {
        if (len < 1) throw std::invalid_argument("data lengths must be positive");
    }
    if (num_trials < 1) throw std::invalid_argument("num_trials must be at least 1");
    if (estimators.empty()) throw std::invalid_argument("estimators must be non-empty");
    for (const std::string& e : estimators) {
        if (e != "te" && e != "tef" && e != "me") {
            throw std::invalid_argument("unknown estimator \"" + e + "\" (expected te, tef or me)");
        }
    }
    solver.check();
    pem.check();
}

double relative_error(const DoubleSidedPoly& h_hat, const DoubleSidedPoly& h_true, ErrorNorm norm) {
    if (h_hat.m != h_true.m || h_hat.n != h_true.n) {
        throw std::invalid_argument("coefficient dimensions do not match");
    }
    const double denom = matrix_norm(stack_blocks(h_true), norm);
    if (denom == 0.0) throw std::invalid_argument("reference coefficients are identically zero");
    return matrix_norm(stack_blocks(h_hat) - stack_blocks(h_true), norm) / denom;
}

std::vector<TrialResult> run_trial(const ExperimentConfig& config, int trial_index) {
    config.check();
    if (trial_index < 0) throw std::invalid_argument("trial index must be nonnegative");

    std::vector<TrialResult> rows;
    rows.reserve(config.data_lengths.size() * config.estimators.size());

    auto fail_all = [&]() {
        for (int len : config.data_lengths) {
            for (const std::string& est : config.estimators) {
                TrialResult row;
                row.trial = trial_index;
                row.estimator = est;
                row.data_length = len;
                rows.push_back(std::move(row));
            }
        }
        return rows;
    };

    std::optional<NoncausalModel> truth;
    try {
        const std::uint64_t ms = model_seed(config, trial_index);
        truth = config.p == 0 ? random_model(config.m, config.n, config.density,
                                             config.feasibility_target, ms)
                              : random_arma(config.m, config.n, config.p, config.density,
                                            config.feasibility_target, ms);
    } catch (const std::exception&) {
        return fail_all();
    }

    for (int len : config.data_lengths) {
        Matrix data;
        bool have_data = true;
        try {
            data = sample_trajectory(*truth, len, trajectory_seed(config, trial_index, len));
        } catch (const std::exception&) {
            have_data = false;
        }
        for (const std::string& est : config.estimators) {
            if (have_data) {
                rows.push_back(one_estimate(config, *truth, data, trial_index, est, len));
            } else {
                TrialResult row;
                row.trial = trial_index;
                row.estimator = est;
                row.data_length = len;
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

std::vector<SummaryEntry> summarize(const std::vector<TrialResult>& results) {
    std::vector<std::tuple<std::string, int>> cells;
    for (const TrialResult& row : results) cells.emplace_back(row.estimator, row.data_length);
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());

    std::vector<SummaryEntry> summary;
    for (const auto& [est, len] : cells) {
        SummaryEntry entry;
        entry.estimator = est;
        entry.data_length = len;
        std::vector<double> errors;
        for (const TrialResult& row : results) {
            if (row.estimator != est || row.data_length != len) continue;
            ++entry.total;
            if (row.converged && std::isfinite(row.relative_error)) {
                ++entry.converged_count;
                errors.push_back(row.relative_error);
            }
        }
        if (!errors.empty()) {
            std::sort(errors.begin(), errors.end());
            entry.q1 = quantile_sorted(errors, 0.25);
            entry.median = quantile_sorted(errors, 0.5);
            entry.q3 = quantile_sorted(errors, 0.75);
        }
        summary.push_back(std::move(entry));
    }
    return summary;
}

McResult run_monte_carlo(const ExperimentConfig& config, int num_threads) {
    config.check();
    if (num_threads < 1) throw std::invalid_argument("num_threads must be at least 1");

    std::vector<std::vector<TrialResult>> slots(config.num_trials);
    const int workers = std::min(num_threads, config.num_trials);
    if (workers <= 1) {
        for (int t = 0; t < config.num_trials; ++t) slots[t] = run_trial(config, t);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&]() {
                for (;;) {
                    const int t = next.fetch_add(1);
                    if (t >= config.num_trials) return;
                    slots[t] = run_trial(config, t);
                }
            });
        }
        for (std::thread& th : pool) th.join();
    }

    McResult out;
    for (auto& slot : slots) {
        for (TrialResult& row : slot) out.results.push_back(std::move(row));
    }
    std::sort(out.results.begin(), out.results.end(),
              [](const TrialResult& a, const TrialResult& b) {
                  return std::tie(a.trial, a.estimator, a.data_length) <
                         std::tie(b.trial, b.estimator, b.data_length);
              });
    out.summary = summarize(out.results);
    return out;
}

}  // namespace ncgm
