#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ncgm/baseline_me.hpp"
#include "ncgm/experiments.hpp"

namespace ncgm {

/// Failure to open, read or write a file (as opposed to invalid content,
/// which throws std::invalid_argument).
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Parsed model file. Coefficient structural invariants are enforced unless
/// the file carries metadata.estimator = "me", whose extracted blocks
/// legitimately have unconstrained support.
struct ModelFile {
    DoubleSidedPoly h;
    std::optional<DiagonalMAPoly> a;
    EdgeSet edges;
    std::string estimator;  ///< metadata.estimator, empty if untagged
};

/// Model JSON: m, n, p, edges (1-based pairs), H (n+1 flat row-major m*m
/// arrays), A (m arrays of p coefficients, present only for p > 0), optional
/// metadata.estimator.
void write_model(const std::string& path, const NoncausalModel& model,
                 const std::string& estimator_tag = "");

/// Serializes an unconstrained extracted coefficient set (maximum-entropy
/// baseline): edges written as the full graph, tagged metadata.estimator="me".
void write_extracted_model(const std::string& path, const DoubleSidedPoly& h);

ModelFile read_model_file(const std::string& path);

/// Strict read: builds a NoncausalModel, rejecting any file whose
/// coefficients violate the structural invariants, with a message naming the
/// violated invariant.
NoncausalModel read_model(const std::string& path);

/// Node count and edge set from any model-shaped JSON (only m and edges are
/// required).
EdgeSet read_edges(const std::string& path);

/// Data CSV: header y1,...,ym; one row per time step, full precision.
void write_data_csv(const std::string& path, const Matrix& data);
Matrix read_data_csv(const std::string& path);

/// Covariance JSON: m, n, lags (n+1 flat row-major m*m arrays).
void write_cov(const std::string& path, const CovSequence& r);
CovSequence read_cov(const std::string& path);

/// Experiment config JSON mirroring ExperimentConfig field names; omitted
/// fields keep their defaults, unknown keys are rejected.
ExperimentConfig read_config(const std::string& path);

void write_solver_report(const std::string& path, const SolverReport& rep);

/// Estimation report: pem section (per-channel a, c, variance, iterations)
/// plus the dual solver report. Wall-clock timings are deliberately omitted
/// so repeated runs serialize identically.
void write_arma_report(const std::string& path, const ArmaReport& rep);

/// Results CSV: a '#' metadata line (norm, baseline mapping, seed), a header,
/// then one row per trial result. Wall time is omitted (byte-reproducibility).
void write_results_csv(const std::string& path, const std::vector<TrialResult>& results,
                       const ExperimentConfig& config);

/// Summary JSON: the config echo plus per-(estimator, N) quartiles over
/// converged trials; cells with no converged trials carry counts only.
void write_summary_json(const std::string& path, const McResult& mc,
                        const ExperimentConfig& config);

}  // namespace ncgm
