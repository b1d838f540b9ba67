#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bfgd/metrics.hpp"
#include "bfgd/objectives.hpp"
#include "bfgd/solver.hpp"

namespace bfgd {

enum class Task { Sensing, Completion, Image, OneBitSynth, OneBitMovieLens, BenchSvd };
enum class MapKind { Gaussian, Structured };
enum class LinkKind { Logistic, Probit };
enum class SolverKind { Bfgd, BfgdSmooth, Svp };

std::string to_string(Task t);
std::string to_string(Termination t);

struct ExperimentConfig {
    Task task = Task::Sensing;
    std::size_t m = 64;
    std::size_t n = 64;
    std::size_t rank = 3;
    double sample_factor = 10.0;     // sensing: p = sample_factor * n * rank
    double observe_fraction = 0.35;  // completion / image / onebit-synth
    double noise_sigma = 0.244;      // probit link
    double alpha = 1.0;              // onebit: ||X*||_inf after rescaling
    LinkKind link = LinkKind::Probit;
    MapKind map_kind = MapKind::Gaussian;
    SolverKind solver = SolverKind::Bfgd;
    std::uint64_t seed = 0;

    // Solver overrides.
    std::size_t max_iters = 4000;
    double tol = 5e-6;
    std::optional<double> step_override;
    double lambda = 1.0;
    double reg_coefficient = 1.0 / 16.0;
    std::string init = "spectral";  // "spectral" or "random"
    double svp_step = 1.0 / 3.0;

    // File-backed tasks.
    std::string image_path;
    std::string ratings_path;
    std::size_t holdout = 5000;

    // bench-svd.
    std::size_t trials = 5;

    std::string name() const;  // stable basename for output files

    static ExperimentConfig from_json_file(const std::string& path);
};

struct RunReport {
    Task task = Task::Sensing;
    Termination termination = Termination::MaxIters;
    std::size_t iterations = 0;
    double wall_time_s = 0.0;
    double final_f = 0.0;
    double final_rel_change = 0.0;
    std::optional<double> final_dist;
    std::optional<double> rel_error;
    std::optional<double> sign_acc;
    std::optional<double> psnr_db;
    std::string trace_path;
    std::string report_path;
};

struct SensingInstance {
    std::shared_ptr<LeastSquaresSensing> objective;
    std::shared_ptr<const SensingMap> map;
    GroundTruth truth;
};

/// Rank-r ground truth with unit Frobenius norm from i.i.d. Gaussian
/// factors, observed noiselessly through a fresh map with p = C * n * r.
SensingInstance gen_sensing_instance(std::size_t m, std::size_t n, std::size_t rank, double c,
                                     MapKind map_kind, std::uint64_t seed);

/// Same ground-truth recipe observed through an entrywise mask of
/// round(observe_fraction * m * n) positions.
SensingInstance gen_completion_instance(std::size_t m, std::size_t n, std::size_t rank,
                                        double observe_fraction, std::uint64_t seed);

struct OneBitInstance {
    std::shared_ptr<ObjectiveModel> objective;
    GroundTruth truth;
    std::vector<SignObservation> train;
    std::vector<SignObservation> heldout;  // positions outside omega, labeled sign(X*)
};

/// Factors drawn i.i.d. Uniform[-1/2, 1/2], product rescaled to
/// ||X*||_inf = alpha; labels sampled through the link on a uniform mask.
OneBitInstance gen_onebit_instance(std::size_t m, std::size_t n, std::size_t rank,
                                   double omega_fraction, LinkKind link, double noise_sigma,
                                   double alpha, std::uint64_t seed);

struct ImageInstance {
    std::shared_ptr<LeastSquaresSensing> objective;
    DenseMatrix reference;  // full image in [0, 1]
};

ImageInstance ingest_image(const std::string& path, double observe_fraction,
                           std::uint64_t seed);

struct MovieLensData {
    std::shared_ptr<OneBitLogistic> objective;
    std::vector<SignObservation> test_set;
    std::size_t users = 0;
    std::size_t items = 0;
    double global_mean = 0.0;
};

/// Tab-separated `user item rating timestamp` lines, 1-based ids, ratings in
/// 1..5. Ratings are binarized against the global mean (computed before any
/// holdout removal); `holdout` entries are withheld as the test set.
MovieLensData ingest_movielens(const std::string& path, std::size_t holdout,
                               std::uint64_t seed);

/// Builds the task instance, runs the configured solver, writes
/// <name>.trace.csv and <name>.report.json under out_dir, and returns the
/// report. Progress lines go to stderr unless quiet.
RunReport run_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                         bool quiet = true);

struct BenchRow {
    std::size_t m = 0;
    std::size_t r = 0;
    double t_svd = 0.0;  // median seconds, rank-r truncated SVD of m x m
    double t_mm = 0.0;   // median seconds, two (m x m)(m x r) products
};

BenchRow bench_svd_vs_matmul(std::size_t m, std::size_t r, std::size_t trials,
                             std::uint64_t seed);
void write_bench_csv(std::ostream& out, std::span<const BenchRow> rows);

/// Trace CSV schema: header
///   iter,f_value,rel_change,dist,contraction,balance_residual,elapsed_s
/// with empty dist/contraction fields when no ground truth was supplied.
/// Floats are written with 17 significant digits so parsing them back
/// reproduces the exact doubles.
void write_trace_csv(std::ostream& out, const SolveTrace& trace);
SolveTrace read_trace_csv(std::istream& in);

void write_report_json(std::ostream& out, const RunReport& report,
                       const ExperimentConfig& cfg);

}  // namespace bfgd
