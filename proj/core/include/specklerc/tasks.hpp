#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "specklerc/mlp.hpp"
#include "specklerc/pipeline.hpp"

namespace specklerc {

/// Input sequence with one-step-ahead targets: targets(n) = u(n+1), so the
/// target vector is one shorter than u. u is stored normalized to zero mean
/// and unit variance; raw_mean/raw_scale recover the source units.
struct TaskDataset {
    Eigen::VectorXd u;
    Eigen::VectorXd targets;
    int train_len = 3000;
    int test_len = 1000;
    double raw_mean = 0.0;
    double raw_scale = 1.0;
};

struct SurrogateSpec {
    enum class Kind { MackeyGlass, Lorenz };
    Kind kind = Kind::MackeyGlass;
    int length = 4200;         // samples kept after transient and subsampling
    int subsample = 60;        // integrator steps per kept sample
    double transient = 500.0;  // leading integration time discarded
};

/// Reads one numeric sample per line. Throws on unreadable files,
/// non-numeric lines, too-short or constant series.
TaskDataset load_series(const std::string& path, int train_len = 3000, int test_len = 1000);

/// Seeded chaotic surrogate series: a delay-differential feedback system
/// (delay 17, fourth-order integration, linear interpolation at half steps)
/// or the first coordinate of the Lorenz-63 flow.
TaskDataset generate_series(const SurrogateSpec& spec, std::uint64_t seed,
                            int train_len = 3000, int test_len = 1000);

/// Squared error normalized by target variance. Throws on zero variance.
double nmse(const Eigen::VectorXd& y, const Eigen::VectorXd& y_tag);

double pearson_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct PredictionReport {
    double train_nmse = 0.0;
    double test_nmse = 0.0;
    double test_correlation = 0.0;
    double baseline_test_nmse = 0.0;  // 3-lag linear autoregression reference
    int feature_columns = 0;
    ReadoutModel model;
    Eigen::VectorXd test_pred;
    Eigen::VectorXd test_truth;
};

/// One-step-ahead prediction: modulate u, simulate, detect, assemble, train
/// on the first train_len usable rows, evaluate on the next test_len. The
/// AR baseline regresses y on (1, u(n), u(n-1), u(n-2)) over the same split.
PredictionReport run_prediction_task(const TaskDataset& data, const SimPipeline& pipeline,
                                     const RidgeOptions& readout);

struct MemoryReport {
    Eigen::VectorXd m;         // m(i), i = 0..max_delay
    int effective_memory = -1; // largest i with m(i) > 0.5
    std::uint64_t input_seed = 0;
};

/// Memory capacity: i.i.d. uniform [-1, 1] input, one ridge model per delay
/// i with target u(n+1-i) - u(n-i), m(i) = squared Pearson correlation on
/// the test span. paper_numerator switches the numerator to the raw second
/// moment (no mean removal), mirroring the printed formula.
MemoryReport run_memory_task(const SimPipeline& pipeline, const RidgeOptions& readout,
                             int max_delay, std::uint64_t seed, int train_len = 3000,
                             int test_len = 1000, bool paper_numerator = false);

enum class PhaseReadout { Ridge, Mlp };

struct PhaseReport {
    double nmse = 0.0;
    double correlation = 0.0;
    double rmse_over_phimax = 0.0;
    double reconstruction_drift = 0.0;  // |reconstructed - true| at the last test step
    Eigen::VectorXd test_pred;          // predicted phase increments
    Eigen::VectorXd test_truth;
    Eigen::VectorXd phase_true;         // test span
    Eigen::VectorXd phase_reconstructed;
    bool used_mlp = false;
    std::optional<ReadoutModel> ridge_model;
    std::optional<MlpModel> mlp_model;
};

/// Phase sensing: phi(n) seeded pseudorandom on [0, phase_max_rad], encoded
/// directly as the optical phase (modulation depth forced to 1, u = phi).
/// phase_step_rad > 0 walks phi with increments uniform on [-step, step],
/// reflected at the interval ends (stationary marginal stays uniform);
/// phase_step_rad <= 0 draws each phi(n) independently. Targets are the
/// increments phi(n) - phi(n-1); the reconstruction is their cumulative
/// sum anchored at the true phase before the test span.
PhaseReport run_phase_task(const SimPipeline& pipeline, PhaseReadout kind,
                           const RidgeOptions& readout, const MlpOptions& mlp,
                           double phase_max_rad, double phase_step_rad, std::uint64_t seed,
                           int train_len = 3000, int test_len = 1000);

}  // namespace specklerc
