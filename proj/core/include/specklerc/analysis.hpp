#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "specklerc/pipeline.hpp"

namespace specklerc {

struct CorrelationReport {
    Eigen::MatrixXd matrix;       // probe-pair (spatial) or probe-lag (pulse) correlations
    Eigen::VectorXd separations;  // probe separation (um) or response lag (ns)
    Eigen::VectorXd mean_curve;   // mean |correlation| at each separation
    double decay_constant = 0.0;  // correlation length (um) or time (ns); 0 unless ok
    double fit_residual = 0.0;    // rms residual of the log-domain fit
    int fit_points = 0;
    std::string status = "ok";    // "ok" | "no_decay"
    std::vector<int> excluded_probes;  // zero-variance probes left out
};

/// Pearson correlation over time between every probe pair (first block,
/// post-warm-up window), averaged by probe separation; the mean curve is
/// fitted with exp(-dx/xi) by least squares on its logarithm over the
/// window where it stays above 0.05.
CorrelationReport spatial_correlation(const FieldRecord& rec);

/// Correlation between a single-pulse drive and each probe's intensity as a
/// function of response lag. The lag origin is moved to the correlation
/// peak (the modal flight time), and the decay beyond the peak is fitted to
/// exp(-dt/t_p). The pulse width is rounded to whole symbols.
CorrelationReport pulse_response_correlation(const SimPipeline& pipeline,
                                             double pulse_width_ns);

struct MacEstimate {
    int probes = 0;
    int modes = 0;
    int taps = 0;
    double symbol_period_ns = 0.0;
    double timestep_ns = 0.0;
    double mac_per_second = 0.0;
    double footprint_mm2 = 0.0;
    double mac_per_second_per_mm2 = 0.0;
};

/// Multiply-accumulate rate 2(3NM + M - 1)/dt of the equivalent matrix
/// computation, with dt = tau/K.
MacEstimate mac_rate(int probes, int modes, int taps, double symbol_period_ns,
                     double footprint_mm2);

}  // namespace specklerc
