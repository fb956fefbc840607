#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "specklerc/field.hpp"

namespace specklerc {

/// Ridge-regression feature block built from a detected record.
///
/// Row n holds the features of input symbol `first_symbol + n`. Column 0 is
/// a constant 1 (bias); the remaining probes*taps*wavelengths columns are
/// ordered wavelength-major, then probe, then tap, so the leading
/// 1 + probes*taps*L' columns are exactly the features of the first L'
/// wavelengths.
struct FeatureMatrix {
    Eigen::MatrixXd X;
    int first_symbol = 0;
    int probes = 0;
    int taps = 0;
    int wavelengths = 0;

    int rows() const { return static_cast<int>(X.rows()); }
    int cols() const { return static_cast<int>(X.cols()); }
};

/// Samples each record block at `taps` evenly spaced instants per symbol
/// (end of each subinterval) and discards the warm-up region. The alignment
/// offset maps each usable record symbol back to the input symbol that is
/// its latest contributor, so no feature row sees future input.
FeatureMatrix assemble_features(const FieldRecord& rec, double symbol_period_ns,
                                int taps, int alignment_symbols);

/// Same, with the period, tap count, and alignment stored in the record.
FeatureMatrix assemble_features(const FieldRecord& rec);

struct RidgeOptions {
    double gamma = -1.0;               // penalty; < 0 selects from gamma_grid
    bool standardize = true;           // scale columns to unit variance first
    double validation_fraction = 0.2;  // trailing rows held out by the search
    std::vector<double> gamma_grid;    // empty = logarithmic default grid
};

struct ReadoutModel {
    Eigen::VectorXd weights;          // one per feature column, bias included
    double gamma = 0.0;
    double train_nmse = 0.0;
    double validation_nmse = 0.0;     // NMSE on the held-out tail; 0 if none
    double condition_estimate = 0.0;  // diagonal-pivot ratio of the final solve
    bool standardized = false;
    int probes = 0;                   // feature layout, informational
    int taps = 0;
    int wavelengths = 0;
    std::string config_hash;
};

/// Solves (X^T X + gamma I) w = X^T y. With standardization on, the solve
/// runs on variance-scaled columns (centered too when a constant column can
/// absorb the shift) and the returned weights are mapped back to raw inputs.
/// gamma < 0 runs a validation grid search on the trailing rows, then refits
/// on everything. gamma == 0 with a singular normal matrix throws
/// NumericalError.
ReadoutModel train_ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         const RidgeOptions& options = {});

Eigen::VectorXd predict(const ReadoutModel& model, const Eigen::MatrixXd& X);

void save_readout(const ReadoutModel& model, const std::string& path);
ReadoutModel load_readout(const std::string& path);

}  // namespace specklerc
