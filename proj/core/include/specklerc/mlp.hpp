#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "specklerc/lbfgs.hpp"

namespace specklerc {

struct MlpOptions {
    int hidden = 150;
    double l2 = 1e-4;              // penalty on all parameters
    std::uint64_t init_seed = 1;
    LbfgsOptions lbfgs{.max_iterations = 150, .grad_tolerance = 1e-5};
};

/// One ReLU hidden layer with a scalar linear output. Inputs are
/// standardized with the stored per-column statistics before the forward
/// pass, so predict() accepts the same raw features the trainer saw.
struct MlpModel {
    Eigen::MatrixXd w1;  // hidden x inputs
    Eigen::VectorXd b1;
    Eigen::VectorXd w2;  // hidden
    double b2 = 0.0;
    Eigen::VectorXd input_mean;
    Eigen::VectorXd input_scale;
    double final_loss = 0.0;
    LbfgsStatus status = LbfgsStatus::MaxIterations;
    std::vector<double> trace;

    int hidden() const { return static_cast<int>(b1.size()); }
    int inputs() const { return static_cast<int>(w1.cols()); }
};

/// Mean-squared-error objective with L2 penalty over the packed parameter
/// vector [vec(w1), b1, w2, b2] (w1 packed column by column). The ReLU
/// subgradient at zero is taken as zero. When grad is non-null it receives
/// the reverse-mode gradient.
double mlp_loss(const Eigen::VectorXd& params, int hidden, const Eigen::MatrixXd& X,
                const Eigen::VectorXd& y, double l2, Eigen::VectorXd* grad = nullptr);

MlpModel train_mlp(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                   const MlpOptions& options = {});

Eigen::VectorXd predict(const MlpModel& model, const Eigen::MatrixXd& X);

void save_mlp(const MlpModel& model, const std::string& path);
MlpModel load_mlp(const std::string& path);

}  // namespace specklerc
