#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace specklerc {

enum class LbfgsStatus { Converged, MaxIterations, LineSearchFailed };

const char* to_string(LbfgsStatus status);

struct LbfgsOptions {
    int max_iterations = 200;
    int memory = 10;               // retained (s, y) pairs
    double grad_tolerance = 1e-6;  // stop when ||grad||_inf falls below
    double c1 = 1e-4;              // sufficient-decrease constant
    double c2 = 0.9;               // weak Wolfe curvature constant
    int max_line_search_steps = 40;
};

struct LbfgsResult {
    Eigen::VectorXd x;
    double value = 0.0;
    Eigen::VectorXd gradient;
    LbfgsStatus status = LbfgsStatus::MaxIterations;
    int iterations = 0;
    std::vector<double> trace;  // objective at x0, then after each accepted step
};

/// Evaluates the objective at x and fills grad (same size as x).
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

/// Two-loop recursion: applies the inverse-Hessian approximation implied by
/// the (s, y) history to grad and returns the search direction -H grad.
/// Histories are ordered oldest first. An empty history yields -grad.
Eigen::VectorXd lbfgs_two_loop(const Eigen::VectorXd& grad,
                               const std::vector<Eigen::VectorXd>& s_hist,
                               const std::vector<Eigen::VectorXd>& y_hist);

/// Limited-memory BFGS with a bracketing weak-Wolfe line search. Curvature
/// pairs with s.y <= 0 are skipped; a non-descent direction resets the
/// memory and falls back to steepest descent. When the line search cannot
/// make progress the best iterate found is returned with status
/// LineSearchFailed.
LbfgsResult minimize_lbfgs(const Objective& f, const Eigen::VectorXd& x0,
                           const LbfgsOptions& options = {});

}  // namespace specklerc
