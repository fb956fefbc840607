#include "specklerc/lbfgs.hpp"

#include <cmath>
#include <limits>

#include "specklerc/common.hpp"

namespace specklerc {

const char* to_string(LbfgsStatus status)
{
    switch (status) {
        case LbfgsStatus::Converged: return "converged";
        case LbfgsStatus::MaxIterations: return "max_iterations";
        case LbfgsStatus::LineSearchFailed: return "line_search_failed";
    }
    return "unknown";
}

Eigen::VectorXd lbfgs_two_loop(const Eigen::VectorXd& grad,
                               const std::vector<Eigen::VectorXd>& s_hist,
                               const std::vector<Eigen::VectorXd>& y_hist)
{
    if (s_hist.size() != y_hist.size()) {
        throw ValidationError("two-loop histories differ in length");
    }
    const int k = static_cast<int>(s_hist.size());
    if (k == 0) return -grad;

    Eigen::VectorXd q = grad;
    std::vector<double> rho(k), alpha(k);
    for (int i = k - 1; i >= 0; --i) {
        rho[i] = 1.0 / y_hist[i].dot(s_hist[i]);
        alpha[i] = rho[i] * s_hist[i].dot(q);
        q -= alpha[i] * y_hist[i];
    }
    const double gamma = s_hist[k - 1].dot(y_hist[k - 1]) / y_hist[k - 1].squaredNorm();
    Eigen::VectorXd r = gamma * q;
    for (int i = 0; i < k; ++i) {
        const double beta = rho[i] * y_hist[i].dot(r);
        r += (alpha[i] - beta) * s_hist[i];
    }
    return -r;
}

namespace {

struct LineSearchOutcome {
    double step = 0.0;
    double value = 0.0;
    bool ok = false;
};

// Bracketing bisection for the weak Wolfe conditions. grad is reused as the
// gradient at the accepted point.
LineSearchOutcome weak_wolfe(const Objective& f, const Eigen::VectorXd& x, double fx,
                             double slope0, const Eigen::VectorXd& dir,
                             Eigen::VectorXd& grad, Eigen::VectorXd& x_trial,
                             const LbfgsOptions& opt)
{
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    double step = 1.0;
    LineSearchOutcome out;
    for (int it = 0; it < opt.max_line_search_steps; ++it) {
        x_trial = x + step * dir;
        const double ft = f(x_trial, grad);
        if (!std::isfinite(ft) || ft > fx + opt.c1 * step * slope0) {
            hi = step;
        } else if (grad.dot(dir) < opt.c2 * slope0) {
            lo = step;
        } else {
            out.step = step;
            out.value = ft;
            out.ok = true;
            return out;
        }
        step = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * lo;
        if (step <= 0 || step < 1e-20) break;
    }
    return out;
}

}  // namespace

LbfgsResult minimize_lbfgs(const Objective& f, const Eigen::VectorXd& x0,
                           const LbfgsOptions& options)
{
    if (options.memory < 1) throw ValidationError("lbfgs.memory must be >= 1");
    if (options.max_iterations < 1) throw ValidationError("lbfgs.max_iterations must be >= 1");

    LbfgsResult res;
    res.x = x0;
    res.gradient.resize(x0.size());
    res.value = f(res.x, res.gradient);
    res.trace.push_back(res.value);

    std::vector<Eigen::VectorXd> s_hist, y_hist;
    Eigen::VectorXd grad_new(x0.size());
    Eigen::VectorXd x_trial(x0.size());

    for (int iter = 0; iter < options.max_iterations; ++iter) {
        if (res.gradient.lpNorm<Eigen::Infinity>() <= options.grad_tolerance) {
            res.status = LbfgsStatus::Converged;
            return res;
        }

        Eigen::VectorXd dir = lbfgs_two_loop(res.gradient, s_hist, y_hist);
        double slope = res.gradient.dot(dir);
        if (!(slope < 0)) {
            s_hist.clear();
            y_hist.clear();
            dir = -res.gradient;
            slope = -res.gradient.squaredNorm();
        }

        grad_new = res.gradient;
        const LineSearchOutcome ls =
            weak_wolfe(f, res.x, res.value, slope, dir, grad_new, x_trial, options);
        if (!ls.ok) {
            res.status = LbfgsStatus::LineSearchFailed;
            return res;
        }

        Eigen::VectorXd s = ls.step * dir;
        Eigen::VectorXd y = grad_new - res.gradient;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            if (static_cast<int>(s_hist.size()) > options.memory) {
                s_hist.erase(s_hist.begin());
                y_hist.erase(y_hist.begin());
            }
        }

        res.x = x_trial;
        res.value = ls.value;
        res.gradient = grad_new;
        res.iterations = iter + 1;
        res.trace.push_back(res.value);
    }
    res.status = res.gradient.lpNorm<Eigen::Infinity>() <= options.grad_tolerance
        ? LbfgsStatus::Converged
        : LbfgsStatus::MaxIterations;
    return res;
}

}  // namespace specklerc
