#include "specklerc/modes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace specklerc {

namespace {

constexpr double kPi = std::numbers::pi;

// Characteristic function of the symmetric-slab TE dispersion relation in
// phase form, branch m:
//   f_m(kappa) = kappa*W - m*pi - 2*atan(gamma/kappa),
// gamma = sqrt(kappa_max^2 - kappa^2). Strictly increasing in kappa, one
// root per guided branch. Evaluated in long double so the bisection can
// reach |f| < 1e-12 even when kappa*W is a few hundred radians.
long double characteristic(long double kappa, long double kappa_max, long double width, int branch)
{
    const long double g2 = kappa_max * kappa_max - kappa * kappa;
    const long double gamma = g2 > 0 ? std::sqrt(g2) : 0.0L;
    return kappa * width - static_cast<long double>(branch) * kPi - 2.0L * std::atan2(gamma, kappa);
}

double solve_branch(double kappa_max, double width, int branch)
{
    long double lo = static_cast<long double>(kappa_max) * 1e-14L;
    long double hi = kappa_max;
    if (characteristic(hi, kappa_max, width, branch) <= 0.0L) {
        throw NumericalError("slab mode solver: branch " + std::to_string(branch) +
                             " has no bound solution (at or beyond cutoff)");
    }
    long double mid = 0.5L * (lo + hi);
    for (int it = 0; it < 300; ++it) {
        mid = 0.5L * (lo + hi);
        const long double f = characteristic(mid, kappa_max, width, branch);
        if (std::abs(f) < 1e-12L) return static_cast<double>(mid);
        (f < 0 ? lo : hi) = mid;
        if (hi - lo < 1e-18L * kappa_max) break;
    }
    const long double f = characteristic(mid, kappa_max, width, branch);
    if (std::abs(f) >= 1e-12L) {
        throw NumericalError("slab mode solver: bisection failed to converge on branch " +
                             std::to_string(branch));
    }
    return static_cast<double>(mid);
}

struct BranchSolution {
    double beta;
    double kappa;
    double gamma;
};

BranchSolution solve_branch_at(const WaveguideSpec& spec, double omega, int branch, SlabSolver solver)
{
    const double k0 = omega / kSpeedOfLight;
    if (solver == SlabSolver::HardWall) {
        const double kappa = (branch + 1) * kPi / spec.width_um;
        const double b2 = spec.n_core * spec.n_core * k0 * k0 - kappa * kappa;
        if (b2 <= 0) throw NumericalError("hard-wall mode " + std::to_string(branch) + " not propagating");
        return {std::sqrt(b2), kappa, 0.0};
    }
    const double na = std::sqrt(spec.n_core * spec.n_core - spec.n_clad * spec.n_clad);
    const double kappa_max = na * k0;
    const double kappa = solve_branch(kappa_max, spec.width_um, branch);
    const double beta = std::sqrt(spec.n_core * spec.n_core * k0 * k0 - kappa * kappa);
    const double g2 = kappa_max * kappa_max - kappa * kappa;
    return {beta, kappa, g2 > 0 ? std::sqrt(g2) : 0.0};
}

int count_modes_at(const WaveguideSpec& spec, double omega, SlabSolver solver)
{
    const double k0 = omega / kSpeedOfLight;
    const double na = std::sqrt(spec.n_core * spec.n_core - spec.n_clad * spec.n_clad);
    const double x = na * k0 * spec.width_um / kPi;  // = 2V/pi
    const int c = static_cast<int>(std::floor(x));
    if (solver == SlabSolver::HardWall) {
        // kappa_m = (m+1)*pi/W must stay below the cladding light line.
        return (x > static_cast<double>(c)) ? c : std::max(0, c - 1);
    }
    return (x > static_cast<double>(c)) ? c + 1 : c;  // branches with m*pi < 2V
}

}  // namespace

double WaveguideSpec::k0() const { return 2.0 * kPi / wavelength_um(); }
double WaveguideSpec::omega0() const { return k0() * kSpeedOfLight; }

double WaveguideSpec::normalized_frequency() const
{
    return (kPi * width_um / wavelength_um()) *
           std::sqrt(n_core * n_core - n_clad * n_clad);
}

void WaveguideSpec::validate() const
{
    if (!(width_um > 0)) throw ValidationError("waveguide.width_um must be > 0");
    if (!(length_mm > 0)) throw ValidationError("waveguide.length_mm must be > 0");
    if (!(wavelength_nm > 0)) throw ValidationError("waveguide.wavelength_nm must be > 0");
    if (!(n_clad >= 1.0)) throw ValidationError("waveguide.n_clad must be >= 1");
    if (!(n_core > n_clad)) throw ValidationError("waveguide.n_core must exceed n_clad (no guidance otherwise)");
}

double ModeBasis::min_group_delay() const
{
    double v = modes.front().group_delay_ns;
    for (const auto& m : modes) v = std::min(v, m.group_delay_ns);
    return v;
}

double ModeBasis::max_group_delay() const
{
    double v = modes.front().group_delay_ns;
    for (const auto& m : modes) v = std::max(v, m.group_delay_ns);
    return v;
}

Eigen::MatrixXd ModeBasis::profile_matrix() const
{
    Eigen::MatrixXd P(grid.size(), mode_count());
    for (int m = 0; m < mode_count(); ++m) P.col(m) = modes[m].profile;
    return P;
}

Eigen::VectorXd ModeBasis::quadrature_weights() const
{
    Eigen::VectorXd w = Eigen::VectorXd::Constant(grid.size(), grid_step);
    if (grid.size() >= 2) {
        w(0) *= 0.5;
        w(grid.size() - 1) *= 0.5;
    }
    return w;
}

int count_guided_modes(const WaveguideSpec& spec)
{
    spec.validate();
    return count_modes_at(spec, spec.omega0(), SlabSolver::Transcendental);
}

ModeBasis solve_modes(const WaveguideSpec& spec, double grid_resolution_um, SlabSolver solver)
{
    spec.validate();
    const double lambda = spec.wavelength_um();
    double h = grid_resolution_um > 0 ? grid_resolution_um : lambda / 16.0;
    if (h > lambda / 8.0) {
        throw ValidationError("grid_resolution must be <= lambda/8 to resolve the fastest mode");
    }

    const double omega0 = spec.omega0();
    const int M = count_modes_at(spec, omega0, solver);
    if (M <= 0) throw NumericalError("no guided modes for this spec");

    std::vector<BranchSolution> sol(M);
    for (int m = 0; m < M; ++m) sol[m] = solve_branch_at(spec, omega0, m, solver);

    // Grid spans the core plus three decay lengths of the slowest-decaying
    // mode, capped for specs whose top mode sits essentially at cutoff.
    double decay = 0.0;
    if (solver == SlabSolver::Transcendental) {
        double gmin = sol[0].gamma;
        for (const auto& s : sol) gmin = std::min(gmin, s.gamma);
        decay = gmin > 1e-12 ? 3.0 / gmin : 4.0 * spec.width_um;
        decay = std::min(decay, 4.0 * spec.width_um);
    }
    const double half_w = 0.5 * spec.width_um;
    const int half_points = static_cast<int>(std::ceil((half_w + decay) / h));
    const int n_grid = 2 * half_points + 1;

    ModeBasis basis;
    basis.spec = spec;
    basis.omega0 = omega0;
    basis.grid_step = h;
    basis.grid.resize(n_grid);
    for (int j = 0; j < n_grid; ++j) basis.grid(j) = (j - half_points) * h;

    basis.modes.resize(M);
    for (int m = 0; m < M; ++m) {
        GuidedMode& gm = basis.modes[m];
        gm.index = m;
        gm.beta = sol[m].beta;
        gm.profile.resize(n_grid);
        const bool even = (m % 2 == 0);
        const double kappa = sol[m].kappa;
        const double gamma = sol[m].gamma;
        for (int j = 0; j < n_grid; ++j) {
            const double x = basis.grid(j);
            double v = 0.0;
            if (solver == SlabSolver::HardWall) {
                v = std::abs(x) <= half_w ? std::sin((m + 1) * kPi * (x + half_w) / spec.width_um) : 0.0;
            } else if (std::abs(x) <= half_w) {
                v = even ? std::cos(kappa * x) : std::sin(kappa * x);
            } else {
                const double edge = even ? std::cos(kappa * half_w) : std::sin(kappa * half_w);
                const double sgn = (even || x > 0) ? 1.0 : -1.0;
                v = sgn * edge * std::exp(-gamma * (std::abs(x) - half_w));
            }
            gm.profile(j) = v;
        }
    }

    // Orthonormalize on the grid (modified Gram-Schmidt under the trapezoid
    // inner product). The analytic profiles are already nearly orthogonal;
    // this removes the residual quadrature error so downstream overlaps see
    // an exactly orthonormal basis.
    const Eigen::VectorXd w = basis.quadrature_weights();
    for (int m = 0; m < M; ++m) {
        Eigen::VectorXd& pm = basis.modes[m].profile;
        for (int p = 0; p < m; ++p) {
            const Eigen::VectorXd& pp = basis.modes[p].profile;
            const double proj = (w.array() * pm.array() * pp.array()).sum();
            pm -= proj * pp;
        }
        const double nrm = std::sqrt((w.array() * pm.array().square()).sum());
        if (!(nrm > 0)) throw NumericalError("degenerate grid: mode " + std::to_string(m) + " has zero norm");
        pm /= nrm;
    }

    // Group delays t_g = L * dbeta/domega by centered finite difference with
    // fixed indices (geometric dispersion only). Falls back to a one-sided
    // difference if the branch is cut off at the lower frequency.
    const double L = spec.length_um();
    const double rel = 1e-5;
    for (int m = 0; m < M; ++m) {
        const double op = omega0 * (1.0 + rel);
        const double om = omega0 * (1.0 - rel);
        const double bp = solve_branch_at(spec, op, m, solver).beta;
        double tg;
        try {
            const double bm = solve_branch_at(spec, om, m, solver).beta;
            tg = L * (bp - bm) / (op - om);
        } catch (const NumericalError&) {
            tg = L * (bp - basis.modes[m].beta) / (op - omega0);
        }
        basis.modes[m].group_delay_ns = tg;
    }

    return basis;
}

Eigen::VectorXd InputField::evaluate(const Eigen::VectorXd& grid, double grid_step) const
{
    Eigen::VectorXd e;
    if (samples.size() > 0) {
        if (samples.size() != grid.size()) {
            throw ValidationError("input.samples must match the mode-basis grid size");
        }
        e = samples;
    } else {
        if (!(spot_width_um > 0)) throw ValidationError("input.spot_width_um must be > 0");
        const double r = 0.5 * spot_width_um;  // 1/e^2 intensity radius
        e.resize(grid.size());
        for (Eigen::Index j = 0; j < grid.size(); ++j) {
            const double u = (grid(j) - center_offset_um) / r;
            e(j) = std::exp(-u * u);
        }
    }
    Eigen::VectorXd w = Eigen::VectorXd::Constant(grid.size(), grid_step);
    w(0) *= 0.5;
    w(grid.size() - 1) *= 0.5;
    const double power = (w.array() * e.array().square()).sum();
    if (!(power > 1e-300)) throw ValidationError("input field has zero power on the grid");
    return e / std::sqrt(power);
}

Eigen::VectorXcd coupling_coefficients(const ModeBasis& basis, const InputField& input)
{
    const Eigen::VectorXd e0 = input.evaluate(basis.grid, basis.grid_step);
    const Eigen::VectorXd w = basis.quadrature_weights();
    const int M = basis.mode_count();
    Eigen::VectorXcd a(M);
    double total = 0.0;
    for (int m = 0; m < M; ++m) {
        const double ov = (w.array() * basis.modes[m].profile.array() * e0.array()).sum();
        a(m) = ov;
        total += ov * ov;
    }
    if (total < 1e-20) {
        throw NumericalError("input field does not overlap any guided mode");
    }
    return a / std::sqrt(total);
}

double hard_wall_beta(const WaveguideSpec& spec, int mode_index)
{
    const double k0 = spec.k0();
    const double kappa = (mode_index + 1) * kPi / spec.width_um;
    const double b2 = spec.n_core * spec.n_core * k0 * k0 - kappa * kappa;
    if (b2 <= 0) throw NumericalError("hard-wall mode not propagating");
    return std::sqrt(b2);
}

double hard_wall_dbeta_domega(const WaveguideSpec& spec, int mode_index)
{
    const double omega = spec.omega0();
    const double beta = hard_wall_beta(spec, mode_index);
    return spec.n_core * spec.n_core * omega / (kSpeedOfLight * kSpeedOfLight * beta);
}

}  // namespace specklerc
