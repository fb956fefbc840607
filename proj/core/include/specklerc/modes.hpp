#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "specklerc/common.hpp"

namespace specklerc {

/// Symmetric step-index slab waveguide, the 1-D reduction of a wide
/// rectangular multimode waveguide via the effective-index picture.
struct WaveguideSpec {
    double width_um = 25.0;            // core width W
    double length_mm = 39.0;           // propagation length L
    double n_core = 2.556;
    double n_clad = 1.444;
    double wavelength_nm = 1550.0;     // vacuum wavelength of the carrier

    double length_um() const { return length_mm * 1e3; }
    double wavelength_um() const { return wavelength_nm * 1e-3; }
    double k0() const;                 // vacuum wavenumber, rad/um
    double omega0() const;             // carrier angular frequency, rad/ns
    /// Normalized frequency V = (pi W / lambda) sqrt(n_core^2 - n_clad^2).
    double normalized_frequency() const;
    void validate() const;             // throws ValidationError
};

enum class SlabSolver {
    Transcendental,  // exact step-index dispersion relation (default)
    HardWall         // sinusoid modes of a perfectly reflecting slab; cross-check path
};

/// One guided TE mode: propagation constant, group delay and the transverse
/// profile sampled on the shared grid.
struct GuidedMode {
    int index = 0;
    double beta = 0.0;            // rad/um
    double group_delay_ns = 0.0;  // t_g = L * dbeta/domega
    Eigen::VectorXd profile;      // real TE profile on ModeBasis::grid
};

struct ModeBasis {
    std::vector<GuidedMode> modes;
    Eigen::VectorXd grid;        // transverse sample positions, um
    double grid_step = 0.0;      // uniform spacing, um
    double omega0 = 0.0;         // rad/ns
    WaveguideSpec spec;

    int mode_count() const { return static_cast<int>(modes.size()); }
    double min_group_delay() const;
    double max_group_delay() const;
    double group_delay_spread() const { return max_group_delay() - min_group_delay(); }
    /// Profiles as a (grid points x M) matrix.
    Eigen::MatrixXd profile_matrix() const;
    /// Trapezoid quadrature weights matching `grid`.
    Eigen::VectorXd quadrature_weights() const;
};

/// Launch field at the input facet. Either a Gaussian spot (width = 1/e^2
/// intensity full width, i.e. the mode-field diameter of the feeding
/// single-mode guide) or an arbitrary sampled amplitude profile.
struct InputField {
    double spot_width_um = 0.5;
    double center_offset_um = 2.0;
    Eigen::VectorXd samples;  // optional; if nonzero size, used instead of the Gaussian

    /// Amplitude profile sampled on `grid`, normalized to unit power.
    Eigen::VectorXd evaluate(const Eigen::VectorXd& grid, double grid_step) const;
};

/// Number of bound TE solutions of the slab dispersion relation.
int count_guided_modes(const WaveguideSpec& spec);

/// Solves all guided modes: per-branch bisection of the characteristic
/// equation to |residual| < 1e-12, profiles on a grid spanning the core plus
/// three cladding decay lengths, orthonormalized on the grid. Group delays
/// from a centered finite difference over omega (relative step 1e-5) with
/// the material indices held fixed.
ModeBasis solve_modes(const WaveguideSpec& spec, double grid_resolution_um = 0.0,
                      SlabSolver solver = SlabSolver::Transcendental);

/// Overlap integrals a_m = \int Psi_m(x) E0(x) dx, renormalized to unit
/// total modal power. Throws NumericalError if the input misses the basis.
Eigen::VectorXcd coupling_coefficients(const ModeBasis& basis, const InputField& input);

/// Hard-wall closed forms, used as the analytic cross-check.
double hard_wall_beta(const WaveguideSpec& spec, int mode_index);
double hard_wall_dbeta_domega(const WaveguideSpec& spec, int mode_index);

}  // namespace specklerc
