#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "specklerc/modes.hpp"

namespace specklerc {

/// Phase-encoded symbol stream. u(t) is the zero-order hold of `symbols`:
/// it equals symbols[n] on [n*tau, (n+1)*tau).
struct ModulationSignal {
    std::vector<double> symbols;
    double symbol_period_ns = 0.08;   // tau
    double depth_rad = 1.5;           // alpha, radians per unit of u
    double sim_timestep_ns = 0.02;    // must divide tau

    int samples_per_symbol() const;
    void validate() const;
};

/// Inter-modal coupling along the guide, realized as S equal segments with a
/// seeded banded random unitary applied at each of the S-1 interfaces.
/// strength 0 (or segments 1) reproduces the purely diagonal propagation.
struct CouplingPlan {
    int segments = 1;
    double strength = 0.0;      // in [0, 1]
    int bandwidth = 2;          // neighbor range of the unitary's generator
    std::uint64_t rng_seed = 1;

    void validate() const;
    /// The interface mixing matrix (unitary to machine precision).
    Eigen::MatrixXcd mixing_matrix(int mode_count) const;
};

struct DetectionSpec {
    Eigen::VectorXd probe_positions_um;  // N positions, inside the core
    double spot_fwhm_um = 2.0;           // Gaussian averaging kernel; 0 = point sampling
    int samples_per_symbol = 4;          // K
    double bandwidth_ghz = 0.0;          // first-order low-pass; 0 = off
    bool ac_coupled = false;
    double noise_std = 0.0;              // relative to the mean intensity

    void validate(double core_half_width_um) const;
    static Eigen::VectorXd uniform_probes(int n, double width_um);
};

/// Complex output field sampled on transverse positions x time grid.
struct ComplexField {
    Eigen::VectorXd positions;           // um
    double position_step = 0.0;          // uniform spacing of `positions`
    double timestep_ns = 0.0;
    double symbol_period_ns = 0.0;
    Eigen::MatrixXcd values;             // positions x time
    int warmup_symbols = 0;              // leading symbols with incomplete history
    double min_group_delay_ns = 0.0;
    double max_group_delay_ns = 0.0;
};

/// Detected neural-field intensities, one block per wavelength.
struct FieldRecord {
    Eigen::VectorXd probe_positions;     // um
    std::vector<double> wavelengths_nm;  // one entry per block
    std::vector<Eigen::MatrixXd> blocks; // each: probes x time
    double timestep_ns = 0.0;
    double symbol_period_ns = 0.0;
    int samples_per_symbol = 0;
    int warmup_symbols = 0;
    int alignment_symbols = 0;           // delay between u(n) and its arrival, in symbols
    double mean_interwavelength_correlation = 0.0;  // 0 unless >= 2 blocks

    int probe_count() const { return static_cast<int>(probe_positions.size()); }
    int time_samples() const { return blocks.empty() ? 0 : static_cast<int>(blocks.front().cols()); }
    int wavelength_count() const { return static_cast<int>(blocks.size()); }
    int usable_symbols() const;
};

/// Propagates the modulated input through the mode basis. With no coupling
/// plan (or strength 0) this is the diagonal group-delay model
///   E(x,t) = sum_m a_m Psi_m(x) exp(-i beta_m L) exp(i alpha u(t - t_m)),
/// with u looked up by zero-order hold (exact for piecewise-constant input).
/// With a plan, the guide is split into segments with per-segment delays and
/// a unitary mixing matrix at each interface; segment delays are then
/// quantized to the simulation timestep.
ComplexField simulate_field(const ModeBasis& basis, const Eigen::VectorXcd& coupling,
                            const ModulationSignal& mod,
                            const std::optional<CouplingPlan>& plan = std::nullopt,
                            const std::optional<Eigen::VectorXd>& positions = std::nullopt);

/// |E|^2, Gaussian spot averaging, optional first-order low-pass, optional
/// additive Gaussian noise (seeded), optional per-probe mean removal.
FieldRecord detect(const ComplexField& field, const DetectionSpec& det, std::uint64_t noise_seed = 0);

/// Re-solves the basis and coupling per wavelength and concatenates the
/// per-wavelength detected blocks. Blocks are independent jobs; the result
/// does not depend on `threads`.
FieldRecord simulate_multiwavelength(const WaveguideSpec& spec, const InputField& input,
                                     const ModulationSignal& mod, const DetectionSpec& det,
                                     const std::vector<double>& wavelengths_nm,
                                     const std::optional<CouplingPlan>& plan = std::nullopt,
                                     std::uint64_t noise_seed = 0, int threads = 1);

/// CSV export: time column plus one column per probe per wavelength.
void write_record_csv(const FieldRecord& rec, const std::string& path);
/// Compact binary export (little-endian doubles, fixed documented header).
void write_record_binary(const FieldRecord& rec, const std::string& path);
FieldRecord read_record_binary(const std::string& path);

}  // namespace specklerc
