#include "specklerc/field.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>

namespace specklerc {

namespace {

using cplx = std::complex<double>;

constexpr double kTwoPi = 6.283185307179586476925286766559;

int checked_samples_per_symbol(double tau, double dt)
{
    if (!(tau > 0) || !(dt > 0)) throw ValidationError("modulation periods must be positive");
    const double ratio = tau / dt;
    const double rounded = std::round(ratio);
    if (rounded < 1 || std::abs(ratio - rounded) > 1e-9 * ratio) {
        throw ValidationError("modulation.sim_timestep_ns must divide symbol_period_ns");
    }
    return static_cast<int>(rounded);
}

// Symbol index carried by mode m at time sample k: floor((k - d_m)/K) with
// d_m the mode delay in samples. Clamped to the first symbol inside the
// warm-up region (those rows are flagged and excluded from features).
inline int zoh_index(int k, double delay_samples, int per_symbol, int n_symbols)
{
    const int s = static_cast<int>(std::floor((static_cast<double>(k) - delay_samples) / per_symbol));
    if (s < 0) return 0;
    if (s >= n_symbols) return n_symbols - 1;
    return s;
}

Eigen::MatrixXd interpolate_profiles(const ModeBasis& basis, const Eigen::VectorXd& positions)
{
    const Eigen::VectorXd& g = basis.grid;
    const double h = basis.grid_step;
    const double g0 = g(0);
    const Eigen::Index n = g.size();
    Eigen::MatrixXd out(positions.size(), basis.mode_count());
    for (Eigen::Index p = 0; p < positions.size(); ++p) {
        const double t = (positions(p) - g0) / h;
        if (t < -1e-9 || t > static_cast<double>(n - 1) + 1e-9) {
            throw ValidationError("field evaluation position outside the mode-basis grid");
        }
        Eigen::Index j0 = static_cast<Eigen::Index>(std::floor(t));
        double frac = t - static_cast<double>(j0);
        if (j0 < 0) { j0 = 0; frac = 0.0; }
        if (j0 >= n - 1) { j0 = n - 2; frac = 1.0; }
        if (frac < 1e-9) frac = 0.0;
        if (frac > 1.0 - 1e-9) frac = 1.0;
        for (int m = 0; m < basis.mode_count(); ++m) {
            const Eigen::VectorXd& pr = basis.modes[m].profile;
            out(p, m) = (1.0 - frac) * pr(j0) + frac * pr(j0 + 1);
        }
    }
    return out;
}

Eigen::VectorXd restrict_positions(const Eigen::VectorXd& grid, double lo, double hi)
{
    std::vector<double> kept;
    kept.reserve(grid.size());
    for (Eigen::Index j = 0; j < grid.size(); ++j) {
        if (grid(j) >= lo && grid(j) <= hi) kept.push_back(grid(j));
    }
    if (kept.size() < 2) throw ValidationError("probe window does not cover the field grid");
    return Eigen::Map<Eigen::VectorXd>(kept.data(), static_cast<Eigen::Index>(kept.size()));
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    const double ma = a.mean();
    const double mb = b.mean();
    const Eigen::ArrayXd da = a.array() - ma;
    const Eigen::ArrayXd db = b.array() - mb;
    const double den = std::sqrt(da.square().sum() * db.square().sum());
    if (den <= 0) return 0.0;
    return (da * db).sum() / den;
}

}  // namespace

int ModulationSignal::samples_per_symbol() const
{
    return checked_samples_per_symbol(symbol_period_ns, sim_timestep_ns);
}

void ModulationSignal::validate() const
{
    checked_samples_per_symbol(symbol_period_ns, sim_timestep_ns);
    if (symbols.empty()) throw ValidationError("modulation.symbols must be non-empty");
    for (double v : symbols) {
        if (!std::isfinite(v)) throw ValidationError("modulation.symbols contains a non-finite value");
    }
    if (!std::isfinite(depth_rad)) throw ValidationError("modulation.depth_rad must be finite");
}

void CouplingPlan::validate() const
{
    if (segments < 1) throw ValidationError("coupling.segments must be >= 1");
    if (strength < 0.0 || strength > 1.0) throw ValidationError("coupling.strength must be in [0, 1]");
    if (bandwidth < 1) throw ValidationError("coupling.bandwidth must be >= 1");
}

Eigen::MatrixXcd CouplingPlan::mixing_matrix(int mode_count) const
{
    validate();
    if (strength == 0.0) return Eigen::MatrixXcd::Identity(mode_count, mode_count);

    // Banded random Hermitian generator; the unitary is its exponential, so
    // unitarity holds to machine precision by construction.
    std::mt19937_64 rng(derive_seed(rng_seed, 0xC0uL));
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXcd herm = Eigen::MatrixXcd::Zero(mode_count, mode_count);
    for (int i = 0; i < mode_count; ++i) {
        herm(i, i) = gauss(rng);
        for (int j = i + 1; j <= std::min(mode_count - 1, i + bandwidth); ++j) {
            const cplx v(gauss(rng) * M_SQRT1_2, gauss(rng) * M_SQRT1_2);
            herm(i, j) = v;
            herm(j, i) = std::conj(v);
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(herm);
    const double scale = std::max(std::abs(eig.eigenvalues().minCoeff()),
                                  std::abs(eig.eigenvalues().maxCoeff()));
    Eigen::VectorXcd phases(mode_count);
    for (int i = 0; i < mode_count; ++i) {
        const double theta = strength * M_PI * eig.eigenvalues()(i) / (scale > 0 ? scale : 1.0);
        phases(i) = cplx(std::cos(theta), std::sin(theta));
    }
    return eig.eigenvectors() * phases.asDiagonal() * eig.eigenvectors().adjoint();
}

void DetectionSpec::validate(double core_half_width_um) const
{
    if (probe_positions_um.size() < 1) throw ValidationError("detection.probes must have N >= 1");
    if (samples_per_symbol < 1) throw ValidationError("detection.samples_per_symbol must be >= 1");
    if (spot_fwhm_um < 0) throw ValidationError("detection.spot_fwhm_um must be >= 0");
    if (bandwidth_ghz < 0) throw ValidationError("detection.bandwidth_ghz must be >= 0");
    if (noise_std < 0) throw ValidationError("detection.noise_std must be >= 0");
    for (Eigen::Index i = 0; i < probe_positions_um.size(); ++i) {
        if (std::abs(probe_positions_um(i)) > core_half_width_um) {
            throw ValidationError("detection.probes[" + std::to_string(i) + "] lies outside the core");
        }
    }
}

Eigen::VectorXd DetectionSpec::uniform_probes(int n, double width_um)
{
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x(i) = -0.5 * width_um + (i + 0.5) * width_um / n;
    return x;
}

int FieldRecord::usable_symbols() const
{
    if (blocks.empty() || symbol_period_ns <= 0 || timestep_ns <= 0) return 0;
    const int per_symbol = static_cast<int>(std::round(symbol_period_ns / timestep_ns));
    const int total = time_samples() / per_symbol;
    return std::max(0, total - warmup_symbols);
}

ComplexField simulate_field(const ModeBasis& basis, const Eigen::VectorXcd& coupling,
                            const ModulationSignal& mod,
                            const std::optional<CouplingPlan>& plan,
                            const std::optional<Eigen::VectorXd>& positions)
{
    mod.validate();
    const int M = basis.mode_count();
    if (coupling.size() != M) {
        throw ValidationError("coupling vector length does not match the mode count");
    }

    const int K = mod.samples_per_symbol();
    const int n_symbols = static_cast<int>(mod.symbols.size());
    const Eigen::Index T = static_cast<Eigen::Index>(n_symbols) * K;
    const double dt = mod.sim_timestep_ns;
    const double L = basis.spec.length_um();

    Eigen::VectorXd pos = positions ? *positions : basis.grid;
    const Eigen::MatrixXd profiles = interpolate_profiles(basis, pos);

    // exp(i alpha u(n)) per symbol
    Eigen::VectorXcd phase_table(n_symbols);
    for (int s = 0; s < n_symbols; ++s) {
        const double ph = mod.depth_rad * mod.symbols[s];
        phase_table(s) = cplx(std::cos(ph), std::sin(ph));
    }

    Eigen::VectorXd delay_samples(M);
    Eigen::VectorXcd prop_phase(M);
    double tg_min = basis.modes[0].group_delay_ns, tg_max = tg_min;
    for (int m = 0; m < M; ++m) {
        const double tg = basis.modes[m].group_delay_ns;
        tg_min = std::min(tg_min, tg);
        tg_max = std::max(tg_max, tg);
        delay_samples(m) = tg / dt;
        const double bl = basis.modes[m].beta * L;
        prop_phase(m) = cplx(std::cos(bl), -std::sin(bl));
    }

    ComplexField out;
    out.positions = pos;
    out.position_step = pos.size() > 1 ? pos(1) - pos(0) : 0.0;
    out.timestep_ns = dt;
    out.symbol_period_ns = mod.symbol_period_ns;
    out.warmup_symbols = static_cast<int>(std::ceil(tg_max / mod.symbol_period_ns)) + 1;
    out.min_group_delay_ns = tg_min;
    out.max_group_delay_ns = tg_max;
    out.values.resize(pos.size(), T);

    const bool segmented = plan && plan->segments > 1;
    if (!segmented) {
        // Diagonal model with exact zero-order-hold delays.
        Eigen::MatrixXcd weighted = profiles.cast<cplx>();
        for (int m = 0; m < M; ++m) weighted.col(m) *= coupling(m) * prop_phase(m);

        const Eigen::Index chunk = 4096;
        Eigen::MatrixXcd modal(M, chunk);
        for (Eigen::Index k0 = 0; k0 < T; k0 += chunk) {
            const Eigen::Index kn = std::min(chunk, T - k0);
            for (Eigen::Index k = 0; k < kn; ++k) {
                for (int m = 0; m < M; ++m) {
                    modal(m, k) = phase_table(zoh_index(static_cast<int>(k0 + k), delay_samples(m), K, n_symbols));
                }
            }
            out.values.middleCols(k0, kn).noalias() = weighted * modal.leftCols(kn);
        }
        return out;
    }

    plan->validate();
    const int S = plan->segments;
    const Eigen::MatrixXcd mix = plan->mixing_matrix(M);

    // Time-sampled modal signals; per-segment delays are rounded to the
    // simulation timestep (mixed signals are no longer piecewise-constant,
    // so the exact fractional-delay lookup only applies to the first hop).
    Eigen::MatrixXcd state(M, T);
    for (int m = 0; m < M; ++m) {
        for (Eigen::Index k = 0; k < T; ++k) {
            state(m, k) = coupling(m) * phase_table(zoh_index(static_cast<int>(k), 0.0, K, n_symbols));
        }
    }
    for (int s = 0; s < S; ++s) {
        for (int m = 0; m < M; ++m) {
            const int shift = static_cast<int>(std::llround(delay_samples(m) / S));
            const double bl = basis.modes[m].beta * L / S;
            const cplx ph = cplx(std::cos(bl), -std::sin(bl));
            if (shift > 0) {
                for (Eigen::Index k = T - 1; k >= 0; --k) {
                    state(m, k) = ph * state(m, std::max<Eigen::Index>(0, k - shift));
                }
            } else {
                state.row(m) *= ph;
            }
        }
        if (s < S - 1) state = (mix * state).eval();
    }
    out.values.noalias() = profiles.cast<cplx>() * state;
    return out;
}

FieldRecord detect(const ComplexField& field, const DetectionSpec& det, std::uint64_t noise_seed)
{
    if (field.positions.size() < 1 || field.values.size() == 0) {
        throw ValidationError("detect: empty field");
    }
    const double lo = field.positions.minCoeff();
    const double hi = field.positions.maxCoeff();
    const int N = static_cast<int>(det.probe_positions_um.size());
    if (N < 1) throw ValidationError("detection.probes must have N >= 1");
    for (int i = 0; i < N; ++i) {
        const double x = det.probe_positions_um(i);
        if (x < lo - 1e-9 || x > hi + 1e-9) {
            throw ValidationError("detection probe " + std::to_string(i) + " outside the field grid");
        }
    }

    const Eigen::Index P = field.positions.size();
    const Eigen::Index T = field.values.cols();

    // Gaussian spot kernel as a quadrature over the field grid.
    Eigen::MatrixXd kernel = Eigen::MatrixXd::Zero(N, P);
    if (det.spot_fwhm_um > 0) {
        const double sigma = det.spot_fwhm_um / (2.0 * std::sqrt(2.0 * std::log(2.0)));
        for (int i = 0; i < N; ++i) {
            double sum = 0.0;
            for (Eigen::Index j = 0; j < P; ++j) {
                const double d = field.positions(j) - det.probe_positions_um(i);
                if (std::abs(d) > 5.0 * sigma) continue;
                const double w = std::exp(-0.5 * d * d / (sigma * sigma));
                kernel(i, j) = w;
                sum += w;
            }
            if (sum <= 0) throw ValidationError("spot kernel for probe " + std::to_string(i) + " has no support");
            kernel.row(i) /= sum;
        }
    } else {
        for (int i = 0; i < N; ++i) {
            Eigen::Index jbest = 0;
            double dbest = std::abs(field.positions(0) - det.probe_positions_um(i));
            for (Eigen::Index j = 1; j < P; ++j) {
                const double d = std::abs(field.positions(j) - det.probe_positions_um(i));
                if (d < dbest) { dbest = d; jbest = j; }
            }
            kernel(i, jbest) = 1.0;
        }
    }

    Eigen::MatrixXd intensity = field.values.array().abs2().matrix();
    Eigen::MatrixXd probed = kernel * intensity;

    if (det.bandwidth_ghz > 0) {
        // First-order low-pass, 3 dB point at bandwidth_ghz (1 GHz = 1/ns).
        const double rc = 1.0 / (kTwoPi * det.bandwidth_ghz);
        const double a = std::exp(-field.timestep_ns / rc);
        for (int i = 0; i < N; ++i) {
            double y = probed(i, 0);
            for (Eigen::Index k = 1; k < T; ++k) {
                y = a * y + (1.0 - a) * probed(i, k);
                probed(i, k) = y;
            }
        }
    }

    if (det.noise_std > 0) {
        const double scale = det.noise_std * probed.mean();
        for (int i = 0; i < N; ++i) {
            std::mt19937_64 rng(derive_seed(noise_seed, static_cast<std::uint64_t>(i)));
            std::normal_distribution<double> gauss(0.0, scale);
            for (Eigen::Index k = 0; k < T; ++k) probed(i, k) += gauss(rng);
        }
    }

    if (det.ac_coupled) {
        for (int i = 0; i < N; ++i) probed.row(i).array() -= probed.row(i).mean();
    }

    FieldRecord rec;
    rec.probe_positions = det.probe_positions_um;
    rec.wavelengths_nm = {0.0};
    rec.blocks.push_back(std::move(probed));
    rec.timestep_ns = field.timestep_ns;
    rec.symbol_period_ns = field.symbol_period_ns;
    rec.samples_per_symbol = det.samples_per_symbol;
    rec.warmup_symbols = field.warmup_symbols;
    rec.alignment_symbols = field.symbol_period_ns > 0
        ? static_cast<int>(std::floor(field.min_group_delay_ns / field.symbol_period_ns))
        : 0;
    return rec;
}

FieldRecord simulate_multiwavelength(const WaveguideSpec& spec, const InputField& input,
                                     const ModulationSignal& mod, const DetectionSpec& det,
                                     const std::vector<double>& wavelengths_nm,
                                     const std::optional<CouplingPlan>& plan,
                                     std::uint64_t noise_seed, int threads)
{
    if (wavelengths_nm.empty()) throw ValidationError("wavelengths list must be non-empty");
    spec.validate();
    det.validate(0.5 * spec.width_um);

    const std::size_t Lw = wavelengths_nm.size();
    std::vector<FieldRecord> parts(Lw);
    std::vector<std::string> failures(Lw);

    parallel_for(Lw, threads, [&](std::size_t l) {
        try {
            WaveguideSpec s = spec;
            s.wavelength_nm = wavelengths_nm[l];
            const ModeBasis basis = solve_modes(s);
            const Eigen::VectorXcd a = coupling_coefficients(basis, input);

            // Evaluate the field only where the spot kernels have support.
            const double sigma = det.spot_fwhm_um > 0
                ? det.spot_fwhm_um / (2.0 * std::sqrt(2.0 * std::log(2.0)))
                : 0.0;
            const double margin = 5.0 * sigma + basis.grid_step;
            const Eigen::VectorXd pos = restrict_positions(
                basis.grid, det.probe_positions_um.minCoeff() - margin,
                det.probe_positions_um.maxCoeff() + margin);

            const ComplexField field = simulate_field(basis, a, mod, plan, pos);
            parts[l] = detect(field, det, derive_seed(noise_seed, l));
            parts[l].wavelengths_nm = {wavelengths_nm[l]};
        } catch (const std::exception& e) {
            failures[l] = e.what();
        }
    });

    for (std::size_t l = 0; l < Lw; ++l) {
        if (!failures[l].empty()) {
            throw NumericalError("wavelength " + std::to_string(wavelengths_nm[l]) + " nm: " + failures[l]);
        }
    }

    FieldRecord rec;
    rec.probe_positions = det.probe_positions_um;
    rec.timestep_ns = parts[0].timestep_ns;
    rec.symbol_period_ns = parts[0].symbol_period_ns;
    rec.samples_per_symbol = det.samples_per_symbol;
    rec.warmup_symbols = 0;
    int align = std::numeric_limits<int>::max();
    for (std::size_t l = 0; l < Lw; ++l) {
        rec.warmup_symbols = std::max(rec.warmup_symbols, parts[l].warmup_symbols);
        align = std::min(align, parts[l].alignment_symbols);
        rec.wavelengths_nm.push_back(wavelengths_nm[l]);
        rec.blocks.push_back(std::move(parts[l].blocks.front()));
    }
    rec.alignment_symbols = align;

    if (Lw >= 2) {
        // Mean |Pearson| between same-probe traces of distinct wavelengths,
        // over the post-warm-up window.
        const Eigen::Index k0 = static_cast<Eigen::Index>(rec.warmup_symbols) * rec.samples_per_symbol;
        const Eigen::Index Tn = rec.blocks[0].cols() - k0;
        double acc = 0.0;
        std::size_t count = 0;
        if (Tn > 2) {
            for (std::size_t l = 0; l < Lw; ++l) {
                for (std::size_t l2 = l + 1; l2 < Lw; ++l2) {
                    for (int i = 0; i < rec.probe_count(); ++i) {
                        const Eigen::VectorXd a0 = rec.blocks[l].row(i).segment(k0, Tn);
                        const Eigen::VectorXd b0 = rec.blocks[l2].row(i).segment(k0, Tn);
                        acc += std::abs(pearson(a0, b0));
                        ++count;
                    }
                }
            }
        }
        rec.mean_interwavelength_correlation = count ? acc / static_cast<double>(count) : 0.0;
    }
    return rec;
}

void write_record_csv(const FieldRecord& rec, const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open for writing: " + path);
    out << "time_ns";
    char buf[64];
    for (int l = 0; l < rec.wavelength_count(); ++l) {
        for (int i = 0; i < rec.probe_count(); ++i) {
            std::snprintf(buf, sizeof buf, "x%.4f_l%.3f", rec.probe_positions(i), rec.wavelengths_nm[l]);
            out << ',' << buf;
        }
    }
    out << '\n';
    const Eigen::Index T = rec.time_samples();
    for (Eigen::Index k = 0; k < T; ++k) {
        std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(k) * rec.timestep_ns);
        out << buf;
        for (int l = 0; l < rec.wavelength_count(); ++l) {
            for (int i = 0; i < rec.probe_count(); ++i) {
                std::snprintf(buf, sizeof buf, "%.12g", rec.blocks[l](i, k));
                out << ',' << buf;
            }
        }
        out << '\n';
    }
}

namespace {

// Binary record layout (all little-endian):
//   8 bytes  magic "SRCFREC1"
//   u64 x 6  wavelengths, probes, time samples, samples/symbol,
//            warm-up symbols, alignment symbols
//   f64 x 2  timestep_ns, symbol_period_ns
//   f64 x W  wavelengths (nm)
//   f64 x N  probe positions (um)
//   f64 x W*N*T block data, per wavelength, probe-major rows
constexpr char kRecordMagic[8] = {'S', 'R', 'C', 'F', 'R', 'E', 'C', '1'};

void put_u64(std::ofstream& o, std::uint64_t v) { o.write(reinterpret_cast<const char*>(&v), 8); }
void put_f64(std::ofstream& o, double v) { o.write(reinterpret_cast<const char*>(&v), 8); }
std::uint64_t get_u64(std::ifstream& i)
{
    std::uint64_t v = 0;
    i.read(reinterpret_cast<char*>(&v), 8);
    return v;
}
double get_f64(std::ifstream& i)
{
    double v = 0;
    i.read(reinterpret_cast<char*>(&v), 8);
    return v;
}

}  // namespace

void write_record_binary(const FieldRecord& rec, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open for writing: " + path);
    out.write(kRecordMagic, 8);
    put_u64(out, static_cast<std::uint64_t>(rec.wavelength_count()));
    put_u64(out, static_cast<std::uint64_t>(rec.probe_count()));
    put_u64(out, static_cast<std::uint64_t>(rec.time_samples()));
    put_u64(out, static_cast<std::uint64_t>(rec.samples_per_symbol));
    put_u64(out, static_cast<std::uint64_t>(rec.warmup_symbols));
    put_u64(out, static_cast<std::uint64_t>(rec.alignment_symbols));
    put_f64(out, rec.timestep_ns);
    put_f64(out, rec.symbol_period_ns);
    for (double w : rec.wavelengths_nm) put_f64(out, w);
    for (Eigen::Index i = 0; i < rec.probe_positions.size(); ++i) put_f64(out, rec.probe_positions(i));
    for (const auto& block : rec.blocks) {
        for (Eigen::Index i = 0; i < block.rows(); ++i) {
            for (Eigen::Index k = 0; k < block.cols(); ++k) put_f64(out, block(i, k));
        }
    }
}

FieldRecord read_record_binary(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open: " + path);
    char magic[8];
    in.read(magic, 8);
    if (std::memcmp(magic, kRecordMagic, 8) != 0) throw ValidationError("not a field record file: " + path);
    FieldRecord rec;
    const auto W = get_u64(in);
    const auto N = get_u64(in);
    const auto T = get_u64(in);
    rec.samples_per_symbol = static_cast<int>(get_u64(in));
    rec.warmup_symbols = static_cast<int>(get_u64(in));
    rec.alignment_symbols = static_cast<int>(get_u64(in));
    rec.timestep_ns = get_f64(in);
    rec.symbol_period_ns = get_f64(in);
    rec.wavelengths_nm.resize(W);
    for (auto& w : rec.wavelengths_nm) w = get_f64(in);
    rec.probe_positions.resize(static_cast<Eigen::Index>(N));
    for (Eigen::Index i = 0; i < rec.probe_positions.size(); ++i) rec.probe_positions(i) = get_f64(in);
    rec.blocks.resize(W);
    for (auto& block : rec.blocks) {
        block.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(T));
        for (Eigen::Index i = 0; i < block.rows(); ++i) {
            for (Eigen::Index k = 0; k < block.cols(); ++k) block(i, k) = get_f64(in);
        }
    }
    if (!in) throw ValidationError("truncated field record file: " + path);
    return rec;
}

}  // namespace specklerc
