#include "specklerc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace specklerc {

namespace {

struct FitResult {
    double decay = 0.0;
    double residual = 0.0;
    int points = 0;
    bool ok = false;
};

// Least squares of log(curve) against separation over the leading decaying
// window: points above the floor, truncated at the first upturn. Power
// conservation leaves a long-range interference plateau in |C| that would
// otherwise pollute the fit.
FitResult fit_exponential(const Eigen::VectorXd& sep, const Eigen::VectorXd& curve,
                          double floor_value)
{
    std::vector<double> xs, ys;
    for (Eigen::Index i = 0; i < curve.size(); ++i) {
        if (curve(i) <= floor_value) break;
        if (i > 0 && curve(i) > curve(i - 1) * (1.0 + 1e-9)) break;
        xs.push_back(sep(i));
        ys.push_back(std::log(curve(i)));
    }
    FitResult fit;
    fit.points = static_cast<int>(xs.size());
    if (fit.points < 2) return fit;
    const auto n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double det = n * sxx - sx * sx;
    if (det <= 0) return fit;
    const double slope = (n * sxy - sx * sy) / det;
    const double intercept = (sy - slope * sx) / n;
    if (slope >= -1e-12) return fit;
    double rss = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - (intercept + slope * xs[i]);
        rss += r * r;
    }
    fit.decay = -1.0 / slope;
    fit.residual = std::sqrt(rss / n);
    fit.ok = true;
    return fit;
}

struct ProbeStats {
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;
    std::vector<int> excluded;
    std::vector<int> included;
};

ProbeStats probe_stats(const Eigen::MatrixXd& block)
{
    const Eigen::Index N = block.rows();
    ProbeStats st;
    st.mean.resize(N);
    st.sd.resize(N);
    for (Eigen::Index i = 0; i < N; ++i) {
        st.mean(i) = block.row(i).mean();
        st.sd(i) = std::sqrt((block.row(i).array() - st.mean(i)).square().mean());
        const double ref = std::max(1e-30, std::abs(st.mean(i)));
        if (st.sd(i) <= 1e-12 * ref) {
            st.excluded.push_back(static_cast<int>(i));
        } else {
            st.included.push_back(static_cast<int>(i));
        }
    }
    return st;
}

}  // namespace

CorrelationReport spatial_correlation(const FieldRecord& rec)
{
    if (rec.probe_count() < 2) throw ValidationError("spatial correlation needs >= 2 probes");
    if (rec.blocks.empty()) throw ValidationError("record has no detector blocks");
    const int per_symbol = rec.timestep_ns > 0
        ? static_cast<int>(std::round(rec.symbol_period_ns / rec.timestep_ns))
        : 1;
    const Eigen::Index k0 = std::min<Eigen::Index>(
        static_cast<Eigen::Index>(rec.warmup_symbols) * per_symbol, rec.blocks[0].cols());
    const Eigen::Index T = rec.blocks[0].cols() - k0;
    if (T < 100) throw ValidationError("spatial correlation needs >= 100 time samples");

    const Eigen::MatrixXd window = rec.blocks[0].rightCols(T);
    const int N = rec.probe_count();
    const ProbeStats st = probe_stats(window);

    CorrelationReport rep;
    rep.excluded_probes = st.excluded;
    rep.matrix = Eigen::MatrixXd::Zero(N, N);
    Eigen::MatrixXd centered = window;
    for (int i : st.included) centered.row(i).array() -= st.mean(i);
    for (std::size_t a = 0; a < st.included.size(); ++a) {
        const int i = st.included[a];
        rep.matrix(i, i) = 1.0;
        for (std::size_t b = a + 1; b < st.included.size(); ++b) {
            const int j = st.included[b];
            const double c = centered.row(i).dot(centered.row(j)) /
                (static_cast<double>(T) * st.sd(i) * st.sd(j));
            rep.matrix(i, j) = c;
            rep.matrix(j, i) = c;
        }
    }

    // Mean |C| binned by probe separation (micrometer resolution 1e-6).
    std::map<long long, std::pair<double, int>> bins;
    for (std::size_t a = 0; a < st.included.size(); ++a) {
        for (std::size_t b = a; b < st.included.size(); ++b) {
            const int i = st.included[a], j = st.included[b];
            const double dx = std::abs(rec.probe_positions(i) - rec.probe_positions(j));
            auto& bin = bins[std::llround(dx * 1e6)];
            bin.first += std::abs(rep.matrix(i, j));
            bin.second += 1;
        }
    }
    rep.separations.resize(static_cast<Eigen::Index>(bins.size()));
    rep.mean_curve.resize(static_cast<Eigen::Index>(bins.size()));
    Eigen::Index idx = 0;
    for (const auto& [key, bin] : bins) {
        rep.separations(idx) = static_cast<double>(key) * 1e-6;
        rep.mean_curve(idx) = bin.first / bin.second;
        ++idx;
    }

    const FitResult fit = fit_exponential(rep.separations, rep.mean_curve, 0.05);
    rep.fit_points = fit.points;
    if (fit.ok) {
        rep.decay_constant = fit.decay;
        rep.fit_residual = fit.residual;
    } else {
        rep.status = "no_decay";
    }
    return rep;
}

CorrelationReport pulse_response_correlation(const SimPipeline& pipeline, double pulse_width_ns)
{
    pipeline.validate();
    if (pulse_width_ns < pipeline.sim_timestep_ns) {
        throw ValidationError("pulse width must be at least the simulation timestep");
    }

    // Solve once up front to size the symbol stream around the modal flight.
    WaveguideSpec spec = pipeline.waveguide;
    spec.wavelength_nm = pipeline.wavelengths_nm.front();
    const ModeBasis basis = solve_modes(spec);
    const double tau = pipeline.symbol_period_ns;
    const double tg_max = basis.max_group_delay();
    const int pre = static_cast<int>(std::ceil(tg_max / tau)) + 4;
    const int pulse_syms = std::max(1, static_cast<int>(std::llround(pulse_width_ns / tau)));
    const int post = static_cast<int>(std::ceil((tg_max + 2.0) / tau)) + 8;

    std::vector<double> symbols(pre + pulse_syms + post, 0.0);
    for (int s = 0; s < pulse_syms; ++s) symbols[pre + s] = 1.0;

    const FieldRecord rec = pipeline.record_for(symbols);
    const Eigen::MatrixXd& block = rec.blocks.front();
    const Eigen::Index T = block.cols();
    const int K = static_cast<int>(std::round(tau / rec.timestep_ns));

    Eigen::VectorXd drive(T);
    for (Eigen::Index k = 0; k < T; ++k) drive(k) = symbols[static_cast<std::size_t>(k / K)];

    const int N = rec.probe_count();
    const ProbeStats st = probe_stats(block);

    CorrelationReport rep;
    rep.excluded_probes = st.excluded;
    if (st.included.empty()) {
        rep.status = "no_decay";
        return rep;
    }

    const Eigen::Index max_shift = std::min<Eigen::Index>(
        T - 100, static_cast<Eigen::Index>(std::llround((tg_max + 2.0) / rec.timestep_ns)));
    if (max_shift < 2) throw ValidationError("record too short for pulse-response lags");

    rep.matrix.setZero(N, max_shift + 1);
    Eigen::VectorXd curve(max_shift + 1);
    for (Eigen::Index s = 0; s <= max_shift; ++s) {
        const Eigen::Index n = T - s;
        const Eigen::VectorXd u = drive.head(n);
        const double um = u.mean();
        const double usd = std::sqrt((u.array() - um).square().mean());
        double acc = 0.0;
        for (int i : st.included) {
            const Eigen::VectorXd resp = block.row(i).segment(s, n);
            const double rm = resp.mean();
            const double rsd = std::sqrt((resp.array() - rm).square().mean());
            double c = 0.0;
            if (usd > 0 && rsd > 0) {
                c = ((u.array() - um) * (resp.array() - rm)).mean() / (usd * rsd);
            }
            rep.matrix(i, s) = c;
            acc += std::abs(c);
        }
        curve(s) = acc / static_cast<double>(st.included.size());
    }

    // Re-base the lag axis at the correlation peak: the pulse arrives after
    // the modal flight time, and the memory decay starts there.
    Eigen::Index peak = 0;
    curve.maxCoeff(&peak);
    const Eigen::Index tail = curve.size() - peak;
    rep.separations.resize(tail);
    rep.mean_curve.resize(tail);
    for (Eigen::Index s = 0; s < tail; ++s) {
        rep.separations(s) = static_cast<double>(s) * rec.timestep_ns;
        rep.mean_curve(s) = curve(peak + s);
    }

    const FitResult fit = fit_exponential(rep.separations, rep.mean_curve, 0.05);
    rep.fit_points = fit.points;
    if (fit.ok) {
        rep.decay_constant = fit.decay;
        rep.fit_residual = fit.residual;
    } else {
        rep.status = "no_decay";
    }
    return rep;
}

MacEstimate mac_rate(int probes, int modes, int taps, double symbol_period_ns,
                     double footprint_mm2)
{
    if (probes < 1 || modes < 1 || taps < 1) {
        throw ValidationError("mac_rate needs positive probe, mode, and tap counts");
    }
    if (!(symbol_period_ns > 0)) throw ValidationError("mac_rate needs a positive symbol period");
    if (!(footprint_mm2 > 0)) throw ValidationError("mac_rate needs a positive footprint");

    MacEstimate est;
    est.probes = probes;
    est.modes = modes;
    est.taps = taps;
    est.symbol_period_ns = symbol_period_ns;
    est.timestep_ns = symbol_period_ns / taps;
    const double ops = 2.0 * (3.0 * probes * static_cast<double>(modes) + modes - 1.0);
    est.mac_per_second = ops / (est.timestep_ns * 1e-9);
    est.footprint_mm2 = footprint_mm2;
    est.mac_per_second_per_mm2 = est.mac_per_second / footprint_mm2;
    return est;
}

}  // namespace specklerc
