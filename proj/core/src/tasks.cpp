#include "specklerc/tasks.hpp"

#include <cmath>
#include <deque>
#include <fstream>
#include <random>
#include <sstream>

namespace specklerc {

namespace {

TaskDataset finish_dataset(std::vector<double> raw, int train_len, int test_len,
                           const std::string& origin)
{
    if (train_len < 2 || test_len < 1) {
        throw ValidationError("task split lengths must be positive");
    }
    const auto n = static_cast<Eigen::Index>(raw.size());
    if (n < train_len + test_len + 2) {
        throw ValidationError(origin + ": series too short for the requested split");
    }
    Eigen::Map<Eigen::VectorXd> x(raw.data(), n);
    const double mean = x.mean();
    const double sd = std::sqrt((x.array() - mean).square().sum() / static_cast<double>(n));
    if (sd <= 1e-12 * std::max(1.0, std::abs(mean))) {
        throw ValidationError(origin + ": series has zero variance under normalization");
    }
    TaskDataset ds;
    ds.u = (x.array() - mean) / sd;
    ds.targets = ds.u.segment(1, n - 1);
    ds.train_len = train_len;
    ds.test_len = test_len;
    ds.raw_mean = mean;
    ds.raw_scale = sd;
    return ds;
}

// Delay-differential feedback flow dx/dt = a x_d / (1 + x_d^10) - b x with
// x_d = x(t - delay). Classic chaotic regime at delay 17.
std::vector<double> delay_feedback_series(std::uint64_t seed, int keep, int subsample,
                                          double transient)
{
    constexpr double kA = 0.2, kB = 0.1, kDelay = 17.0, kDt = 0.1;
    const int delay_steps = static_cast<int>(std::llround(kDelay / kDt));
    std::mt19937_64 rng(derive_seed(seed, 0x4D47uL));
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double x0 = 1.2 + 0.2 * u01(rng);

    std::deque<double> history(delay_steps + 1, x0);  // history.back() = x(t)
    const auto delayed = [&](double frac) {
        // x(t + frac*dt - delay), linear between stored steps
        const double a = history[0];
        const double b = history[1];
        return a + frac * (b - a);
    };
    const auto f = [&](double x, double xd) {
        const double p = std::pow(xd, 10);
        return kA * xd / (1.0 + p) - kB * x;
    };

    const int transient_steps = static_cast<int>(std::llround(transient / kDt));
    const int total_steps = transient_steps + keep * subsample;
    std::vector<double> out;
    out.reserve(keep);
    double x = x0;
    for (int step = 0; step < total_steps; ++step) {
        const double xd0 = delayed(0.0);
        const double xdh = delayed(0.5);
        const double xd1 = delayed(1.0);
        const double k1 = f(x, xd0);
        const double k2 = f(x + 0.5 * kDt * k1, xdh);
        const double k3 = f(x + 0.5 * kDt * k2, xdh);
        const double k4 = f(x + kDt * k3, xd1);
        x += kDt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        history.pop_front();
        history.push_back(x);
        if (step >= transient_steps && (step - transient_steps) % subsample == subsample - 1) {
            out.push_back(x);
        }
    }
    return out;
}

std::vector<double> lorenz_series(std::uint64_t seed, int keep, int subsample, double transient)
{
    constexpr double kSigma = 10.0, kRho = 28.0, kBeta = 8.0 / 3.0, kDt = 0.01;
    std::mt19937_64 rng(derive_seed(seed, 0x4C5AuL));
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double x = 1.0 + 0.5 * u01(rng), y = 1.0, z = 1.05;

    const auto step = [&]() {
        const auto fx = [](double a, double b, double) { return kSigma * (b - a); };
        const auto fy = [](double a, double b, double c) { return a * (kRho - c) - b; };
        const auto fz = [](double a, double b, double c) { return a * b - kBeta * c; };
        const double k1x = fx(x, y, z), k1y = fy(x, y, z), k1z = fz(x, y, z);
        const double x2 = x + 0.5 * kDt * k1x, y2 = y + 0.5 * kDt * k1y, z2 = z + 0.5 * kDt * k1z;
        const double k2x = fx(x2, y2, z2), k2y = fy(x2, y2, z2), k2z = fz(x2, y2, z2);
        const double x3 = x + 0.5 * kDt * k2x, y3 = y + 0.5 * kDt * k2y, z3 = z + 0.5 * kDt * k2z;
        const double k3x = fx(x3, y3, z3), k3y = fy(x3, y3, z3), k3z = fz(x3, y3, z3);
        const double x4 = x + kDt * k3x, y4 = y + kDt * k3y, z4 = z + kDt * k3z;
        const double k4x = fx(x4, y4, z4), k4y = fy(x4, y4, z4), k4z = fz(x4, y4, z4);
        x += kDt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
        y += kDt / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y);
        z += kDt / 6.0 * (k1z + 2 * k2z + 2 * k3z + k4z);
    };

    const int transient_steps = static_cast<int>(std::llround(transient / kDt));
    std::vector<double> out;
    out.reserve(keep);
    for (int s = 0; s < transient_steps; ++s) step();
    for (int i = 0; i < keep; ++i) {
        for (int s = 0; s < subsample; ++s) step();
        out.push_back(x);
    }
    return out;
}

std::vector<double> to_std(const Eigen::VectorXd& v)
{
    return std::vector<double>(v.data(), v.data() + v.size());
}

// Rows of the assembled features map to input symbols first_symbol + n.
// Checks that the requested chronological split fits before the series ends.
void check_split(const FeatureMatrix& fm, Eigen::Index target_len, int row_offset,
                 int train_len, int test_len)
{
    const Eigen::Index last_needed = fm.first_symbol + row_offset + train_len + test_len - 1;
    if (row_offset + train_len + test_len > fm.rows() || last_needed >= target_len) {
        throw ValidationError("series too short for the requested split after warm-up");
    }
}

}  // namespace

TaskDataset load_series(const std::string& path, int train_len, int test_len)
{
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open series file: " + path);
    std::vector<double> raw;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        std::istringstream ss(line);
        double v = 0;
        if (!(ss >> v)) {
            throw ValidationError(path + ": non-numeric value on line " + std::to_string(line_no));
        }
        std::string rest;
        if (ss >> rest) {
            throw ValidationError(path + ": trailing content on line " + std::to_string(line_no));
        }
        raw.push_back(v);
    }
    return finish_dataset(std::move(raw), train_len, test_len, path);
}

TaskDataset generate_series(const SurrogateSpec& spec, std::uint64_t seed,
                            int train_len, int test_len)
{
    if (spec.length < train_len + test_len + 2) {
        throw ValidationError("surrogate length too short for the requested split");
    }
    if (spec.subsample < 1) throw ValidationError("surrogate subsample must be >= 1");
    std::vector<double> raw = spec.kind == SurrogateSpec::Kind::MackeyGlass
        ? delay_feedback_series(seed, spec.length, spec.subsample, spec.transient)
        : lorenz_series(seed, spec.length, spec.subsample, spec.transient);
    return finish_dataset(std::move(raw), train_len, test_len, "surrogate series");
}

double nmse(const Eigen::VectorXd& y, const Eigen::VectorXd& y_tag)
{
    if (y.size() != y_tag.size() || y.size() < 2) {
        throw ValidationError("nmse needs two equal-length vectors of size >= 2");
    }
    const double mean = y_tag.mean();
    const double denom = (y_tag.array() - mean).square().sum();
    if (denom <= 0) throw ValidationError("nmse target has zero variance");
    return (y - y_tag).squaredNorm() / denom;
}

double pearson_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    if (a.size() != b.size() || a.size() < 2) {
        throw ValidationError("correlation needs two equal-length vectors of size >= 2");
    }
    const Eigen::ArrayXd da = a.array() - a.mean();
    const Eigen::ArrayXd db = b.array() - b.mean();
    const double den = std::sqrt(da.square().sum() * db.square().sum());
    if (den <= 0) return 0.0;
    return (da * db).sum() / den;
}

PredictionReport run_prediction_task(const TaskDataset& data, const SimPipeline& pipeline,
                                     const RidgeOptions& readout)
{
    pipeline.validate();
    const FeatureMatrix fm = pipeline.features_for(to_std(data.u));
    check_split(fm, data.targets.size(), 0, data.train_len, data.test_len);

    const int g0 = fm.first_symbol;
    const Eigen::MatrixXd Xtr = fm.X.topRows(data.train_len);
    const Eigen::VectorXd ytr = data.targets.segment(g0, data.train_len);
    const Eigen::MatrixXd Xte = fm.X.middleRows(data.train_len, data.test_len);
    const Eigen::VectorXd yte = data.targets.segment(g0 + data.train_len, data.test_len);

    PredictionReport rep;
    rep.model = train_ridge(Xtr, ytr, readout);
    rep.model.probes = fm.probes;
    rep.model.taps = fm.taps;
    rep.model.wavelengths = fm.wavelengths;
    rep.feature_columns = fm.cols();
    rep.train_nmse = rep.model.train_nmse;
    rep.test_pred = predict(rep.model, Xte);
    rep.test_truth = yte;
    rep.test_nmse = nmse(rep.test_pred, yte);
    rep.test_correlation = pearson_correlation(rep.test_pred, yte);

    if (g0 >= 2) {
        const int rows = data.train_len + data.test_len;
        Eigen::MatrixXd lag(rows, 4);
        for (int n = 0; n < rows; ++n) {
            const int g = g0 + n;
            lag(n, 0) = 1.0;
            lag(n, 1) = data.u(g);
            lag(n, 2) = data.u(g - 1);
            lag(n, 3) = data.u(g - 2);
        }
        const ReadoutModel ar = train_ridge(lag.topRows(data.train_len), ytr, RidgeOptions{});
        rep.baseline_test_nmse = nmse(predict(ar, lag.bottomRows(data.test_len)), yte);
    } else {
        rep.baseline_test_nmse = std::numeric_limits<double>::quiet_NaN();
    }
    return rep;
}

MemoryReport run_memory_task(const SimPipeline& pipeline, const RidgeOptions& readout,
                             int max_delay, std::uint64_t seed, int train_len, int test_len,
                             bool paper_numerator)
{
    if (max_delay < 1) throw ValidationError("memory task max_delay must be >= 1");
    pipeline.validate();

    const int margin = 64;
    const int len = train_len + test_len + max_delay + margin;
    std::mt19937_64 rng(derive_seed(seed, 0x6D656DuL));
    std::uniform_real_distribution<double> sym(-1.0, 1.0);
    std::vector<double> u(len);
    for (double& v : u) v = sym(rng);

    const FeatureMatrix fm = pipeline.features_for(u);
    const int row_offset = std::max(0, max_delay - fm.first_symbol);
    check_split(fm, len - 1, row_offset, train_len, test_len);

    const Eigen::MatrixXd Xtr = fm.X.middleRows(row_offset, train_len);
    const Eigen::MatrixXd Xte = fm.X.middleRows(row_offset + train_len, test_len);
    const int g0 = fm.first_symbol + row_offset;

    MemoryReport rep;
    rep.input_seed = seed;
    rep.m.resize(max_delay + 1);
    for (int i = 0; i <= max_delay; ++i) {
        Eigen::VectorXd ytr(train_len), yte(test_len);
        for (int n = 0; n < train_len; ++n) {
            const int g = g0 + n;
            ytr(n) = u[g + 1 - i] - u[g - i];
        }
        for (int n = 0; n < test_len; ++n) {
            const int g = g0 + train_len + n;
            yte(n) = u[g + 1 - i] - u[g - i];
        }
        const ReadoutModel model = train_ridge(Xtr, ytr, readout);
        const Eigen::VectorXd pred = predict(model, Xte);
        if (paper_numerator) {
            const double num = (pred.array() * yte.array()).mean();
            const double vy = (pred.array() - pred.mean()).square().mean();
            const double vt = (yte.array() - yte.mean()).square().mean();
            rep.m(i) = vy > 0 && vt > 0 ? num * num / (vy * vt) : 0.0;
        } else {
            const double r = pearson_correlation(pred, yte);
            rep.m(i) = r * r;
        }
    }
    for (int i = 0; i <= max_delay; ++i) {
        if (rep.m(i) > 0.5) rep.effective_memory = i;
    }
    return rep;
}

PhaseReport run_phase_task(const SimPipeline& pipeline, PhaseReadout kind,
                           const RidgeOptions& readout, const MlpOptions& mlp,
                           double phase_max_rad, double phase_step_rad, std::uint64_t seed,
                           int train_len, int test_len)
{
    if (!(phase_max_rad > 0)) throw ValidationError("phase_max_rad must be positive");
    SimPipeline phase_pipe = pipeline;
    phase_pipe.depth_rad = 1.0;  // symbols carry the optical phase directly
    phase_pipe.validate();

    const int margin = 64;
    const int len = train_len + test_len + margin;
    std::mt19937_64 rng(derive_seed(seed, 0x7068uL));
    std::uniform_real_distribution<double> dist(0.0, phase_max_rad);
    std::vector<double> phi(len);
    if (phase_step_rad > 0) {
        std::uniform_real_distribution<double> step(-phase_step_rad, phase_step_rad);
        double x = dist(rng);
        phi[0] = x;
        for (int n = 1; n < len; ++n) {
            x += step(rng);
            // Reflect back into [0, phase_max]; keeps the marginal uniform.
            while (x < 0.0 || x > phase_max_rad) {
                if (x < 0.0) x = -x;
                if (x > phase_max_rad) x = 2.0 * phase_max_rad - x;
            }
            phi[n] = x;
        }
    } else {
        for (double& v : phi) v = dist(rng);
    }

    const FeatureMatrix fm = phase_pipe.features_for(phi);
    // Increment targets need phi(g - 1); the warm-up offset guarantees g >= 1.
    const int row_offset = fm.first_symbol >= 1 ? 0 : 1 - fm.first_symbol;
    check_split(fm, len, row_offset, train_len, test_len);

    const int g0 = fm.first_symbol + row_offset;
    const auto increments = [&](int start, int count) {
        Eigen::VectorXd d(count);
        for (int n = 0; n < count; ++n) d(n) = phi[start + n] - phi[start + n - 1];
        return d;
    };
    const Eigen::MatrixXd Xtr = fm.X.middleRows(row_offset, train_len);
    const Eigen::VectorXd ytr = increments(g0, train_len);
    const Eigen::MatrixXd Xte = fm.X.middleRows(row_offset + train_len, test_len);
    const Eigen::VectorXd yte = increments(g0 + train_len, test_len);

    PhaseReport rep;
    if (kind == PhaseReadout::Mlp) {
        rep.used_mlp = true;
        MlpOptions opts = mlp;
        opts.init_seed = derive_seed(seed, 0x6E6EuL);
        rep.mlp_model = train_mlp(Xtr, ytr, opts);
        rep.test_pred = predict(*rep.mlp_model, Xte);
    } else {
        rep.ridge_model = train_ridge(Xtr, ytr, readout);
        rep.ridge_model->probes = fm.probes;
        rep.ridge_model->taps = fm.taps;
        rep.ridge_model->wavelengths = fm.wavelengths;
        rep.test_pred = predict(*rep.ridge_model, Xte);
    }
    rep.test_truth = yte;
    rep.nmse = nmse(rep.test_pred, yte);
    rep.correlation = pearson_correlation(rep.test_pred, yte);
    rep.rmse_over_phimax =
        std::sqrt((rep.test_pred - yte).squaredNorm() / static_cast<double>(test_len)) / phase_max_rad;

    rep.phase_true.resize(test_len);
    rep.phase_reconstructed.resize(test_len);
    double acc = phi[g0 + train_len - 1];
    for (int n = 0; n < test_len; ++n) {
        acc += rep.test_pred(n);
        rep.phase_true(n) = phi[g0 + train_len + n];
        rep.phase_reconstructed(n) = acc;
    }
    rep.reconstruction_drift =
        std::abs(rep.phase_reconstructed(test_len - 1) - rep.phase_true(test_len - 1));
    return rep;
}

}  // namespace specklerc
