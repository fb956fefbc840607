#include "specklerc/readout.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace specklerc {

namespace {

double nmse_of(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth)
{
    const double mean = truth.mean();
    const double denom = (truth.array() - mean).square().sum();
    if (denom <= 0) return 0.0;
    return (pred - truth).squaredNorm() / denom;
}

struct ColumnStats {
    Eigen::VectorXd mean;   // zero where centering is off
    Eigen::VectorXd scale;  // one for constant columns
    Eigen::Index shift_col = -1;  // constant column that absorbs centering
};

ColumnStats column_stats(const Eigen::MatrixXd& X)
{
    const Eigen::Index n = X.rows(), c = X.cols();
    ColumnStats st;
    st.mean = Eigen::VectorXd::Zero(c);
    st.scale = Eigen::VectorXd::Ones(c);
    Eigen::VectorXd mu(c), sd(c);
    for (Eigen::Index j = 0; j < c; ++j) {
        mu(j) = X.col(j).mean();
        sd(j) = std::sqrt((X.col(j).array() - mu(j)).square().sum() / static_cast<double>(n));
        if (st.shift_col < 0 && sd(j) <= 1e-12 * std::max(1.0, std::abs(mu(j))) && std::abs(mu(j)) > 1e-12) {
            st.shift_col = j;
        }
    }
    // Centering changes the model class unless a constant column can take
    // the shift, so without one only the scaling is applied.
    const bool center = st.shift_col >= 0;
    for (Eigen::Index j = 0; j < c; ++j) {
        const bool constant = sd(j) <= 1e-12 * std::max(1.0, std::abs(mu(j)));
        if (constant) continue;
        st.scale(j) = sd(j);
        if (center) st.mean(j) = mu(j);
    }
    return st;
}

Eigen::MatrixXd apply_stats(const Eigen::MatrixXd& X, const ColumnStats& st)
{
    Eigen::MatrixXd Z = X;
    for (Eigen::Index j = 0; j < Z.cols(); ++j) {
        Z.col(j) = (Z.col(j).array() - st.mean(j)) / st.scale(j);
    }
    return Z;
}

// Maps weights fitted on standardized columns back to the raw inputs.
Eigen::VectorXd destandardize(const Eigen::VectorXd& wz, const ColumnStats& st,
                              const Eigen::MatrixXd& X)
{
    Eigen::VectorXd w = wz.array() / st.scale.array();
    if (st.shift_col >= 0) {
        const double shift = (wz.array() * st.mean.array() / st.scale.array()).sum();
        w(st.shift_col) -= shift / X(0, st.shift_col);
    }
    return w;
}

Eigen::VectorXd solve_normal(const Eigen::MatrixXd& gram, const Eigen::VectorXd& xty,
                             double gamma, double* condition = nullptr)
{
    Eigen::MatrixXd A = gram;
    A.diagonal().array() += gamma;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    const Eigen::VectorXd d = ldlt.vectorD();
    const double dmax = d.cwiseAbs().maxCoeff();
    const double dmin = d.cwiseAbs().minCoeff();
    if (ldlt.info() != Eigen::Success || dmax <= 0 || dmin <= 1e-13 * dmax) {
        throw NumericalError("ridge normal matrix is singular; set a positive gamma");
    }
    if (condition) *condition = dmax / dmin;
    return ldlt.solve(xty);
}

std::vector<double> default_grid(double scale)
{
    std::vector<double> g;
    for (int e = -8; e <= 2; ++e) g.push_back(std::pow(10.0, e) * scale);
    return g;
}

Eigen::VectorXd fit_raw_weights(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                double gamma, bool standardize, double* condition)
{
    if (!standardize) {
        return solve_normal(X.transpose() * X, X.transpose() * y, gamma, condition);
    }
    const ColumnStats st = column_stats(X);
    const Eigen::MatrixXd Z = apply_stats(X, st);
    const Eigen::VectorXd wz = solve_normal(Z.transpose() * Z, Z.transpose() * y, gamma, condition);
    return destandardize(wz, st, X);
}

FeatureMatrix assemble_checked(const FieldRecord& rec, double symbol_period_ns,
                               int taps, int alignment_symbols)
{
    if (rec.blocks.empty()) throw ValidationError("record has no detector blocks");
    if (taps < 1) throw ValidationError("feature taps per symbol must be >= 1");
    if (std::abs(symbol_period_ns - rec.symbol_period_ns) > 1e-9 * rec.symbol_period_ns) {
        throw ValidationError("requested symbol period is misaligned with the record grid");
    }
    const int per_symbol_sim = static_cast<int>(std::round(rec.symbol_period_ns / rec.timestep_ns));
    if (per_symbol_sim < 1 ||
        std::abs(per_symbol_sim * rec.timestep_ns - rec.symbol_period_ns) > 1e-9 * rec.symbol_period_ns) {
        throw ValidationError("record timestep does not divide the symbol period");
    }
    if (per_symbol_sim % taps != 0) {
        throw ValidationError("taps per symbol must divide the simulated samples per symbol");
    }
    if (alignment_symbols < 0 || alignment_symbols > rec.warmup_symbols) {
        throw ValidationError("alignment offset outside [0, warmup] is out of range");
    }
    const int stride = per_symbol_sim / taps;

    const int N = rec.probe_count();
    const int Lw = rec.wavelength_count();
    const int total = rec.time_samples() / per_symbol_sim;
    const int rows = total - rec.warmup_symbols;
    if (rows < 1) throw ValidationError("record shorter than its warm-up region");

    FeatureMatrix fm;
    fm.probes = N;
    fm.taps = taps;
    fm.wavelengths = Lw;
    fm.first_symbol = rec.warmup_symbols - alignment_symbols;
    fm.X.resize(rows, 1 + static_cast<Eigen::Index>(N) * taps * Lw);
    fm.X.col(0).setOnes();
    for (int n = 0; n < rows; ++n) {
        const int r = rec.warmup_symbols + n;
        Eigen::Index col = 1;
        for (int l = 0; l < Lw; ++l) {
            for (int i = 0; i < N; ++i) {
                for (int k = 0; k < taps; ++k) {
                    const Eigen::Index sample = static_cast<Eigen::Index>(r) * per_symbol_sim
                        + (static_cast<Eigen::Index>(k) + 1) * stride - 1;
                    fm.X(n, col++) = rec.blocks[l](i, sample);
                }
            }
        }
    }
    if (!fm.X.allFinite()) throw NumericalError("assembled features contain non-finite values");
    return fm;
}

}  // namespace

FeatureMatrix assemble_features(const FieldRecord& rec, double symbol_period_ns,
                                int taps, int alignment_symbols)
{
    return assemble_checked(rec, symbol_period_ns, taps, alignment_symbols);
}

FeatureMatrix assemble_features(const FieldRecord& rec)
{
    return assemble_checked(rec, rec.symbol_period_ns, rec.samples_per_symbol,
                            rec.alignment_symbols);
}

ReadoutModel train_ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         const RidgeOptions& options)
{
    if (X.rows() < 2) throw ValidationError("ridge fit needs at least two rows");
    if (X.rows() != y.size()) throw ValidationError("ridge fit: row count does not match targets");
    if (!(options.validation_fraction > 0) || !(options.validation_fraction < 1)) {
        throw ValidationError("readout.validation_fraction must lie in (0, 1)");
    }

    ReadoutModel model;
    model.standardized = options.standardize;
    if (options.gamma >= 0) {
        model.gamma = options.gamma;
        model.weights = fit_raw_weights(X, y, options.gamma, options.standardize,
                                        &model.condition_estimate);
        model.train_nmse = nmse_of(X * model.weights, y);
        return model;
    }

    // Grid search on a time-ordered split: head trains, tail scores.
    const Eigen::Index n = X.rows();
    const Eigen::Index n_val = std::max<Eigen::Index>(
        1, static_cast<Eigen::Index>(std::llround(options.validation_fraction * static_cast<double>(n))));
    const Eigen::Index n_head = n - n_val;
    if (n_head < 2) throw ValidationError("ridge grid search needs at least two training rows");

    const Eigen::MatrixXd Xh = X.topRows(n_head);
    const Eigen::VectorXd yh = y.head(n_head);
    const Eigen::MatrixXd Xv = X.bottomRows(n_val);
    const Eigen::VectorXd yv = y.tail(n_val);

    const ColumnStats st = options.standardize ? column_stats(Xh) : ColumnStats{};
    Eigen::MatrixXd Zh;
    if (options.standardize) {
        Zh = apply_stats(Xh, st);
    } else {
        Zh = Xh;
    }
    const Eigen::MatrixXd gram = Zh.transpose() * Zh;
    const Eigen::VectorXd xty = Zh.transpose() * yh;

    std::vector<double> grid = options.gamma_grid;
    if (grid.empty()) grid = default_grid(gram.trace() / static_cast<double>(gram.cols()));

    double best_gamma = grid.front();
    double best_score = std::numeric_limits<double>::infinity();
    for (double g : grid) {
        Eigen::VectorXd w;
        try {
            const Eigen::VectorXd wz = solve_normal(gram, xty, g);
            w = options.standardize ? destandardize(wz, st, Xh) : wz;
        } catch (const NumericalError&) {
            continue;
        }
        const double score = nmse_of(Xv * w, yv);
        if (score < best_score) {
            best_score = score;
            best_gamma = g;
        }
    }
    if (!std::isfinite(best_score)) {
        throw NumericalError("ridge grid search found no usable gamma");
    }

    model.gamma = best_gamma;
    model.validation_nmse = best_score;
    model.weights = fit_raw_weights(X, y, best_gamma, options.standardize,
                                    &model.condition_estimate);
    model.train_nmse = nmse_of(X * model.weights, y);
    return model;
}

Eigen::VectorXd predict(const ReadoutModel& model, const Eigen::MatrixXd& X)
{
    if (X.cols() != model.weights.size()) {
        throw ValidationError("feature width does not match the trained readout");
    }
    return X * model.weights;
}

namespace {

std::vector<std::string> column_labels(const ReadoutModel& model)
{
    const Eigen::Index cols = model.weights.size();
    std::vector<std::string> labels;
    labels.reserve(cols);
    const bool layered = model.probes > 0 && model.taps > 0 && model.wavelengths > 0 &&
        cols == 1 + static_cast<Eigen::Index>(model.probes) * model.taps * model.wavelengths;
    labels.push_back("bias");
    if (layered) {
        for (int l = 0; l < model.wavelengths; ++l) {
            for (int i = 0; i < model.probes; ++i) {
                for (int k = 0; k < model.taps; ++k) {
                    labels.push_back("l" + std::to_string(l) + "_i" + std::to_string(i) +
                                     "_k" + std::to_string(k));
                }
            }
        }
    } else {
        for (Eigen::Index j = 1; j < cols; ++j) labels.push_back("c" + std::to_string(j));
    }
    return labels;
}

}  // namespace

void save_readout(const ReadoutModel& model, const std::string& path)
{
    nlohmann::json j;
    j["kind"] = "ridge_readout";
    j["gamma"] = model.gamma;
    j["train_nmse"] = model.train_nmse;
    j["validation_nmse"] = model.validation_nmse;
    j["condition_estimate"] = model.condition_estimate;
    j["normalization"] = {{"standardized", model.standardized},
                          {"note", "weights act on raw features"}};
    j["layout"] = {{"probes", model.probes}, {"taps", model.taps}, {"wavelengths", model.wavelengths}};
    j["column_labels"] = column_labels(model);
    j["config_hash"] = model.config_hash;
    j["weights"] = std::vector<double>(model.weights.data(), model.weights.data() + model.weights.size());
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open for writing: " + path);
    out << j.dump(2) << '\n';
}

ReadoutModel load_readout(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("malformed readout file " + path + ": " + e.what());
    }
    if (j.value("kind", "") != "ridge_readout") {
        throw ValidationError(path + " is not a ridge readout model");
    }
    ReadoutModel model;
    model.gamma = j.at("gamma").get<double>();
    model.train_nmse = j.value("train_nmse", 0.0);
    model.validation_nmse = j.value("validation_nmse", 0.0);
    model.condition_estimate = j.value("condition_estimate", 0.0);
    model.standardized = j.value("normalization", nlohmann::json::object()).value("standardized", false);
    const auto layout = j.value("layout", nlohmann::json::object());
    model.probes = layout.value("probes", 0);
    model.taps = layout.value("taps", 0);
    model.wavelengths = layout.value("wavelengths", 0);
    model.config_hash = j.value("config_hash", "");
    const auto w = j.at("weights").get<std::vector<double>>();
    model.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    return model;
}

}  // namespace specklerc
