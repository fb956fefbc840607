#include "specklerc/mlp.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "specklerc/common.hpp"

namespace specklerc {

namespace {

struct ParamView {
    Eigen::Map<const Eigen::MatrixXd> w1;
    Eigen::Map<const Eigen::VectorXd> b1;
    Eigen::Map<const Eigen::VectorXd> w2;
    double b2;
};

ParamView unpack(const Eigen::VectorXd& params, int hidden, int inputs)
{
    const double* p = params.data();
    return ParamView{
        Eigen::Map<const Eigen::MatrixXd>(p, hidden, inputs),
        Eigen::Map<const Eigen::VectorXd>(p + static_cast<std::ptrdiff_t>(hidden) * inputs, hidden),
        Eigen::Map<const Eigen::VectorXd>(p + static_cast<std::ptrdiff_t>(hidden) * inputs + hidden, hidden),
        params(params.size() - 1)};
}

void standardize_columns(const Eigen::MatrixXd& X, Eigen::VectorXd& mean, Eigen::VectorXd& scale)
{
    const Eigen::Index n = X.rows(), c = X.cols();
    mean.resize(c);
    scale.resize(c);
    for (Eigen::Index j = 0; j < c; ++j) {
        const double mu = X.col(j).mean();
        const double sd = std::sqrt((X.col(j).array() - mu).square().sum() / static_cast<double>(n));
        if (sd <= 1e-12 * std::max(1.0, std::abs(mu))) {
            mean(j) = 0.0;
            scale(j) = 1.0;
        } else {
            mean(j) = mu;
            scale(j) = sd;
        }
    }
}

Eigen::MatrixXd apply_standardize(const Eigen::MatrixXd& X, const Eigen::VectorXd& mean,
                                  const Eigen::VectorXd& scale)
{
    return (X.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

}  // namespace

double mlp_loss(const Eigen::VectorXd& params, int hidden, const Eigen::MatrixXd& X,
                const Eigen::VectorXd& y, double l2, Eigen::VectorXd* grad)
{
    const int inputs = static_cast<int>(X.cols());
    const Eigen::Index n = X.rows();
    if (params.size() != static_cast<Eigen::Index>(hidden) * inputs + 2 * hidden + 1) {
        throw ValidationError("mlp parameter vector has the wrong length");
    }
    const ParamView pv = unpack(params, hidden, inputs);

    Eigen::MatrixXd pre = (X * pv.w1.transpose()).rowwise() + pv.b1.transpose();  // n x hidden
    Eigen::MatrixXd act = pre.cwiseMax(0.0);
    Eigen::VectorXd pred = act * pv.w2;
    pred.array() += pv.b2;
    const Eigen::VectorXd resid = pred - y;
    const double loss = resid.squaredNorm() / static_cast<double>(n) + l2 * params.squaredNorm();

    if (grad) {
        grad->resize(params.size());
        const Eigen::VectorXd r = (2.0 / static_cast<double>(n)) * resid;
        Eigen::MatrixXd dact = r * pv.w2.transpose();  // n x hidden
        dact = (pre.array() > 0.0).select(dact, 0.0);

        Eigen::Map<Eigen::MatrixXd> gw1(grad->data(), hidden, inputs);
        Eigen::Map<Eigen::VectorXd> gb1(grad->data() + static_cast<std::ptrdiff_t>(hidden) * inputs, hidden);
        Eigen::Map<Eigen::VectorXd> gw2(
            grad->data() + static_cast<std::ptrdiff_t>(hidden) * inputs + hidden, hidden);
        gw1.noalias() = dact.transpose() * X;
        gb1 = dact.colwise().sum();
        gw2.noalias() = act.transpose() * r;
        (*grad)(grad->size() - 1) = r.sum();
        *grad += 2.0 * l2 * params;
    }
    return loss;
}

MlpModel train_mlp(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const MlpOptions& options)
{
    if (X.rows() != y.size()) throw ValidationError("mlp fit: row count does not match targets");
    if (X.rows() < 2) throw ValidationError("mlp fit needs at least two rows");
    if (options.hidden < 1) throw ValidationError("mlp.hidden must be >= 1");
    if (options.l2 < 0) throw ValidationError("mlp.l2 must be >= 0");

    MlpModel model;
    standardize_columns(X, model.input_mean, model.input_scale);
    const Eigen::MatrixXd Z = apply_standardize(X, model.input_mean, model.input_scale);

    const int H = options.hidden;
    const int D = static_cast<int>(X.cols());
    Eigen::VectorXd params(static_cast<Eigen::Index>(H) * D + 2 * H + 1);
    params.setZero();
    std::mt19937_64 rng(derive_seed(options.init_seed, 0x31uL));
    const double s1 = std::sqrt(6.0 / (D + H));
    std::uniform_real_distribution<double> u1(-s1, s1);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(H) * D; ++i) params(i) = u1(rng);
    const double s2 = std::sqrt(6.0 / (H + 1));
    std::uniform_real_distribution<double> u2(-s2, s2);
    for (Eigen::Index i = 0; i < H; ++i) params(static_cast<Eigen::Index>(H) * D + H + i) = u2(rng);

    const LbfgsResult res = minimize_lbfgs(
        [&](const Eigen::VectorXd& p, Eigen::VectorXd& g) {
            return mlp_loss(p, H, Z, y, options.l2, &g);
        },
        params, options.lbfgs);

    const ParamView pv = unpack(res.x, H, D);
    model.w1 = pv.w1;
    model.b1 = pv.b1;
    model.w2 = pv.w2;
    model.b2 = pv.b2;
    model.final_loss = res.value;
    model.status = res.status;
    model.trace = res.trace;
    return model;
}

Eigen::VectorXd predict(const MlpModel& model, const Eigen::MatrixXd& X)
{
    if (X.cols() != model.w1.cols()) {
        throw ValidationError("feature width does not match the trained mlp");
    }
    const Eigen::MatrixXd Z = apply_standardize(X, model.input_mean, model.input_scale);
    Eigen::MatrixXd act = ((Z * model.w1.transpose()).rowwise() + model.b1.transpose()).cwiseMax(0.0);
    Eigen::VectorXd pred = act * model.w2;
    pred.array() += model.b2;
    return pred;
}

namespace {

std::vector<double> to_vec(const Eigen::VectorXd& v)
{
    return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd from_vec(const std::vector<double>& v)
{
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void save_mlp(const MlpModel& model, const std::string& path)
{
    nlohmann::json j;
    j["kind"] = "mlp_readout";
    j["hidden"] = model.hidden();
    j["inputs"] = model.inputs();
    std::vector<double> w1(model.w1.size());
    Eigen::Map<Eigen::MatrixXd>(w1.data(), model.w1.rows(), model.w1.cols()) = model.w1;
    j["w1"] = w1;
    j["b1"] = to_vec(model.b1);
    j["w2"] = to_vec(model.w2);
    j["b2"] = model.b2;
    j["input_mean"] = to_vec(model.input_mean);
    j["input_scale"] = to_vec(model.input_scale);
    j["final_loss"] = model.final_loss;
    j["status"] = to_string(model.status);
    j["trace"] = model.trace;
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open for writing: " + path);
    out << j.dump(2) << '\n';
}

MlpModel load_mlp(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("malformed mlp file " + path + ": " + e.what());
    }
    if (j.value("kind", "") != "mlp_readout") {
        throw ValidationError(path + " is not an mlp readout model");
    }
    MlpModel model;
    const int H = j.at("hidden").get<int>();
    const int D = j.at("inputs").get<int>();
    const auto w1 = j.at("w1").get<std::vector<double>>();
    if (static_cast<int>(w1.size()) != H * D) throw ValidationError(path + ": w1 size mismatch");
    model.w1 = Eigen::Map<const Eigen::MatrixXd>(w1.data(), H, D);
    model.b1 = from_vec(j.at("b1").get<std::vector<double>>());
    model.w2 = from_vec(j.at("w2").get<std::vector<double>>());
    model.b2 = j.at("b2").get<double>();
    model.input_mean = from_vec(j.at("input_mean").get<std::vector<double>>());
    model.input_scale = from_vec(j.at("input_scale").get<std::vector<double>>());
    model.final_loss = j.value("final_loss", 0.0);
    if (model.b1.size() != H || model.w2.size() != H || model.input_mean.size() != D ||
        model.input_scale.size() != D) {
        throw ValidationError(path + ": inconsistent mlp dimensions");
    }
    return model;
}

}  // namespace specklerc
