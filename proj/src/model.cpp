// SPDX-License-Identifier: Apache-2.0
//
// beamadv: adversarial robustness laboratory for mmWave beam prediction
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "beamadv/model.hpp"

#include "beamadv/error.hpp"
#include "beamadv/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace beamadv
{

using json = nlohmann::json;

std::string to_string(Activation a)
{
    switch (a)
    {
    case Activation::relu: return "relu";
    case Activation::linear: return "linear";
    case Activation::softmax: return "softmax";
    }
    return "?";
}

Activation activation_from_string(const std::string &s)
{
    if (s == "relu")
        return Activation::relu;
    if (s == "linear")
        return Activation::linear;
    if (s == "softmax" || s == "temperature-softmax")
        return Activation::softmax;
    fail(ErrorCode::invalid_argument, "unknown activation '" + s + "'");
}

std::string to_string(OptimizerKind k)
{
    return k == OptimizerKind::sgd ? "sgd" : "adam";
}

OptimizerKind optimizer_from_string(const std::string &s)
{
    if (s == "sgd")
        return OptimizerKind::sgd;
    if (s == "adam")
        return OptimizerKind::adam;
    fail(ErrorCode::invalid_argument, "unknown optimizer '" + s + "' (expected sgd or adam)");
}

void TrainConfig::validate() const
{
    require(epochs >= 1, ErrorCode::config, "train: epochs must be >= 1");
    require(batch_size >= 1, ErrorCode::config, "train: batch_size must be >= 1");
    require(learning_rate >= 0.0 && std::isfinite(learning_rate), ErrorCode::config,
            "train: learning_rate must be finite and non-negative");
}

void MlpModel::validate() const
{
    require(layer_dims.size() >= 2, ErrorCode::invalid_argument, "model needs at least one layer");
    require(activations.size() + 1 == layer_dims.size(), ErrorCode::invalid_argument,
            "model needs one activation per layer");
    require(parameters.size() == 2 * activations.size(), ErrorCode::invalid_argument,
            "model needs a weight and a bias per layer");
    for (std::size_t l = 0; l < activations.size(); ++l)
    {
        const Matrix &w = weight(l);
        const Matrix &b = bias(l);
        require(w.rows() == layer_dims[l] && w.cols() == layer_dims[l + 1], ErrorCode::dimension_mismatch,
                "layer " + std::to_string(l) + " weight shape does not match layer_dims");
        require(b.rows() == 1 && b.cols() == layer_dims[l + 1], ErrorCode::dimension_mismatch,
                "layer " + std::to_string(l) + " bias shape does not match layer_dims");
        require(l + 1 == activations.size() || activations[l] == Activation::relu, ErrorCode::invalid_argument,
                "hidden layers must use relu");
    }
    require(output_activation() != Activation::relu, ErrorCode::invalid_argument,
            "output activation must be linear or softmax");
    require(temperature >= 1.0 && std::isfinite(temperature), ErrorCode::invalid_argument,
            "temperature must be finite and >= 1");
}

MlpModel init_model(const ModelSpec &spec, std::size_t input_dim, std::size_t output_dim, std::uint64_t seed)
{
    require(input_dim >= 1 && output_dim >= 1, ErrorCode::invalid_argument, "model dimensions must be positive");
    require(spec.output != Activation::relu, ErrorCode::invalid_argument, "output activation must be linear or softmax");
    MlpModel m;
    m.layer_dims.push_back(input_dim);
    for (std::size_t h : spec.hidden)
    {
        require(h >= 1, ErrorCode::invalid_argument, "hidden widths must be positive");
        m.layer_dims.push_back(h);
        m.activations.push_back(Activation::relu);
    }
    m.layer_dims.push_back(output_dim);
    m.activations.push_back(spec.output);
    m.temperature = spec.temperature;

    Rng rng(derive_seed(seed, "init"));
    for (std::size_t l = 0; l + 1 < m.layer_dims.size(); ++l)
    {
        const double limit = std::sqrt(6.0 / static_cast<double>(m.layer_dims[l]));
        Matrix w(m.layer_dims[l], m.layer_dims[l + 1]);
        for (double &v : w.values())
            v = rng.uniform(-limit, limit);
        m.parameters.push_back(std::move(w));
        m.parameters.emplace_back(1, m.layer_dims[l + 1]);
    }
    m.validate();
    return m;
}

CompGraph build_graph(const MlpModel &model, double temperature, LossReduction reduction)
{
    CompGraph g;
    NodeId h = g.input(model.input_dim(), "input");
    for (std::size_t l = 0; l < model.layer_count(); ++l)
    {
        const std::string tag = "layer " + std::to_string(l);
        NodeId w = g.parameter(2 * l, tag + " weight");
        NodeId b = g.parameter(2 * l + 1, tag + " bias");
        h = g.bias_add(g.matmul(h, w, tag), b, tag);
        switch (model.activations[l])
        {
        case Activation::relu: h = g.relu(h, tag + " relu"); break;
        case Activation::softmax: h = g.softmax(h, temperature, tag + " softmax"); break;
        case Activation::linear: break;
        }
    }
    g.mse_loss(h, reduction);
    return g;
}

namespace
{

double full_loss(CompGraph &graph, const MlpModel &model, const Matrix &x, const Matrix &y)
{
    return *graph.forward(model.parameters, x, &y).loss;
}

struct Adam
{
    std::vector<Matrix> m;
    std::vector<Matrix> v;
    std::size_t step = 0;
};

} // namespace

TrainResult fit(MlpModel model, const Matrix &x, const Matrix &y, const TrainConfig &cfg)
{
    cfg.validate();
    model.validate();
    require(x.rows() == y.rows() && x.rows() > 0, ErrorCode::dimension_mismatch,
            "training needs matching, non-empty feature and label rows");
    require(x.cols() == model.input_dim(), ErrorCode::dimension_mismatch,
            "training features have " + std::to_string(x.cols()) + " columns, model expects " +
                std::to_string(model.input_dim()));
    require(y.cols() == model.output_dim(), ErrorCode::dimension_mismatch,
            "training labels have " + std::to_string(y.cols()) + " columns, model outputs " +
                std::to_string(model.output_dim()));

    CompGraph graph = build_graph(model, model.temperature, LossReduction::mean);
    TrainResult result;
    const double initial = full_loss(graph, model, x, y);

    Adam adam;
    for (const Matrix &p : model.parameters)
    {
        adam.m.emplace_back(p.rows(), p.cols());
        adam.v.emplace_back(p.rows(), p.cols());
    }
    constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;

    const std::size_t n = x.rows();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i)
        order[i] = i;
    Rng rng(derive_seed(cfg.seed, "shuffle"));

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch)
    {
        if (cfg.shuffle)
            rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size)
        {
            const std::size_t end = std::min(n, start + cfg.batch_size);
            std::span<const std::size_t> idx(order.data() + start, end - start);
            const Matrix xb = x.select_rows(idx);
            const Matrix yb = y.select_rows(idx);
            const double loss = *graph.forward(model.parameters, xb, &yb).loss;
            if (!std::isfinite(loss))
                fail(ErrorCode::numeric, "training diverged at epoch " + std::to_string(epoch + 1) +
                                             " (learning rate " + std::to_string(cfg.learning_rate) + ")");
            epoch_loss += loss * static_cast<double>(end - start);
            Gradients grads = graph.backward(true, false);

            if (cfg.optimizer == OptimizerKind::sgd)
            {
                for (std::size_t p = 0; p < model.parameters.size(); ++p)
                {
                    auto w = model.parameters[p].values();
                    auto g = grads.parameters[p].values();
                    for (std::size_t i = 0; i < w.size(); ++i)
                        w[i] -= cfg.learning_rate * g[i];
                }
            }
            else
            {
                ++adam.step;
                const double c1 = 1.0 - std::pow(beta1, static_cast<double>(adam.step));
                const double c2 = 1.0 - std::pow(beta2, static_cast<double>(adam.step));
                for (std::size_t p = 0; p < model.parameters.size(); ++p)
                {
                    auto w = model.parameters[p].values();
                    auto g = grads.parameters[p].values();
                    auto m = adam.m[p].values();
                    auto v = adam.v[p].values();
                    for (std::size_t i = 0; i < w.size(); ++i)
                    {
                        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                        w[i] -= cfg.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + adam_eps);
                    }
                }
            }
        }
        epoch_loss /= static_cast<double>(n);
        if (!std::isfinite(epoch_loss))
            fail(ErrorCode::numeric, "training diverged at epoch " + std::to_string(epoch + 1) + " (learning rate " +
                                         std::to_string(cfg.learning_rate) + ")");
        result.epoch_losses.push_back(epoch_loss);
    }

    model.train_meta.seed = cfg.seed;
    model.train_meta.epochs = cfg.epochs;
    model.train_meta.learning_rate = cfg.learning_rate;
    model.train_meta.batch_size = cfg.batch_size;
    model.train_meta.optimizer = cfg.optimizer;
    model.train_meta.initial_loss = initial;
    model.train_meta.final_loss = full_loss(graph, model, x, y);
    if (!std::isfinite(model.train_meta.final_loss))
        fail(ErrorCode::numeric, "training diverged: final loss is not finite (learning rate " +
                                     std::to_string(cfg.learning_rate) + ")");
    result.model = std::move(model);
    return result;
}

TrainResult train(const ModelSpec &spec, const Dataset &dataset, const TrainConfig &cfg)
{
    require(!dataset.split.train.empty(), ErrorCode::state, "training needs a dataset with a train split");
    MlpModel model = init_model(spec, dataset.features.cols(), dataset.labels.cols(), cfg.seed);
    return fit(std::move(model), dataset.train_features(), dataset.train_labels(), cfg);
}

Matrix predict(const MlpModel &model, const Matrix &x)
{
    model.validate();
    require(x.cols() == model.input_dim(), ErrorCode::dimension_mismatch,
            "predict: features have " + std::to_string(x.cols()) + " columns, model expects " +
                std::to_string(model.input_dim()));
    CompGraph graph = build_graph(model, 1.0, LossReduction::mean);
    return graph.forward(model.parameters, x).output;
}

Matrix input_gradients(const MlpModel &model, const Matrix &x, const Matrix &y)
{
    require(x.cols() == model.input_dim(), ErrorCode::dimension_mismatch,
            "input gradient: features have " + std::to_string(x.cols()) + " columns, model expects " +
                std::to_string(model.input_dim()));
    require(y.cols() == model.output_dim() && y.rows() == x.rows(), ErrorCode::dimension_mismatch,
            "input gradient: labels do not match the model output or the feature rows");
    CompGraph graph = build_graph(model, 1.0, LossReduction::row_sum);
    graph.forward(model.parameters, x, &y);
    return graph.backward(false, true).input;
}

std::vector<double> loss_gradient_wrt_input(const MlpModel &model, std::span<const double> x,
                                            std::span<const double> y)
{
    const Matrix g = input_gradients(model, Matrix::row_vector(x), Matrix::row_vector(y));
    return {g.values().begin(), g.values().end()};
}

// ---- persistence -----------------------------------------------------------

namespace
{

json matrix_to_json(const Matrix &m)
{
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r)
        rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
    return rows;
}

Matrix matrix_from_json(const json &j, const std::string &what)
{
    if (!j.is_array())
        throw ParseError(what + " must be an array of rows");
    const std::size_t rows = j.size();
    const std::size_t cols = rows ? j[0].size() : 0;
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
    {
        if (!j[r].is_array() || j[r].size() != cols)
            throw ParseError(what + " row " + std::to_string(r) + " has the wrong length");
        for (std::size_t c = 0; c < cols; ++c)
        {
            if (!j[r][c].is_number())
                throw ParseError(what + " entry (" + std::to_string(r) + ", " + std::to_string(c) + ") is not a number");
            m(r, c) = j[r][c].get<double>();
        }
    }
    return m;
}

} // namespace

std::string model_to_json(const MlpModel &model)
{
    model.validate();
    json j;
    j["schema_version"] = model_schema_version;
    j["layer_dims"] = model.layer_dims;
    json acts = json::array();
    for (Activation a : model.activations)
        acts.push_back(to_string(a));
    j["activations"] = acts;
    j["temperature"] = model.temperature;
    json weights = json::array();
    json biases = json::array();
    for (std::size_t l = 0; l < model.layer_count(); ++l)
    {
        weights.push_back(matrix_to_json(model.weight(l)));
        biases.push_back(std::vector<double>(model.bias(l).values().begin(), model.bias(l).values().end()));
    }
    j["weights"] = weights;
    j["biases"] = biases;
    const TrainMeta &t = model.train_meta;
    j["train_meta"] = {{"seed", t.seed},
                       {"epochs", t.epochs},
                       {"learning_rate", t.learning_rate},
                       {"batch_size", t.batch_size},
                       {"optimizer", to_string(t.optimizer)},
                       {"initial_loss", t.initial_loss},
                       {"final_loss", t.final_loss}};
    return j.dump(1) + "\n";
}

MlpModel model_from_json(const std::string &text)
{
    json j;
    try
    {
        j = json::parse(text);
    }
    catch (const json::exception &e)
    {
        throw ParseError(std::string("model file is not valid JSON: ") + e.what());
    }
    try
    {
        if (!j.is_object() || !j.contains("schema_version"))
            throw ParseError("model file has no schema_version");
        const int version = j.at("schema_version").get<int>();
        if (version != model_schema_version)
            fail(ErrorCode::unsupported, "model schema_version " + std::to_string(version) +
                                             " is not supported (this build reads version " +
                                             std::to_string(model_schema_version) + ")");
        MlpModel m;
        m.layer_dims = j.at("layer_dims").get<std::vector<std::size_t>>();
        for (const auto &a : j.at("activations"))
            m.activations.push_back(activation_from_string(a.get<std::string>()));
        m.temperature = j.at("temperature").get<double>();
        const json &weights = j.at("weights");
        const json &biases = j.at("biases");
        if (!weights.is_array() || !biases.is_array() || weights.size() != biases.size())
            throw ParseError("weights and biases must be arrays of equal length");
        for (std::size_t l = 0; l < weights.size(); ++l)
        {
            m.parameters.push_back(matrix_from_json(weights[l], "weights[" + std::to_string(l) + "]"));
            const auto b = biases[l].get<std::vector<double>>();
            m.parameters.push_back(Matrix::row_vector(b));
        }
        const json &t = j.at("train_meta");
        m.train_meta.seed = t.at("seed").get<std::uint64_t>();
        m.train_meta.epochs = t.at("epochs").get<std::size_t>();
        m.train_meta.learning_rate = t.at("learning_rate").get<double>();
        m.train_meta.batch_size = t.at("batch_size").get<std::size_t>();
        m.train_meta.optimizer = optimizer_from_string(t.at("optimizer").get<std::string>());
        m.train_meta.initial_loss = t.at("initial_loss").get<double>();
        m.train_meta.final_loss = t.at("final_loss").get<double>();
        try
        {
            m.validate();
        }
        catch (const Error &e)
        {
            throw ParseError(std::string("model file is inconsistent: ") + e.what());
        }
        return m;
    }
    catch (const json::exception &e)
    {
        throw ParseError(std::string("model file has a missing or mistyped field: ") + e.what());
    }
}

void save_model(const MlpModel &model, const std::filesystem::path &path)
{
    const std::string text = model_to_json(model);
    std::ofstream f(path, std::ios::binary);
    require(static_cast<bool>(f), ErrorCode::io, "cannot open '" + path.string() + "' for writing");
    f << text;
    require(static_cast<bool>(f), ErrorCode::io, "failed writing '" + path.string() + "'");
}

MlpModel load_model(const std::filesystem::path &path)
{
    std::ifstream f(path, std::ios::binary);
    require(static_cast<bool>(f), ErrorCode::io, "cannot open '" + path.string() + "'");
    std::stringstream s;
    s << f.rdbuf();
    return model_from_json(s.str());
}

} // namespace beamadv
