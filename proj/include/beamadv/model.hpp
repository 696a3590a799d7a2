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

#ifndef BEAMADV_MODEL_HPP
#define BEAMADV_MODEL_HPP

#include "beamadv/autodiff.hpp"
#include "beamadv/channel.hpp"
#include "beamadv/matrix.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace beamadv
{

enum class Activation
{
    relu,
    linear,
    softmax
};

enum class OptimizerKind
{
    sgd,
    adam
};

std::string to_string(Activation a);
Activation activation_from_string(const std::string &s);
std::string to_string(OptimizerKind k);
OptimizerKind optimizer_from_string(const std::string &s);

/// Architecture without weights: hidden widths plus the output head.
struct ModelSpec
{
    std::vector<std::size_t> hidden{512, 256};
    /// linear or softmax
    Activation output = Activation::linear;
    /// Training-time softmax temperature; prediction always runs at 1.
    double temperature = 1.0;
};

struct TrainConfig
{
    std::size_t epochs = 200;
    std::size_t batch_size = 128;
    double learning_rate = 1e-3;
    OptimizerKind optimizer = OptimizerKind::adam;
    std::uint64_t seed = 1;
    bool shuffle = true;

    void validate() const;
};

struct TrainMeta
{
    std::uint64_t seed = 0;
    std::size_t epochs = 0;
    double learning_rate = 0.0;
    std::size_t batch_size = 0;
    OptimizerKind optimizer = OptimizerKind::adam;
    double initial_loss = 0.0;
    double final_loss = 0.0;

    friend bool operator==(const TrainMeta &, const TrainMeta &) = default;
};

struct MlpModel
{
    /// input width, hidden widths..., output width
    std::vector<std::size_t> layer_dims;
    /// one per layer; hidden layers are relu
    std::vector<Activation> activations;
    /// W0, b0, W1, b1, ...; W_l is dims[l] x dims[l+1], b_l is 1 x dims[l+1]
    std::vector<Matrix> parameters;
    double temperature = 1.0;
    TrainMeta train_meta;

    std::size_t layer_count() const noexcept { return activations.size(); }
    std::size_t input_dim() const { return layer_dims.front(); }
    std::size_t output_dim() const { return layer_dims.back(); }
    const Matrix &weight(std::size_t layer) const { return parameters[2 * layer]; }
    const Matrix &bias(std::size_t layer) const { return parameters[2 * layer + 1]; }
    Activation output_activation() const { return activations.back(); }

    /// Throws if shapes, activations or temperature are inconsistent.
    void validate() const;

    friend bool operator==(const MlpModel &, const MlpModel &) = default;
};

/// Fan-in scaled uniform initialization, U(-sqrt(6/fan_in), sqrt(6/fan_in)),
/// biases zero. Deterministic in `seed`.
MlpModel init_model(const ModelSpec &spec, std::size_t input_dim, std::size_t output_dim, std::uint64_t seed);

/// Graph for `model` with the given head temperature and loss reduction.
CompGraph build_graph(const MlpModel &model, double temperature, LossReduction reduction);

struct TrainResult
{
    MlpModel model;
    /// Mean minibatch loss of each epoch.
    std::vector<double> epoch_losses;
};

/// Fresh model from `spec`, fitted to the training split.
TrainResult train(const ModelSpec &spec, const Dataset &dataset, const TrainConfig &cfg);

/// Continues training `model` on (x, y). Optimizer state starts fresh.
/// Softmax heads train at model.temperature.
TrainResult fit(MlpModel model, const Matrix &x, const Matrix &y, const TrainConfig &cfg);

/// Model output with any softmax head evaluated at temperature 1.
Matrix predict(const MlpModel &model, const Matrix &x);

/// Per-row gradients of each row's own MSE with respect to that row's input.
/// Row i depends only on row i.
Matrix input_gradients(const MlpModel &model, const Matrix &x, const Matrix &y);

/// Gradient of MSE(predict(model, x), y) for a single sample.
std::vector<double> loss_gradient_wrt_input(const MlpModel &model, std::span<const double> x,
                                            std::span<const double> y);

inline constexpr int model_schema_version = 1;

void save_model(const MlpModel &model, const std::filesystem::path &path);
MlpModel load_model(const std::filesystem::path &path);

std::string model_to_json(const MlpModel &model);
MlpModel model_from_json(const std::string &text);

} // namespace beamadv

#endif
