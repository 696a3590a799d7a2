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

#ifndef BEAMADV_DEFENSES_HPP
#define BEAMADV_DEFENSES_HPP

#include "beamadv/attacks.hpp"
#include "beamadv/channel.hpp"
#include "beamadv/model.hpp"

#include <span>
#include <string>
#include <vector>

namespace beamadv
{

/// p_i = exp(z_i / T) / sum_j exp(z_j / T), evaluated with the max shifted out.
std::vector<double> softmax_with_temperature(std::span<const double> logits, double temperature);

/// Iterative adversarial training: one round per (epsilon, attack) pair.
struct AdvTrainConfig
{
    /// Attack templates; their epsilon is replaced by each entry of `epsilons`.
    std::vector<AttackConfig> attacks;
    std::vector<double> epsilons{0.05, 0.10};
    std::size_t epochs_per_round = 50;
    /// Optimizer settings for every round; `epochs` is overridden.
    TrainConfig train;
    int threads = 1;

    void validate() const;
};

struct AdvTrainRound
{
    double epsilon = 0.0;
    AttackKind attack = AttackKind::bim;
    /// Mean MSE of the pre-round model on its own adversarial rows.
    double adversarial_mse = 0.0;
    std::vector<double> epoch_losses;
};

struct AdvTrainResult
{
    MlpModel model;
    std::vector<AdvTrainRound> rounds;
};

/// Regenerates adversarial training rows against the current model every round
/// and refits on the clean rows plus the adversarial rows, both with the true labels.
AdvTrainResult adversarial_train(MlpModel model, const Dataset &dataset, const AdvTrainConfig &cfg);

enum class DistillMode
{
    regression,
    softmax
};

std::string to_string(DistillMode m);
DistillMode distill_mode_from_string(const std::string &s);

struct DistillConfig
{
    ModelSpec teacher_spec{{1024, 512}, Activation::linear, 1.0};
    ModelSpec student_spec{{512, 256}, Activation::linear, 1.0};
    double temperature = 20.0;
    DistillMode mode = DistillMode::regression;
    TrainConfig teacher_train;
    TrainConfig student_train;
    /// When false the teacher keeps its initial weights.
    bool train_teacher = true;

    void validate() const;
};

struct DistillResult
{
    MlpModel teacher;
    MlpModel student;
    /// Teacher outputs on the training rows, the student's targets.
    Matrix soft_labels;
    std::vector<double> teacher_losses;
    std::vector<double> student_losses;
};

/// Teacher fitted to the training labels, student fitted to the teacher's
/// outputs. In softmax mode both heads are temperature softmax at T during
/// training, the teacher learns sum-normalized labels and its soft labels are
/// taken at T.
DistillResult distill(const Dataset &dataset, const DistillConfig &cfg);

/// Rows rescaled to sum to one: the targets of softmax-mode models.
Matrix distribution_labels(const Matrix &labels);

} // namespace beamadv

#endif
