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

#include "beamadv/defenses.hpp"

#include "beamadv/error.hpp"
#include "beamadv/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace beamadv
{

std::vector<double> softmax_with_temperature(std::span<const double> logits, double temperature)
{
    require(std::isfinite(temperature) && temperature > 0.0, ErrorCode::invalid_argument,
            "softmax temperature must be positive");
    require(!logits.empty(), ErrorCode::invalid_argument, "softmax of an empty vector");
    for (double z : logits)
        require(std::isfinite(z), ErrorCode::numeric, "softmax logits must be finite");
    const Matrix p = softmax_rows(Matrix::row_vector(logits), temperature);
    return {p.values().begin(), p.values().end()};
}

void AdvTrainConfig::validate() const
{
    require(!attacks.empty(), ErrorCode::config, "adversarial training needs at least one attack");
    require(!epsilons.empty(), ErrorCode::config, "adversarial training needs at least one epsilon");
    for (double e : epsilons)
        require(std::isfinite(e) && e >= 0.0, ErrorCode::config, "adversarial training epsilons must be >= 0");
    require(epochs_per_round >= 1, ErrorCode::config, "epochs_per_round must be >= 1");
    for (const auto &a : attacks)
        a.validate();
}

AdvTrainResult adversarial_train(MlpModel model, const Dataset &dataset, const AdvTrainConfig &cfg)
{
    cfg.validate();
    require(!dataset.split.train.empty(), ErrorCode::state, "adversarial training needs a train split");
    const Matrix x = dataset.train_features();
    const Matrix y = dataset.train_labels();
    const Matrix yy = vstack(y, y);

    AdvTrainResult out;
    std::size_t round = 0;
    for (double eps : cfg.epsilons)
    {
        for (const AttackConfig &tmpl : cfg.attacks)
        {
            AttackConfig attack = tmpl;
            attack.epsilon = eps;
            attack.seed = derive_seed(derive_seed(cfg.train.seed, "adv-attack"), round);
            AdvTrainRound info;
            info.epsilon = eps;
            info.attack = attack.kind;
            try
            {
                const AttackResult adv = attack_batch(model, x, y, attack, cfg.threads);
                info.adversarial_mse = adv.mean_mse;
                TrainConfig tc = cfg.train;
                tc.epochs = cfg.epochs_per_round;
                tc.seed = derive_seed(derive_seed(cfg.train.seed, "adv-fit"), round);
                TrainResult fitted = fit(std::move(model), vstack(x, adv.adversarial), yy, tc);
                model = std::move(fitted.model);
                info.epoch_losses = std::move(fitted.epoch_losses);
            }
            catch (const Error &e)
            {
                std::ostringstream msg;
                msg << "adversarial training round " << round + 1 << " (attack " << to_string(attack.kind)
                    << ", epsilon " << eps << "): " << e.what();
                throw Error(e.code(), msg.str());
            }
            out.rounds.push_back(std::move(info));
            ++round;
        }
    }
    out.model = std::move(model);
    return out;
}

std::string to_string(DistillMode m)
{
    return m == DistillMode::regression ? "regression" : "softmax";
}

DistillMode distill_mode_from_string(const std::string &s)
{
    if (s == "regression" || s == "regression-distill")
        return DistillMode::regression;
    if (s == "softmax" || s == "softmax-T")
        return DistillMode::softmax;
    fail(ErrorCode::config, "unknown distillation mode '" + s + "' (known: regression, softmax)");
}

void DistillConfig::validate() const
{
    require(std::isfinite(temperature) && temperature >= 1.0, ErrorCode::config,
            "distillation temperature must be >= 1");
    if (train_teacher)
        teacher_train.validate();
    student_train.validate();
}

Matrix distribution_labels(const Matrix &labels)
{
    Matrix out = labels;
    for (std::size_t r = 0; r < out.rows(); ++r)
    {
        double *row = out.data() + r * out.cols();
        double s = 0.0;
        for (std::size_t c = 0; c < out.cols(); ++c)
        {
            require(row[c] >= 0.0, ErrorCode::numeric, "distribution labels need non-negative entries");
            s += row[c];
        }
        require(s > 0.0, ErrorCode::numeric, "label row " + std::to_string(r) + " sums to zero");
        for (std::size_t c = 0; c < out.cols(); ++c)
            row[c] /= s;
    }
    return out;
}

DistillResult distill(const Dataset &dataset, const DistillConfig &cfg)
{
    cfg.validate();
    require(!dataset.split.train.empty(), ErrorCode::state, "distillation needs a train split");
    const bool soft = cfg.mode == DistillMode::softmax;
    ModelSpec teacher_spec = cfg.teacher_spec;
    ModelSpec student_spec = cfg.student_spec;
    if (soft)
    {
        teacher_spec.output = student_spec.output = Activation::softmax;
        teacher_spec.temperature = student_spec.temperature = cfg.temperature;
    }
    const Matrix x = dataset.train_features();
    const Matrix y = soft ? distribution_labels(dataset.train_labels()) : dataset.train_labels();

    DistillResult out;
    out.teacher = init_model(teacher_spec, x.cols(), y.cols(), derive_seed(cfg.teacher_train.seed, "teacher"));
    if (cfg.train_teacher)
    {
        try
        {
            TrainConfig tc = cfg.teacher_train;
            tc.seed = derive_seed(cfg.teacher_train.seed, "teacher");
            TrainResult t = fit(std::move(out.teacher), x, y, tc);
            out.teacher = std::move(t.model);
            out.teacher_losses = std::move(t.epoch_losses);
        }
        catch (const Error &e)
        {
            throw Error(e.code(), std::string("distillation teacher: ") + e.what());
        }
    }
    if (soft)
        out.soft_labels = CompGraph(build_graph(out.teacher, cfg.temperature, LossReduction::mean))
                              .forward(out.teacher.parameters, x)
                              .output;
    else
        out.soft_labels = predict(out.teacher, x);

    TrainConfig sc = cfg.student_train;
    sc.seed = derive_seed(cfg.student_train.seed, "student");
    MlpModel student = init_model(student_spec, x.cols(), y.cols(), sc.seed);
    try
    {
        TrainResult s = fit(std::move(student), x, out.soft_labels, sc);
        out.student = std::move(s.model);
        out.student_losses = std::move(s.epoch_losses);
    }
    catch (const Error &e)
    {
        throw Error(e.code(), std::string("distillation student: ") + e.what());
    }
    return out;
}

} // namespace beamadv
