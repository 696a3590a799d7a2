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

#ifndef BEAMADV_ATTACKS_HPP
#define BEAMADV_ATTACKS_HPP

#include "beamadv/matrix.hpp"
#include "beamadv/model.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace beamadv
{

enum class AttackKind
{
    fgsm,
    bim,
    pgd,
    mim
};

std::string to_string(AttackKind k);
AttackKind attack_from_string(const std::string &s);
/// fgsm, bim, pgd, mim
std::vector<AttackKind> all_attacks();

/// L-infinity evasion attack settings.
struct AttackConfig
{
    AttackKind kind = AttackKind::fgsm;
    double epsilon = 0.1;
    /// Iterations for bim, pgd and mim.
    std::size_t steps = 10;
    /// Per-step size; epsilon / steps when unset.
    std::optional<double> step_size;
    /// Momentum decay for mim.
    double momentum = 1.0;
    /// Uniform start inside the epsilon ball for pgd.
    bool random_start = true;
    double clip_lo = -1.0;
    double clip_hi = 1.0;
    std::uint64_t seed = 0;

    double alpha() const;
    void validate() const;
};

/// Called after each update with the step number (1-based) and the iterate.
/// Rows are the batch rows passed to the attack.
using IterateObserver = std::function<void(std::size_t step, const Matrix &iterate)>;

/// Single-threaded attack over the rows of x. `first_row` is the global index
/// of row 0, used to derive per-row random starts. Pure in model, x and y.
Matrix run_attack(const MlpModel &model, const Matrix &x, const Matrix &y, const AttackConfig &cfg,
                  std::size_t first_row = 0, const IterateObserver &observer = {});

/// Kind-checked entry points; each requires cfg.kind to match.
Matrix fgsm(const MlpModel &model, const Matrix &x, const Matrix &y, const AttackConfig &cfg);
Matrix bim(const MlpModel &model, const Matrix &x, const Matrix &y, const AttackConfig &cfg);
Matrix pgd(const MlpModel &model, const Matrix &x, const Matrix &y, const AttackConfig &cfg);
Matrix mim(const MlpModel &model, const Matrix &x, const Matrix &y, const AttackConfig &cfg);

struct AttackResult
{
    Matrix adversarial;
    /// adversarial - x
    Matrix perturbation;
    AttackConfig config;
    std::vector<double> per_sample_mse;
    double mean_mse = 0.0;
};

/// Attacks every row of x (in parallel) and scores predictions against y.
/// Output does not depend on `threads`.
AttackResult attack_batch(const MlpModel &model, const Matrix &x, const Matrix &y, const AttackConfig &cfg,
                          int threads = 1);

} // namespace beamadv

#endif
