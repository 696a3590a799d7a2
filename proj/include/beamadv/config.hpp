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

#ifndef BEAMADV_CONFIG_HPP
#define BEAMADV_CONFIG_HPP

#include "beamadv/attacks.hpp"
#include "beamadv/channel.hpp"
#include "beamadv/defenses.hpp"
#include "beamadv/model.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace beamadv
{

enum class DefenseKind
{
    adversarial_training,
    distillation
};

std::string to_string(DefenseKind d);
DefenseKind defense_from_string(const std::string &s);

/// Everything one experiment run needs. Scenario overrides apply on top of
/// every selected preset.
struct ExperimentConfig
{
    std::vector<std::string> presets = scenario_preset_names();
    /// scenario key -> value, applied in file order to each preset
    std::vector<std::pair<std::string, std::string>> scenario_overrides;

    ModelSpec model;
    TrainConfig train;

    std::vector<AttackKind> attacks = all_attacks();
    std::vector<double> rq1_epsilons{0.01, 0.3, 0.5, 0.7, 0.9};
    std::vector<double> rq3_epsilons{0.03, 0.05, 0.08, 0.10};
    /// Adds an epsilon = 0 row to the mitigation table.
    bool rq3_zero_row = true;
    /// steps, step size, momentum, random start and clip range for every attack
    AttackConfig attack;

    std::vector<DefenseKind> defenses{DefenseKind::adversarial_training, DefenseKind::distillation};
    std::vector<AttackKind> omega{AttackKind::bim};
    std::vector<double> pi{0.05, 0.10};
    std::size_t epochs_per_round = 50;
    double temperature = 20.0;
    DistillMode distill_mode = DistillMode::regression;
    /// Empty: twice the student widths.
    std::vector<std::size_t> teacher_hidden;

    std::optional<std::uint64_t> seed;
    std::filesystem::path output_dir = "out";
    int threads = 1;
    std::size_t histogram_bins = 30;

    /// Scenario configs after presets and overrides.
    std::vector<ScenarioConfig> scenarios() const;
    /// Throws a config error naming the offending key.
    void validate() const;
    /// Canonical key/value text of every setting that affects results
    /// (threads and output_dir excluded). Parses back to an equal config.
    std::string canonical_text() const;
    /// FNV-1a of canonical_text(), as 16 hex digits.
    std::string hash() const;
};

/// Parses the sectioned key/value format. Unknown sections or keys, bad
/// values and duplicate keys raise ParseError with the line number.
ExperimentConfig parse_config(const std::string &text);
ExperimentConfig load_config(const std::filesystem::path &path);

/// Sets one key as if it appeared in `section` of a config file.
void set_config_value(ExperimentConfig &cfg, const std::string &section, const std::string &key,
                      const std::string &value);

/// Section name -> documented keys, for help output.
std::map<std::string, std::vector<std::string>> config_keys();

} // namespace beamadv

#endif
