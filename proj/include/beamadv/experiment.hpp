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

#ifndef BEAMADV_EXPERIMENT_HPP
#define BEAMADV_EXPERIMENT_HPP

#include "beamadv/config.hpp"
#include "beamadv/metrics.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace beamadv
{

/// Column names of the mitigation table, in order.
inline constexpr const char *undefended_name = "undefended";

/// One (scenario, attack, epsilon, defense) evaluation.
struct ReportCell
{
    std::string scenario;
    AttackKind attack = AttackKind::fgsm;
    double epsilon = 0.0;
    std::string defense = undefended_name;
    double mean_mse = 0.0;
    std::size_t n = 0;
    Histogram histogram;
    /// max_normalized, or sum_normalized for softmax-mode distilled models
    std::string labels = "max_normalized";
    std::uint64_t model_seed = 0;
    std::uint64_t attack_seed = 0;

    friend bool operator==(const ReportCell &, const ReportCell &) = default;
};

/// Correlation between epsilon and mean MSE over the epsilon grid, plus the
/// same statistic over every (epsilon, per-sample MSE) pair.
struct CorrelationRow
{
    std::string scenario;
    AttackKind attack = AttackKind::fgsm;
    std::optional<CorrelationResult> grid;
    std::optional<CorrelationResult> pooled;
    /// Empty when both statistics are defined.
    std::string error;

    friend bool operator==(const CorrelationRow &a, const CorrelationRow &b)
    {
        auto same = [](const std::optional<CorrelationResult> &x, const std::optional<CorrelationResult> &y) {
            return x.has_value() == y.has_value() && (!x || (x->r == y->r && x->p == y->p && x->n == y->n));
        };
        return a.scenario == b.scenario && a.attack == b.attack && same(a.grid, b.grid) &&
               same(a.pooled, b.pooled) && a.error == b.error;
    }
};

/// Clean test error of each trained model.
struct ModelSummary
{
    std::string scenario;
    std::string defense = undefended_name;
    double clean_mse = 0.0;
    std::size_t n = 0;
    std::string labels = "max_normalized";
    std::uint64_t model_seed = 0;

    friend bool operator==(const ModelSummary &, const ModelSummary &) = default;
};

struct Provenance
{
    std::string config_hash;
    std::uint64_t master_seed = 0;
    /// scenario -> data seed
    std::map<std::string, std::uint64_t> data_seeds;
    std::string config_text;
    std::string filter;

    friend bool operator==(const Provenance &, const Provenance &) = default;
};

struct EvalReport
{
    /// rq1, rq2, rq3 or attack
    std::string study;
    std::vector<ReportCell> cells;
    std::vector<CorrelationRow> correlations;
    std::vector<ModelSummary> models;
    Provenance provenance;

    friend bool operator==(const EvalReport &, const EvalReport &) = default;
};

/// `key=value` terms joined by commas; keys scenario, attack, epsilon, defense.
/// A cell runs when every given term matches.
struct CellFilter
{
    std::optional<std::string> scenario;
    std::optional<AttackKind> attack;
    std::optional<double> epsilon;
    std::optional<std::string> defense;

    static CellFilter parse(const std::string &text);
    std::string text() const;
    bool empty() const { return !scenario && !attack && !epsilon && !defense; }
    bool matches_scenario(const std::string &s) const { return !scenario || *scenario == s; }
    bool matches_defense(const std::string &d) const { return !defense || *defense == d; }
    bool matches(const std::string &s, AttackKind a, double eps, const std::string &d) const;
};

/// Runs the research questions on one config. Datasets and trained models are
/// cached, so rq1, rq2 and rq3 on the same instance share them.
class Experiment
{
public:
    using Logger = std::function<void(const std::string &)>;

    explicit Experiment(ExperimentConfig config, Logger log = {});
    ~Experiment();
    Experiment(const Experiment &) = delete;
    Experiment &operator=(const Experiment &) = delete;

    const ExperimentConfig &config() const noexcept;

    EvalReport rq1(const CellFilter &filter = {});
    EvalReport rq2(const CellFilter &filter = {});
    EvalReport rq3(const CellFilter &filter = {});
    /// Undefended model under the rq1 grid: the `attack` subcommand.
    EvalReport attack(const CellFilter &filter = {});

    const Dataset &dataset(const std::string &scenario);
    /// defense is undefended, adversarial_training or distillation.
    const MlpModel &model(const std::string &scenario, const std::string &defense);
    /// Uses `model` instead of training the undefended model for `scenario`.
    void set_model(const std::string &scenario, const std::string &defense, MlpModel model);

    /// Cells completed by the study that is running or last ran.
    const EvalReport &partial() const noexcept;

private:
    struct State;
    EvalReport run_grid(const std::string &study, const std::vector<double> &epsilons, bool with_defenses,
                        bool correlations, const CellFilter &filter);
    std::unique_ptr<State> state_;
};

struct EmitOptions
{
    bool svg = true;
    /// Extra members for the timestamp sidecar (a JSON object text), may be empty.
    std::string sidecar_extra;
};

/// Writes report.json, mse_table.csv, mse_cells.csv, models.csv,
/// correlation.csv, optional SVG plots and the timestamps.json sidecar.
/// Returns the written file names.
std::vector<std::string> emit_report(const EvalReport &report, const std::filesystem::path &dir,
                                     const EmitOptions &options = {});

std::string report_to_json(const EvalReport &report);
EvalReport report_from_json(const std::string &text);
EvalReport load_report(const std::filesystem::path &path);

/// Table layout: scenario, attack, epsilon, then one column per defense.
std::string mse_table_csv(const EvalReport &report);
/// One line per cell.
std::string mse_cells_csv(const EvalReport &report);
std::string correlation_csv(const EvalReport &report);
std::string models_csv(const EvalReport &report);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

} // namespace beamadv

#endif
