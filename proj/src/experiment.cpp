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

#include "beamadv/experiment.hpp"

#include "beamadv/error.hpp"
#include "beamadv/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace beamadv
{

std::string format_double(double v)
{
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// ---- cell filter -----------------------------------------------------------

CellFilter CellFilter::parse(const std::string &text)
{
    CellFilter f;
    std::istringstream in(text);
    std::string term;
    while (std::getline(in, term, ','))
    {
        if (term.empty())
            continue;
        const auto eq = term.find('=');
        require(eq != std::string::npos, ErrorCode::invalid_argument,
                "--only: expected key=value terms, got '" + term + "'");
        const std::string key = term.substr(0, eq);
        const std::string value = term.substr(eq + 1);
        if (key == "scenario")
            f.scenario = value;
        else if (key == "attack")
            f.attack = attack_from_string(value);
        else if (key == "epsilon")
        {
            double v = 0.0;
            const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
            require(res.ec == std::errc{} && res.ptr == value.data() + value.size(), ErrorCode::invalid_argument,
                    "--only: epsilon must be a number, got '" + value + "'");
            f.epsilon = v;
        }
        else if (key == "defense")
        {
            require(value == undefended_name || value == "adversarial_training" || value == "distillation",
                    ErrorCode::invalid_argument,
                    "--only: defense must be undefended, adversarial_training or distillation");
            f.defense = value;
        }
        else
            fail(ErrorCode::invalid_argument,
                 "--only: unknown key '" + key + "' (known: scenario, attack, epsilon, defense)");
    }
    return f;
}

std::string CellFilter::text() const
{
    std::string out;
    auto add = [&](const std::string &term) { out += (out.empty() ? "" : ",") + term; };
    if (scenario)
        add("scenario=" + *scenario);
    if (attack)
        add("attack=" + to_string(*attack));
    if (epsilon)
        add("epsilon=" + format_double(*epsilon));
    if (defense)
        add("defense=" + *defense);
    return out;
}

bool CellFilter::matches(const std::string &s, AttackKind a, double eps, const std::string &d) const
{
    return matches_scenario(s) && (!attack || *attack == a) && (!epsilon || *epsilon == eps) && matches_defense(d);
}

// ---- experiment ------------------------------------------------------------

struct Experiment::State
{
    ExperimentConfig cfg;
    Logger log;
    std::vector<ScenarioConfig> scenarios;
    std::map<std::string, Dataset> datasets;
    std::map<std::pair<std::string, std::string>, MlpModel> models;
    EvalReport partial;

    std::uint64_t master() const { return *cfg.seed; }

    void say(const std::string &msg) const
    {
        if (log)
            log(msg);
    }

    const ScenarioConfig &scenario(const std::string &name) const
    {
        for (const auto &s : scenarios)
            if (s.name == name)
                return s;
        fail(ErrorCode::invalid_argument, "unknown scenario '" + name + "' in this experiment");
    }

    std::uint64_t model_seed(const std::string &scenario, const std::string &defense) const
    {
        return derive_seed(master(), "model/" + defense + "/" + scenario);
    }

    std::uint64_t attack_seed(const std::string &scenario, AttackKind kind, double eps) const
    {
        return derive_seed(master(), "attack/" + scenario + "/" + to_string(kind) + "/" + format_double(eps));
    }

    bool sum_normalized(const std::string &defense) const
    {
        return defense == "distillation" && cfg.distill_mode == DistillMode::softmax;
    }

    std::string label_mode(const std::string &defense) const
    {
        return sum_normalized(defense) ? "sum_normalized" : "max_normalized";
    }

    std::vector<std::string> defense_names(bool with_defenses) const
    {
        std::vector<std::string> out{undefended_name};
        if (with_defenses)
            for (DefenseKind d : {DefenseKind::adversarial_training, DefenseKind::distillation})
                if (std::find(cfg.defenses.begin(), cfg.defenses.end(), d) != cfg.defenses.end())
                    out.push_back(to_string(d));
        return out;
    }

    Provenance provenance(const CellFilter &filter) const
    {
        Provenance p;
        p.config_hash = cfg.hash();
        p.master_seed = master();
        for (const auto &s : scenarios)
            p.data_seeds[s.name] = s.seed;
        p.config_text = cfg.canonical_text();
        p.filter = filter.text();
        return p;
    }
};

Experiment::Experiment(ExperimentConfig config, Logger log) : state_(std::make_unique<State>())
{
    config.validate();
    state_->cfg = std::move(config);
    state_->log = std::move(log);
    state_->scenarios = state_->cfg.scenarios();
}

Experiment::~Experiment() = default;

const ExperimentConfig &Experiment::config() const noexcept
{
    return state_->cfg;
}

const EvalReport &Experiment::partial() const noexcept
{
    return state_->partial;
}

const Dataset &Experiment::dataset(const std::string &scenario)
{
    auto it = state_->datasets.find(scenario);
    if (it != state_->datasets.end())
        return it->second;
    const ScenarioConfig &sc = state_->scenario(scenario);
    state_->say("generating scenario " + scenario + " (" + std::to_string(sc.num_users) + " users)");
    return state_->datasets.emplace(scenario, generate_scenario(sc, state_->cfg.threads)).first->second;
}

void Experiment::set_model(const std::string &scenario, const std::string &defense, MlpModel model)
{
    (void)state_->scenario(scenario);
    model.validate();
    state_->models[{scenario, defense}] = std::move(model);
}

const MlpModel &Experiment::model(const std::string &scenario, const std::string &defense)
{
    const auto key = std::make_pair(scenario, defense);
    auto it = state_->models.find(key);
    if (it != state_->models.end())
        return it->second;

    const ExperimentConfig &cfg = state_->cfg;
    const Dataset &ds = dataset(scenario);
    TrainConfig tc = cfg.train;
    tc.seed = state_->model_seed(scenario, defense);
    MlpModel result;
    try
    {
        if (defense == undefended_name)
        {
            state_->say("training " + scenario + " undefended model (" + std::to_string(tc.epochs) + " epochs)");
            result = train(cfg.model, ds, tc).model;
        }
        else if (defense == "adversarial_training")
        {
            const MlpModel &base = model(scenario, undefended_name);
            AdvTrainConfig ac;
            for (AttackKind k : cfg.omega)
            {
                AttackConfig a = cfg.attack;
                a.kind = k;
                ac.attacks.push_back(a);
            }
            ac.epsilons = cfg.pi;
            ac.epochs_per_round = cfg.epochs_per_round;
            ac.train = tc;
            ac.threads = cfg.threads;
            state_->say("adversarial training " + scenario + " (" +
                        std::to_string(ac.attacks.size() * ac.epsilons.size()) + " rounds of " +
                        std::to_string(ac.epochs_per_round) + " epochs)");
            result = adversarial_train(base, ds, ac).model;
        }
        else if (defense == "distillation")
        {
            DistillConfig dc;
            dc.student_spec = cfg.model;
            dc.teacher_spec = cfg.model;
            if (cfg.teacher_hidden.empty())
                for (auto &w : dc.teacher_spec.hidden)
                    w *= 2;
            else
                dc.teacher_spec.hidden = cfg.teacher_hidden;
            dc.temperature = cfg.temperature;
            dc.mode = cfg.distill_mode;
            dc.teacher_train = tc;
            dc.student_train = tc;
            state_->say("distilling " + scenario + " (" + to_string(dc.mode) + " mode, teacher widths doubled: " +
                        (cfg.teacher_hidden.empty() ? "yes" : "no") + ")");
            result = distill(ds, dc).student;
        }
        else
            fail(ErrorCode::invalid_argument, "unknown defense '" + defense + "'");
    }
    catch (const Error &e)
    {
        throw Error(e.code(), "scenario " + scenario + ", training " + defense + " model: " + e.what());
    }
    return state_->models.emplace(key, std::move(result)).first->second;
}

EvalReport Experiment::run_grid(const std::string &study, const std::vector<double> &epsilons, bool with_defenses,
                                bool correlations, const CellFilter &filter)
{
    State &st = *state_;
    Experiment &ex = *this;
    const ExperimentConfig &cfg = st.cfg;
    EvalReport report;
    report.study = study;
    report.provenance = st.provenance(filter);
    st.partial = report;
    const auto defenses = st.defense_names(with_defenses);

    for (const ScenarioConfig &sc : st.scenarios)
    {
        const std::string &name = sc.name;
        if (!filter.matches_scenario(name))
            continue;
        std::vector<std::string> active;
        for (const auto &d : defenses)
        {
            bool any = false;
            for (AttackKind k : cfg.attacks)
                for (double e : epsilons)
                    any = any || filter.matches(name, k, e, d);
            if (any)
                active.push_back(d);
        }
        if (active.empty())
            continue;

        const Dataset &ds = ex.dataset(name);
        const Matrix x = ds.test_features();
        const Matrix y_max = ds.test_labels();
        std::optional<Matrix> y_sum;

        for (const auto &d : active)
        {
            const MlpModel &m = ex.model(name, d);
            const Matrix *y = &y_max;
            if (st.sum_normalized(d))
            {
                if (!y_sum)
                    y_sum = distribution_labels(y_max);
                y = &*y_sum;
            }
            ModelSummary ms;
            ms.scenario = name;
            ms.defense = d;
            ms.clean_mse = mse(*y, predict(m, x)).mean;
            ms.n = x.rows();
            ms.labels = st.label_mode(d);
            ms.model_seed = st.model_seed(name, d);
            report.models.push_back(ms);
            st.say(study + ": " + name + " " + d + " clean test MSE " + format_double(ms.clean_mse));
        }
        st.partial = report;

        for (AttackKind k : cfg.attacks)
        {
            std::vector<double> grid_eps, grid_mse, pooled_eps, pooled_mse;
            for (double eps : epsilons)
            {
                for (const auto &d : active)
                {
                    if (!filter.matches(name, k, eps, d))
                        continue;
                    const MlpModel &m = ex.model(name, d);
                    const Matrix &y = st.sum_normalized(d) ? *y_sum : y_max;
                    AttackConfig a = cfg.attack;
                    a.kind = k;
                    a.epsilon = eps;
                    a.seed = st.attack_seed(name, k, eps);
                    AttackResult res;
                    try
                    {
                        res = attack_batch(m, x, y, a, cfg.threads);
                    }
                    catch (const Error &e)
                    {
                        throw Error(e.code(), "scenario " + name + ", " + to_string(k) + " at epsilon " +
                                                  format_double(eps) + " against " + d + ": " + e.what());
                    }
                    ReportCell cell;
                    cell.scenario = name;
                    cell.attack = k;
                    cell.epsilon = eps;
                    cell.defense = d;
                    cell.mean_mse = res.mean_mse;
                    cell.n = res.per_sample_mse.size();
                    cell.histogram = histogram(res.per_sample_mse, cfg.histogram_bins);
                    cell.labels = st.label_mode(d);
                    cell.model_seed = st.model_seed(name, d);
                    cell.attack_seed = a.seed;
                    report.cells.push_back(cell);
                    st.partial.cells.push_back(cell);
                    if (correlations && d == undefended_name)
                    {
                        grid_eps.push_back(eps);
                        grid_mse.push_back(res.mean_mse);
                        pooled_eps.insert(pooled_eps.end(), res.per_sample_mse.size(), eps);
                        pooled_mse.insert(pooled_mse.end(), res.per_sample_mse.begin(), res.per_sample_mse.end());
                    }
                }
            }
            st.say(study + ": " + name + " " + to_string(k) + " done");
            if (correlations && grid_eps.size() == epsilons.size())
            {
                CorrelationRow row;
                row.scenario = name;
                row.attack = k;
                try
                {
                    row.grid = pearson(grid_eps, grid_mse);
                }
                catch (const Error &e)
                {
                    row.error = e.what();
                }
                try
                {
                    row.pooled = pearson(pooled_eps, pooled_mse);
                }
                catch (const Error &e)
                {
                    if (row.error.empty())
                        row.error = e.what();
                }
                report.correlations.push_back(row);
                st.partial.correlations.push_back(row);
            }
        }
    }
    st.partial = report;
    return report;
}

EvalReport Experiment::rq1(const CellFilter &filter)
{
    return run_grid("rq1", state_->cfg.rq1_epsilons, false, false, filter);
}

EvalReport Experiment::rq2(const CellFilter &filter)
{
    return run_grid("rq2", state_->cfg.rq1_epsilons, false, true, filter);
}

EvalReport Experiment::attack(const CellFilter &filter)
{
    return run_grid("attack", state_->cfg.rq1_epsilons, false, false, filter);
}

EvalReport Experiment::rq3(const CellFilter &filter)
{
    std::vector<double> eps = state_->cfg.rq3_epsilons;
    if (state_->cfg.rq3_zero_row && eps.front() != 0.0)
        eps.insert(eps.begin(), 0.0);
    return run_grid("rq3", eps, true, false, filter);
}

} // namespace beamadv
