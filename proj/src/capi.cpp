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


#include "beamadv/beamadv.h"

#include "beamadv/attacks.hpp"
#include "beamadv/config.hpp"
#include "beamadv/error.hpp"
#include "beamadv/experiment.hpp"
#include "beamadv/model.hpp"

#include <json.hpp>

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <string>

using namespace beamadv;

struct ba_config
{
    ExperimentConfig cfg;
};

struct ba_experiment
{
    std::unique_ptr<Experiment> ex;
};

struct ba_dataset
{
    Dataset ds;
};

struct ba_model
{
    MlpModel model;
};

struct ba_report
{
    EvalReport report;
};

namespace
{

thread_local std::string last_error = R"({"code":0,"message":"","status":"ok"})";

void set_error(int code, const std::string &status, const std::string &message)
{
    nlohmann::json j;
    j["code"] = code;
    j["status"] = status;
    j["message"] = message;
    last_error = j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

template <class F>
ba_status guarded(F &&body)
{
    try
    {
        body();
        set_error(0, "ok", "");
        return BA_OK;
    }
    catch (const Error &e)
    {
        set_error(static_cast<int>(e.code()), std::string(error_code_name(e.code())), e.what());
        return static_cast<ba_status>(e.code());
    }
    catch (const std::bad_alloc &)
    {
        set_error(BA_ERR_INTERNAL, "internal", "out of memory");
        return BA_ERR_INTERNAL;
    }
    catch (const std::exception &e)
    {
        set_error(BA_ERR_INTERNAL, "internal", e.what());
        return BA_ERR_INTERNAL;
    }
    catch (...)
    {
        set_error(BA_ERR_INTERNAL, "internal", "unknown exception");
        return BA_ERR_INTERNAL;
    }
}

void need(const void *p, const char *what)
{
    if (!p)
        fail(ErrorCode::invalid_argument, std::string(what) + " is null");
}

char *dup_string(const std::string &s)
{
    char *out = static_cast<char *>(std::malloc(s.size() + 1));
    if (!out)
        throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void copy_matrix(const Matrix &m, double *out, std::size_t out_len, const char *what)
{
    need(out, what);
    require(out_len >= m.size(), ErrorCode::dimension_mismatch,
            std::string(what) + " holds " + std::to_string(out_len) + " values, need " + std::to_string(m.size()));
    std::copy(m.data(), m.data() + m.size(), out);
}

Matrix from_raw(const double *p, std::size_t rows, std::size_t cols, const char *what)
{
    need(p, what);
    require(rows > 0 && cols > 0, ErrorCode::invalid_argument, std::string(what) + " is empty");
    return Matrix(rows, cols, std::vector<double>(p, p + rows * cols));
}

} // namespace

extern "C" {

const char *ba_version(void)
{
    return "1.0.0";
}

const char *ba_status_name(int status)
{
    if (status == 0)
        return "ok";
    if (status < 0 || (status > 8 && status != 99))
        return "unknown";
    static thread_local std::string name;
    name = error_code_name(static_cast<ErrorCode>(status));
    return name.c_str();
}

const char *ba_last_error_json(void)
{
    return last_error.c_str();
}

void ba_string_free(char *s)
{
    std::free(s);
}

/* ---- configuration ---- */

ba_status ba_config_default(ba_config **out)
{
    return guarded([&] {
        need(out, "out");
        *out = new ba_config{};
    });
}

ba_status ba_config_parse(const char *text, ba_config **out)
{
    return guarded([&] {
        need(text, "text");
        need(out, "out");
        *out = new ba_config{parse_config(text)};
    });
}

ba_status ba_config_load(const char *path, ba_config **out)
{
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new ba_config{load_config(path)};
    });
}

ba_status ba_config_set(ba_config *cfg, const char *section, const char *key, const char *value)
{
    return guarded([&] {
        need(cfg, "config");
        need(section, "section");
        need(key, "key");
        need(value, "value");
        set_config_value(cfg->cfg, section, key, value);
    });
}

ba_status ba_config_text(const ba_config *cfg, char **out)
{
    return guarded([&] {
        need(cfg, "config");
        need(out, "out");
        *out = dup_string(cfg->cfg.canonical_text());
    });
}

ba_status ba_config_output_dir(const ba_config *cfg, char **out)
{
    return guarded([&] {
        need(cfg, "config");
        need(out, "out");
        *out = dup_string(cfg->cfg.output_dir.string());
    });
}

ba_status ba_config_scenario_count(const ba_config *cfg, size_t *out)
{
    return guarded([&] {
        need(cfg, "config");
        need(out, "out");
        *out = cfg->cfg.scenarios().size();
    });
}

ba_status ba_config_scenario_name(const ba_config *cfg, size_t index, char **out)
{
    return guarded([&] {
        need(cfg, "config");
        need(out, "out");
        const auto scenarios = cfg->cfg.scenarios();
        require(index < scenarios.size(), ErrorCode::invalid_argument,
                "scenario index " + std::to_string(index) + " out of range");
        *out = dup_string(scenarios[index].name);
    });
}

void ba_config_free(ba_config *cfg)
{
    delete cfg;
}

/* ---- experiments ---- */

ba_status ba_experiment_create(const ba_config *cfg, ba_log_fn log, void *user_data, ba_experiment **out)
{
    return guarded([&] {
        need(cfg, "config");
        need(out, "out");
        Experiment::Logger logger;
        if (log)
            logger = [log, user_data](const std::string &msg) { log(msg.c_str(), user_data); };
        *out = new ba_experiment{std::make_unique<Experiment>(cfg->cfg, std::move(logger))};
    });
}

ba_status ba_experiment_run(ba_experiment *ex, const char *study, const char *only, ba_report **out)
{
    return guarded([&] {
        need(ex, "experiment");
        need(study, "study");
        need(out, "out");
        const CellFilter filter = CellFilter::parse(only ? only : "");
        const std::string s = study;
        EvalReport report;
        if (s == "rq1")
            report = ex->ex->rq1(filter);
        else if (s == "rq2")
            report = ex->ex->rq2(filter);
        else if (s == "rq3")
            report = ex->ex->rq3(filter);
        else if (s == "attack")
            report = ex->ex->attack(filter);
        else
            fail(ErrorCode::invalid_argument, "unknown study '" + s + "' (expected rq1, rq2, rq3 or attack)");
        *out = new ba_report{std::move(report)};
    });
}

ba_status ba_experiment_partial(const ba_experiment *ex, ba_report **out)
{
    return guarded([&] {
        need(ex, "experiment");
        need(out, "out");
        *out = new ba_report{ex->ex->partial()};
    });
}

ba_status ba_experiment_dataset(ba_experiment *ex, const char *scenario, ba_dataset **out)
{
    return guarded([&] {
        need(ex, "experiment");
        need(scenario, "scenario");
        need(out, "out");
        *out = new ba_dataset{ex->ex->dataset(scenario)};
    });
}

ba_status ba_experiment_model(ba_experiment *ex, const char *scenario, const char *defense, ba_model **out)
{
    return guarded([&] {
        need(ex, "experiment");
        need(scenario, "scenario");
        need(defense, "defense");
        need(out, "out");
        *out = new ba_model{ex->ex->model(scenario, defense)};
    });
}

ba_status ba_experiment_set_model(ba_experiment *ex, const char *scenario, const char *defense,
                                  const ba_model *model)
{
    return guarded([&] {
        need(ex, "experiment");
        need(scenario, "scenario");
        need(defense, "defense");
        need(model, "model");
        ex->ex->set_model(scenario, defense, model->model);
    });
}

void ba_experiment_free(ba_experiment *ex)
{
    delete ex;
}

/* ---- datasets ---- */

ba_status ba_dataset_load_csv(const char *path, ba_dataset **out)
{
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new ba_dataset{import_dataset_csv(path)};
    });
}

ba_status ba_dataset_save_csv(const ba_dataset *ds, const char *path)
{
    return guarded([&] {
        need(ds, "dataset");
        need(path, "path");
        export_dataset_csv(ds->ds, path);
    });
}

ba_status ba_dataset_shape(const ba_dataset *ds, size_t *rows, size_t *features, size_t *labels)
{
    return guarded([&] {
        need(ds, "dataset");
        if (rows)
            *rows = ds->ds.size();
        if (features)
            *features = ds->ds.features.cols();
        if (labels)
            *labels = ds->ds.labels.cols();
    });
}

ba_status ba_dataset_features(const ba_dataset *ds, double *out, size_t out_len)
{
    return guarded([&] {
        need(ds, "dataset");
        copy_matrix(ds->ds.features, out, out_len, "feature buffer");
    });
}

ba_status ba_dataset_labels(const ba_dataset *ds, double *out, size_t out_len)
{
    return guarded([&] {
        need(ds, "dataset");
        copy_matrix(ds->ds.labels, out, out_len, "label buffer");
    });
}

void ba_dataset_free(ba_dataset *ds)
{
    delete ds;
}

/* ---- models ---- */

ba_status ba_model_load(const char *path, ba_model **out)
{
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new ba_model{load_model(path)};
    });
}

ba_status ba_model_save(const ba_model *model, const char *path)
{
    return guarded([&] {
        need(model, "model");
        need(path, "path");
        save_model(model->model, path);
    });
}

ba_status ba_model_dims(const ba_model *model, size_t *input_dim, size_t *output_dim)
{
    return guarded([&] {
        need(model, "model");
        if (input_dim)
            *input_dim = model->model.input_dim();
        if (output_dim)
            *output_dim = model->model.output_dim();
    });
}

ba_status ba_model_predict(const ba_model *model, const double *x, size_t rows, size_t cols, double *out,
                           size_t out_len)
{
    return guarded([&] {
        need(model, "model");
        const Matrix y = predict(model->model, from_raw(x, rows, cols, "input"));
        copy_matrix(y, out, out_len, "output buffer");
    });
}

ba_status ba_model_attack(const ba_model *model, const char *kind, double epsilon, uint64_t seed,
                          const double *x, const double *y, size_t rows, size_t x_cols, size_t y_cols,
                          int threads, double *x_adv, double *mean_mse)
{
    return guarded([&] {
        need(model, "model");
        need(kind, "kind");
        AttackConfig cfg;
        cfg.kind = attack_from_string(kind);
        cfg.epsilon = epsilon;
        cfg.seed = seed;
        const AttackResult r = attack_batch(model->model, from_raw(x, rows, x_cols, "input"),
                                            from_raw(y, rows, y_cols, "labels"), cfg, threads);
        copy_matrix(r.adversarial, x_adv, rows * x_cols, "adversarial buffer");
        if (mean_mse)
            *mean_mse = r.mean_mse;
    });
}

void ba_model_free(ba_model *model)
{
    delete model;
}

/* ---- reports ---- */

ba_status ba_report_load(const char *path, ba_report **out)
{
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new ba_report{load_report(path)};
    });
}

ba_status ba_report_emit(const ba_report *report, const char *dir, int svg, const char *sidecar_extra)
{
    return guarded([&] {
        need(report, "report");
        need(dir, "dir");
        EmitOptions opts;
        opts.svg = svg != 0;
        if (sidecar_extra)
            opts.sidecar_extra = sidecar_extra;
        emit_report(report->report, dir, opts);
    });
}

ba_status ba_report_json(const ba_report *report, char **out)
{
    return guarded([&] {
        need(report, "report");
        need(out, "out");
        *out = dup_string(report_to_json(report->report));
    });
}

ba_status ba_report_cell_count(const ba_report *report, size_t *out)
{
    return guarded([&] {
        need(report, "report");
        need(out, "out");
        *out = report->report.cells.size();
    });
}

void ba_report_free(ba_report *report)
{
    delete report;
}

} // extern "C"
