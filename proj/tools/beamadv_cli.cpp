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

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace
{

using json = nlohmann::json;

struct Options
{
    std::string config_path;
    std::optional<std::string> seed;
    std::optional<std::string> out;
    std::optional<int> threads;
    std::string only;
    bool no_svg = false;
    bool quiet = false;
    std::vector<std::string> set;
    std::string model_path;
    std::string defense = "all";
    std::string report_in;
};

// Carries a failed C API status out of the command functions.
struct Failure
{
    int status;
    std::string error_json;
};

void check(ba_status s)
{
    if (s != BA_OK)
        throw Failure{s, ba_last_error_json()};
}

[[noreturn]] void usage_error(const std::string &message)
{
    json j{{"code", BA_ERR_INVALID_ARGUMENT}, {"status", "invalid_argument"}, {"message", message}};
    throw Failure{BA_ERR_INVALID_ARGUMENT, j.dump()};
}

std::string take(char *s)
{
    std::string out = s ? s : "";
    ba_string_free(s);
    return out;
}

template <class T, void (*Free)(T *)>
struct Handle
{
    T *p = nullptr;
    Handle() = default;
    Handle(const Handle &) = delete;
    Handle &operator=(const Handle &) = delete;
    ~Handle() { Free(p); }
    T **out() { return &p; }
};

using Config = Handle<ba_config, ba_config_free>;
using ExperimentH = Handle<ba_experiment, ba_experiment_free>;
using DatasetH = Handle<ba_dataset, ba_dataset_free>;
using ModelH = Handle<ba_model, ba_model_free>;
using ReportH = Handle<ba_report, ba_report_free>;

void log_line(const char *message, void *)
{
    std::fprintf(stderr, "[beamadv] %s\n", message);
}

std::string utc_text(std::chrono::system_clock::time_point t)
{
    const std::time_t tt = std::chrono::system_clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

class Runner
{
public:
    Runner(Options opts, std::string command_line)
        : opts_(std::move(opts)), command_(std::move(command_line)), start_(std::chrono::system_clock::now())
    {
    }

    void load_config()
    {
        if (opts_.config_path.empty())
            check(ba_config_default(cfg_.out()));
        else
            check(ba_config_load(opts_.config_path.c_str(), cfg_.out()));
        for (const auto &s : opts_.set)
        {
            const auto eq = s.find('=');
            const auto dot = s.find('.');
            if (eq == std::string::npos || dot == std::string::npos || dot > eq)
                usage_error("--set expects section.key=value, got '" + s + "'");
            check(ba_config_set(cfg_.p, s.substr(0, dot).c_str(), s.substr(dot + 1, eq - dot - 1).c_str(),
                                s.substr(eq + 1).c_str()));
        }
        if (opts_.seed)
            check(ba_config_set(cfg_.p, "experiment", "seed", opts_.seed->c_str()));
        if (opts_.out)
            check(ba_config_set(cfg_.p, "experiment", "output", opts_.out->c_str()));
        if (opts_.threads)
            check(ba_config_set(cfg_.p, "experiment", "threads", std::to_string(*opts_.threads).c_str()));
        char *dir = nullptr;
        check(ba_config_output_dir(cfg_.p, &dir));
        out_dir_ = take(dir);
    }

    void create_experiment()
    {
        check(ba_experiment_create(cfg_.p, opts_.quiet ? nullptr : log_line, nullptr, ex_.out()));
    }

    std::vector<std::string> scenarios() const
    {
        size_t n = 0;
        check(ba_config_scenario_count(cfg_.p, &n));
        std::vector<std::string> names;
        for (size_t i = 0; i < n; ++i)
        {
            char *s = nullptr;
            check(ba_config_scenario_name(cfg_.p, i, &s));
            std::string name = take(s);
            if (selected(name))
                names.push_back(name);
        }
        if (names.empty())
            usage_error("--only selects no configured scenario");
        return names;
    }

    void ensure_out_dir() const
    {
        std::error_code ec;
        std::filesystem::create_directories(out_dir_, ec);
        if (ec)
        {
            json j{{"code", BA_ERR_IO}, {"status", "io"},
                   {"message", "cannot create output directory " + out_dir_ + ": " + ec.message()}};
            throw Failure{BA_ERR_IO, j.dump()};
        }
    }

    std::string path(const std::string &file) const { return (std::filesystem::path(out_dir_) / file).string(); }

    void note(const std::string &what) const
    {
        if (!opts_.quiet)
            std::fprintf(stderr, "[beamadv] wrote %s\n", what.c_str());
    }

    std::string sidecar(bool partial, const std::string &error_json = {}) const
    {
        const auto now = std::chrono::system_clock::now();
        json j;
        j["command"] = command_;
        j["started_at_utc"] = utc_text(start_);
        j["elapsed_seconds"] = std::chrono::duration<double>(now - start_).count();
        if (partial)
        {
            j["partial"] = true;
            j["error"] = json::parse(error_json, nullptr, false);
        }
        return j.dump();
    }

    void emit(const ba_report *report, bool partial, const std::string &error_json = {}) const
    {
        ensure_out_dir();
        check(ba_report_emit(report, out_dir_.c_str(), opts_.no_svg ? 0 : 1, sidecar(partial, error_json).c_str()));
        size_t cells = 0;
        check(ba_report_cell_count(report, &cells));
        note(out_dir_ + (partial ? " (partial report, " : " (report, ") + std::to_string(cells) + " cells)");
    }

    // Runs a study and writes its report; on failure writes whatever finished.
    void study(const std::string &name)
    {
        ReportH report;
        const ba_status s = ba_experiment_run(ex_.p, name.c_str(), opts_.only.empty() ? nullptr : opts_.only.c_str(),
                                              report.out());
        if (s != BA_OK)
        {
            Failure f{s, ba_last_error_json()};
            flush_partial(f.error_json);
            throw f;
        }
        emit(report.p, false);
    }

    void flush_partial(const std::string &error_json)
    {
        ReportH partial;
        size_t cells = 0;
        if (ba_experiment_partial(ex_.p, partial.out()) != BA_OK || ba_report_cell_count(partial.p, &cells) != BA_OK ||
            cells == 0)
            return;
        try
        {
            emit(partial.p, true, error_json);
        }
        catch (const Failure &)
        {
        }
    }

    void generate_data()
    {
        ensure_out_dir();
        for (const auto &s : scenarios())
        {
            DatasetH ds;
            check(ba_experiment_dataset(ex_.p, s.c_str(), ds.out()));
            check(ba_dataset_save_csv(ds.p, path(s + ".csv").c_str()));
            note(path(s + ".csv"));
        }
    }

    void use_model_file()
    {
        if (opts_.model_path.empty())
            return;
        ModelH m;
        check(ba_model_load(opts_.model_path.c_str(), m.out()));
        for (const auto &s : scenarios())
            check(ba_experiment_set_model(ex_.p, s.c_str(), "undefended", m.p));
    }

    void train_models(const std::vector<std::string> &defenses)
    {
        ensure_out_dir();
        for (const auto &s : scenarios())
            for (const auto &d : defenses)
            {
                ModelH m;
                check(ba_experiment_model(ex_.p, s.c_str(), d.c_str(), m.out()));
                const std::string file = d == "undefended" ? s + ".model.json" : s + "." + d + ".model.json";
                check(ba_model_save(m.p, path(file).c_str()));
                note(path(file));
            }
    }

    void defend()
    {
        use_model_file();
        std::vector<std::string> defenses;
        if (opts_.defense == "all")
            defenses = {"adversarial_training", "distillation"};
        else if (opts_.defense == "adversarial_training" || opts_.defense == "adv")
            defenses = {"adversarial_training"};
        else if (opts_.defense == "distillation" || opts_.defense == "distill")
            defenses = {"distillation"};
        else
            usage_error("--defense must be adversarial_training, distillation or all");
        train_models(defenses);
    }

    void report()
    {
        ReportH r;
        check(ba_report_load(opts_.report_in.c_str(), r.out()));
        emit(r.p, false);
    }

    const Options &options() const { return opts_; }

private:
    bool selected(const std::string &scenario) const
    {
        // Only the scenario term matters when choosing which data or models to build.
        std::size_t pos = 0;
        while (pos <= opts_.only.size())
        {
            const auto end = std::min(opts_.only.find(',', pos), opts_.only.size());
            std::string term = opts_.only.substr(pos, end - pos);
            term.erase(0, term.find_first_not_of(" \t"));
            if (term.rfind("scenario=", 0) == 0)
            {
                std::string v = term.substr(9);
                v.erase(v.find_last_not_of(" \t") + 1);
                return v == scenario;
            }
            pos = end + 1;
        }
        return true;
    }

    Options opts_;
    std::string command_;
    std::chrono::system_clock::time_point start_;
    Config cfg_;
    ExperimentH ex_;
    std::string out_dir_;
};

std::string join_args(int argc, char **argv)
{
    std::string s;
    for (int i = 0; i < argc; ++i)
    {
        if (i)
            s += ' ';
        s += argv[i];
    }
    return s;
}

} // namespace

int main(int argc, char **argv)
{
    Options opts;
    CLI::App app{"beamadv: adversarial attacks and defenses for mmWave beam prediction models"};
    app.require_subcommand(1, 1);
    app.fallthrough();
    app.set_version_flag("--version", std::string(ba_version()));
    app.add_option("--config", opts.config_path, "Experiment config file")->check(CLI::ExistingFile);
    app.add_option("--seed", opts.seed, "Master seed (u64)");
    app.add_option("--out", opts.out, "Output directory");
    app.add_option("--threads", opts.threads, "Worker threads for data generation and attacks")
        ->check(CLI::Range(1, 1024));
    app.add_option("--only", opts.only, "Cell filter, e.g. scenario=O1_60,attack=bim,epsilon=0.1,defense=undefended");
    app.add_option("--set", opts.set, "Config override section.key=value (repeatable)");
    app.add_flag("--no-svg", opts.no_svg, "Skip SVG plots");
    app.add_flag("-q,--quiet", opts.quiet, "No progress output");

    app.add_subcommand("generate-data", "Generate each scenario's dataset as <scenario>.csv");
    app.add_subcommand("train", "Train the undefended model as <scenario>.model.json");
    auto *attack = app.add_subcommand("attack", "Evaluate the undefended model under every attack on the RQ1 grid");
    attack->add_option("--model", opts.model_path, "Use this model instead of training one")->check(CLI::ExistingFile);
    auto *defend = app.add_subcommand("defend", "Train defended models as <scenario>.<defense>.model.json");
    defend->add_option("--defense", opts.defense, "adversarial_training, distillation or all");
    defend->add_option("--model", opts.model_path, "Undefended base model for adversarial training")
        ->check(CLI::ExistingFile);
    app.add_subcommand("rq1", "MSE versus epsilon per attack");
    app.add_subcommand("rq2", "Per-sample MSE histograms and epsilon/MSE correlation");
    app.add_subcommand("rq3", "Undefended, adversarially trained and distilled models under attack");
    auto *report = app.add_subcommand("report", "Re-emit tables and plots from a report.json");
    report->add_option("--in", opts.report_in, "Report JSON")->required();

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::Success &e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError &e)
    {
        json j{{"code", BA_ERR_INVALID_ARGUMENT}, {"status", "invalid_argument"}, {"message", e.what()}};
        std::cerr << j.dump() << "\n";
        return BA_ERR_INVALID_ARGUMENT;
    }

    const std::string cmd = app.get_subcommands().front()->get_name();
    Runner run(opts, join_args(argc, argv));
    try
    {
        if (cmd == "report")
        {
            run.load_config();
            run.report();
            return 0;
        }
        run.load_config();
        run.create_experiment();
        if (cmd == "generate-data")
            run.generate_data();
        else if (cmd == "train")
            run.train_models({"undefended"});
        else if (cmd == "attack")
        {
            run.use_model_file();
            run.study("attack");
        }
        else if (cmd == "defend")
            run.defend();
        else
            run.study(cmd);
    }
    catch (const Failure &f)
    {
        std::cerr << f.error_json << "\n";
        return f.status;
    }
    return 0;
}
