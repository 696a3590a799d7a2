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

#include "doctest.h"

#include "beamadv/error.hpp"
#include "beamadv/experiment.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace beamadv;
namespace fs = std::filesystem;

namespace
{

ExperimentConfig tiny_config()
{
    auto c = parse_config(R"(
[scenario]
presets = custom
name = tiny
num_antennas = 4
num_pilot_subcarriers = 2
codebook_size = 4
num_users = 150
[model]
hidden = 16, 8
[train]
epochs = 8
batch_size = 32
[attacks]
rq1_epsilons = 0.01, 0.1, 0.3
rq3_epsilons = 0.05, 0.1
steps = 3
[defenses]
pi = 0.1
epochs_per_round = 3
teacher_hidden = 24
[experiment]
seed = 77
histogram_bins = 8
)");
    return c;
}

std::string read_file(const fs::path &p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t line_count(const std::string &s)
{
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

fs::path scratch(const std::string &name)
{
    const auto p = fs::temp_directory_path() / ("beamadv_experiment_" + name);
    fs::remove_all(p);
    return p;
}

} // namespace

TEST_CASE("cell filter parsing")
{
    const auto f = CellFilter::parse("scenario=tiny,attack=BIM,epsilon=0.1,defense=distillation");
    CHECK(*f.scenario == "tiny");
    CHECK(*f.attack == AttackKind::bim);
    CHECK(*f.epsilon == 0.1);
    CHECK(*f.defense == "distillation");
    CHECK(f.text() == "scenario=tiny,attack=bim,epsilon=0.1,defense=distillation");
    CHECK(f.matches("tiny", AttackKind::bim, 0.1, "distillation"));
    CHECK_FALSE(f.matches("tiny", AttackKind::bim, 0.10000001, "distillation"));
    CHECK(CellFilter::parse("").empty());
    CHECK_THROWS_AS(CellFilter::parse("colour=red"), Error);
    CHECK_THROWS_AS(CellFilter::parse("epsilon=big"), Error);
    CHECK_THROWS_AS(CellFilter::parse("defense=wall"), Error);
    CHECK_THROWS_AS(CellFilter::parse("attack"), Error);
}

TEST_CASE("experiment needs a master seed")
{
    auto c = tiny_config();
    c.seed.reset();
    CHECK_THROWS_AS(Experiment{c}, Error);
}

TEST_CASE("zero budget grid reports clean error for every attack")
{
    auto c = tiny_config();
    c.rq1_epsilons = {0.0};
    Experiment ex(c);
    const auto r = ex.rq1();
    REQUIRE(r.models.size() == 1);
    REQUIRE(r.cells.size() == 4);
    for (const auto &cell : r.cells)
    {
        CHECK(cell.mean_mse == r.models[0].clean_mse);
        CHECK(cell.n == r.models[0].n);
    }
}

TEST_CASE("rq1, rq2 and rq3 share models and seeds")
{
    auto c = tiny_config();
    c.rq3_epsilons = {0.1, 0.3};
    Experiment ex(c);
    const auto r1 = ex.rq1();
    CHECK(r1.study == "rq1");
    CHECK(r1.cells.size() == 4 * 3);
    CHECK(r1.correlations.empty());
    for (const auto &cell : r1.cells)
    {
        CHECK(cell.histogram.n == cell.n);
        CHECK(cell.histogram.counts.size() == 8);
        CHECK(cell.mean_mse >= 0.0);
    }

    const auto r2 = ex.rq2();
    CHECK(r2.cells == r1.cells);
    REQUIRE(r2.correlations.size() == 4);
    for (const auto &row : r2.correlations)
    {
        REQUIRE(row.grid);
        REQUIRE(row.pooled);
        CHECK(row.grid->n == 3);
        CHECK(row.pooled->n == 3 * r1.models[0].n);
        CHECK(row.error.empty());
    }

    const auto r3 = ex.rq3();
    std::set<std::string> defenses;
    for (const auto &cell : r3.cells)
        defenses.insert(cell.defense);
    CHECK(defenses == std::set<std::string>{"undefended", "adversarial_training", "distillation"});
    CHECK(r3.cells.size() == 4 * 3 * 3); // attacks x {0, 0.1, 0.3} x models
    CHECK(r3.models.size() == 3);
    std::size_t matched = 0;
    for (const auto &a : r3.cells)
    {
        if (a.defense != undefended_name)
            continue;
        if (a.epsilon == 0.0)
            CHECK(a.mean_mse == r3.models[0].clean_mse);
        for (const auto &b : r1.cells)
            if (b.attack == a.attack && b.epsilon == a.epsilon)
            {
                CHECK(a == b);
                ++matched;
            }
    }
    CHECK(matched == 8);
    for (const auto &a : r3.cells)
        if (a.epsilon == 0.0)
            for (const auto &m : r3.models)
                if (m.defense == a.defense)
                    CHECK(a.mean_mse == m.clean_mse);
}

TEST_CASE("constant model gives an undefined correlation cell")
{
    auto c = tiny_config();
    Experiment ex(c);
    const auto &ds = ex.dataset("tiny");
    MlpModel zero = init_model(c.model, ds.features.cols(), ds.labels.cols(), 1);
    for (auto &p : zero.parameters)
        p.fill(0.0);
    ex.set_model("tiny", undefended_name, zero);
    const auto r = ex.rq2();
    REQUIRE(r.correlations.size() == 4);
    for (const auto &row : r.correlations)
    {
        CHECK_FALSE(row.grid);
        CHECK(row.error.find("undefined correlation") != std::string::npos);
    }
    const std::string csv = correlation_csv(r);
    CHECK(csv.find("undefined correlation") != std::string::npos);
}

TEST_CASE("single-cell replay and thread independence")
{
    auto c = tiny_config();
    const auto full = Experiment(c).rq3();

    auto threaded = c;
    threaded.threads = 3;
    CHECK(report_to_json(Experiment(threaded).rq3()) == report_to_json(full));

    const auto only = Experiment(c).rq3(CellFilter::parse("attack=pgd,epsilon=0.1,defense=adversarial_training"));
    REQUIRE(only.cells.size() == 1);
    bool found = false;
    for (const auto &cell : full.cells)
        if (cell.attack == AttackKind::pgd && cell.epsilon == 0.1 && cell.defense == "adversarial_training")
        {
            CHECK(cell == only.cells[0]);
            found = true;
        }
    CHECK(found);
    CHECK(only.provenance.filter == "attack=pgd,epsilon=0.1,defense=adversarial_training");

    const auto none = Experiment(c).rq3(CellFilter::parse("scenario=elsewhere"));
    CHECK(none.cells.empty());
    CHECK(none.models.empty());
}

TEST_CASE("report emission")
{
    auto c = tiny_config();
    Experiment ex(c);
    const auto r = ex.rq3();
    const auto dir = scratch("emit");
    const auto files = emit_report(r, dir);
    for (const char *name : {"report.json", "mse_table.csv", "mse_cells.csv", "models.csv", "correlation.csv",
                             "timestamps.json", "mitigation_tiny_bim.svg"})
        CHECK(fs::exists(dir / name));
    CHECK(std::find(files.begin(), files.end(), "timestamps.json") != files.end());

    CHECK(load_report(dir / "report.json") == r);
    CHECK(line_count(read_file(dir / "mse_cells.csv")) == r.cells.size() + 1);
    // Table layout: one row per (scenario, attack, epsilon), one column per model.
    const std::string table = read_file(dir / "mse_table.csv");
    CHECK(line_count(table) == r.cells.size() / 3 + 1);
    CHECK(table.substr(0, table.find('\n')) ==
          "scenario,attack,epsilon,undefended,adversarial_training,distillation");
    CHECK(line_count(read_file(dir / "models.csv")) == 4);

    const std::string json1 = read_file(dir / "report.json");
    const std::string csv1 = table;
    const std::string svg1 = read_file(dir / "mitigation_tiny_bim.svg");
    CHECK(svg1.rfind("<svg", 0) == 0);
    const auto again = Experiment(c).rq3();
    const auto dir2 = scratch("emit2");
    emit_report(again, dir2);
    CHECK(read_file(dir2 / "report.json") == json1);
    CHECK(read_file(dir2 / "mse_table.csv") == csv1);
    CHECK(read_file(dir2 / "mitigation_tiny_bim.svg") == svg1);
    fs::remove_all(dir);
    fs::remove_all(dir2);
}

TEST_CASE("rq2 emits histograms")
{
    auto c = tiny_config();
    c.attacks = {AttackKind::fgsm};
    const auto r = Experiment(c).rq2();
    const auto dir = scratch("hist");
    emit_report(r, dir);
    CHECK(fs::exists(dir / "hist_tiny_fgsm_eps0.3.svg"));
    CHECK(fs::exists(dir / "mse_vs_epsilon_tiny.svg"));
    CHECK(line_count(read_file(dir / "correlation.csv")) == 2);
    fs::remove_all(dir);
}

TEST_CASE("report errors")
{
    EvalReport empty;
    CHECK_THROWS_AS(emit_report(empty, scratch("empty")), Error);

    const auto r = Experiment(tiny_config()).rq1(CellFilter::parse("attack=fgsm"));
    const auto blocker = scratch("blocker");
    {
        std::ofstream out(blocker);
        out << "file, not a directory";
    }
    CHECK_THROWS_AS(emit_report(r, blocker / "sub"), Error);
    fs::remove(blocker);

    const std::string text = report_to_json(r);
    CHECK(report_from_json(text) == r);
    CHECK_THROWS_AS(report_from_json(text.substr(0, text.size() / 2)), ParseError);
    CHECK_THROWS_AS(report_from_json("{}"), ParseError);
    CHECK_THROWS_AS(report_from_json("{\"schema_version\": 1e999999}"), ParseError);
    std::string versioned = text;
    versioned.replace(versioned.find("\"schema_version\": 1"), 19, "\"schema_version\": 7");
    try
    {
        (void)report_from_json(versioned);
        FAIL("expected refusal");
    }
    catch (const Error &e)
    {
        CHECK(e.code() == ErrorCode::unsupported);
    }
    CHECK_THROWS_AS(load_report(scratch("missing.json")), Error);
}

TEST_CASE("softmax-mode distillation is scored against distribution labels")
{
    auto c = tiny_config();
    c.distill_mode = DistillMode::softmax;
    c.defenses = {DefenseKind::distillation};
    const auto r = Experiment(c).rq3(CellFilter::parse("attack=fgsm"));
    for (const auto &cell : r.cells)
        CHECK(cell.labels == (cell.defense == "distillation" ? "sum_normalized" : "max_normalized"));
}
