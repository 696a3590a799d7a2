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

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace
{

const char *tiny_text = R"(
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
)";

json last_error()
{
    return json::parse(ba_last_error_json());
}

std::string take(char *s)
{
    std::string out = s;
    ba_string_free(s);
    return out;
}

fs::path scratch(const std::string &name)
{
    fs::path p = fs::temp_directory_path() / ("beamadv_capi_" + name);
    fs::remove_all(p);
    return p;
}

struct Fixture
{
    ba_config *cfg = nullptr;
    ba_experiment *ex = nullptr;

    Fixture()
    {
        REQUIRE(ba_config_parse(tiny_text, &cfg) == BA_OK);
        REQUIRE(ba_experiment_create(cfg, nullptr, nullptr, &ex) == BA_OK);
    }
    ~Fixture()
    {
        ba_experiment_free(ex);
        ba_config_free(cfg);
    }
};

} // namespace

TEST_CASE("status names and version")
{
    CHECK(std::string(ba_version()) == "1.0.0");
    CHECK(std::string(ba_status_name(BA_OK)) == "ok");
    CHECK(std::string(ba_status_name(BA_ERR_DIMENSION_MISMATCH)) == "dimension_mismatch");
    CHECK(std::string(ba_status_name(BA_ERR_INTERNAL)) == "internal");
    CHECK(std::string(ba_status_name(-3)) == "unknown");
}

TEST_CASE("error json describes the last call")
{
    ba_config *cfg = nullptr;
    CHECK(ba_config_parse("[model]\nhidden = 8\nhidden = 9\n", &cfg) == BA_ERR_PARSE);
    CHECK(cfg == nullptr);
    json e = last_error();
    CHECK(e["code"] == 4);
    CHECK(e["status"] == "parse");
    CHECK(e["message"].get<std::string>().find("line 3") != std::string::npos);

    REQUIRE(ba_config_default(&cfg) == BA_OK);
    CHECK(last_error()["code"] == 0);

    ba_experiment *ex = nullptr;
    CHECK(ba_experiment_create(cfg, nullptr, nullptr, &ex) == BA_ERR_CONFIG);
    CHECK(last_error()["message"].get<std::string>().find("seed") != std::string::npos);
    ba_config_free(cfg);

    CHECK(ba_config_load("/nonexistent/beamadv.ini", &cfg) == BA_ERR_IO);
    CHECK(ba_model_load(nullptr, nullptr) == BA_ERR_INVALID_ARGUMENT);
    CHECK(last_error()["message"] == "path is null");
}

TEST_CASE("free functions accept null")
{
    ba_config_free(nullptr);
    ba_experiment_free(nullptr);
    ba_dataset_free(nullptr);
    ba_model_free(nullptr);
    ba_report_free(nullptr);
    ba_string_free(nullptr);
}

TEST_CASE("config set, text and scenarios")
{
    ba_config *cfg = nullptr;
    REQUIRE(ba_config_parse(tiny_text, &cfg) == BA_OK);
    CHECK(ba_config_set(cfg, "train", "epochs", "5") == BA_OK);
    CHECK(ba_config_set(cfg, "train", "epochs", "five") == BA_ERR_CONFIG);
    CHECK(ba_config_set(cfg, "nope", "epochs", "5") == BA_ERR_CONFIG);
    char *text = nullptr;
    REQUIRE(ba_config_text(cfg, &text) == BA_OK);
    const std::string t = take(text);
    CHECK(t.find("epochs = 5") != std::string::npos);

    ba_config *again = nullptr;
    REQUIRE(ba_config_parse(t.c_str(), &again) == BA_OK);
    char *text2 = nullptr;
    REQUIRE(ba_config_text(again, &text2) == BA_OK);
    CHECK(take(text2) == t);

    size_t n = 0;
    REQUIRE(ba_config_scenario_count(cfg, &n) == BA_OK);
    CHECK(n == 1);
    char *name = nullptr;
    REQUIRE(ba_config_scenario_name(cfg, 0, &name) == BA_OK);
    CHECK(take(name) == "tiny");
    CHECK(ba_config_scenario_name(cfg, 1, &name) == BA_ERR_INVALID_ARGUMENT);

    ba_config *presets = nullptr;
    REQUIRE(ba_config_default(&presets) == BA_OK);
    REQUIRE(ba_config_scenario_count(presets, &n) == BA_OK);
    CHECK(n == 3);
    ba_config_free(presets);
    ba_config_free(again);
    ba_config_free(cfg);
}

TEST_CASE("dataset handles")
{
    Fixture f;
    ba_dataset *ds = nullptr;
    REQUIRE(ba_experiment_dataset(f.ex, "tiny", &ds) == BA_OK);
    size_t rows = 0, feats = 0, labels = 0;
    REQUIRE(ba_dataset_shape(ds, &rows, &feats, &labels) == BA_OK);
    CHECK(rows == 150);
    CHECK(feats == 2 * 4 * 2);
    CHECK(labels == 4);

    std::vector<double> x(rows * feats), small(3);
    CHECK(ba_dataset_features(ds, x.data(), x.size()) == BA_OK);
    CHECK(ba_dataset_features(ds, small.data(), small.size()) == BA_ERR_DIMENSION_MISMATCH);
    for (double v : x)
        CHECK((v >= -1.0 && v <= 1.0));

    const fs::path dir = scratch("dataset");
    fs::create_directories(dir);
    const std::string path = (dir / "tiny.csv").string();
    REQUIRE(ba_dataset_save_csv(ds, path.c_str()) == BA_OK);
    ba_dataset *back = nullptr;
    REQUIRE(ba_dataset_load_csv(path.c_str(), &back) == BA_OK);
    std::vector<double> x2(rows * feats), y1(rows * labels), y2(rows * labels);
    REQUIRE(ba_dataset_features(back, x2.data(), x2.size()) == BA_OK);
    REQUIRE(ba_dataset_labels(ds, y1.data(), y1.size()) == BA_OK);
    REQUIRE(ba_dataset_labels(back, y2.data(), y2.size()) == BA_OK);
    CHECK(x2 == x);
    CHECK(y2 == y1);

    CHECK(ba_experiment_dataset(f.ex, "missing", &back) != BA_OK);
    CHECK(ba_dataset_load_csv((dir / "absent.csv").string().c_str(), &back) == BA_ERR_IO);
    ba_dataset_free(back);
    ba_dataset_free(ds);
    fs::remove_all(dir);
}

TEST_CASE("model predict, attack and persistence")
{
    Fixture f;
    ba_model *m = nullptr;
    REQUIRE(ba_experiment_model(f.ex, "tiny", "undefended", &m) == BA_OK);
    size_t in = 0, out = 0;
    REQUIRE(ba_model_dims(m, &in, &out) == BA_OK);
    CHECK(in == 16);
    CHECK(out == 4);

    ba_dataset *ds = nullptr;
    REQUIRE(ba_experiment_dataset(f.ex, "tiny", &ds) == BA_OK);
    const size_t rows = 150;
    std::vector<double> x(rows * in), y(rows * out), pred(rows * out);
    REQUIRE(ba_dataset_features(ds, x.data(), x.size()) == BA_OK);
    REQUIRE(ba_dataset_labels(ds, y.data(), y.size()) == BA_OK);
    REQUIRE(ba_model_predict(m, x.data(), rows, in, pred.data(), pred.size()) == BA_OK);
    CHECK(ba_model_predict(m, x.data(), rows, in + 1, pred.data(), pred.size()) == BA_ERR_DIMENSION_MISMATCH);
    CHECK(ba_model_predict(m, x.data(), rows, in, pred.data(), 5) == BA_ERR_DIMENSION_MISMATCH);

    // Single-row prediction agrees with the batch.
    std::vector<double> one(out);
    REQUIRE(ba_model_predict(m, x.data() + 7 * in, 1, in, one.data(), one.size()) == BA_OK);
    for (size_t j = 0; j < out; ++j)
        CHECK(one[j] == pred[7 * out + j]);

    std::vector<double> adv(rows * in), adv3(rows * in);
    double clean = -1.0, attacked = -1.0, attacked3 = -1.0;
    REQUIRE(ba_model_attack(m, "fgsm", 0.0, 1, x.data(), y.data(), rows, in, out, 1, adv.data(), &clean) == BA_OK);
    CHECK(adv == x);
    REQUIRE(ba_model_attack(m, "PGD", 0.1, 9, x.data(), y.data(), rows, in, out, 1, adv.data(), &attacked) == BA_OK);
    REQUIRE(ba_model_attack(m, "pgd", 0.1, 9, x.data(), y.data(), rows, in, out, 3, adv3.data(), &attacked3) ==
            BA_OK);
    CHECK(adv == adv3);
    CHECK(attacked == attacked3);
    CHECK(attacked > clean);
    for (size_t i = 0; i < x.size(); ++i)
        CHECK(std::abs(adv[i] - x[i]) <= 0.1 + 1e-12);
    CHECK(ba_model_attack(m, "cw", 0.1, 9, x.data(), y.data(), rows, in, out, 1, adv.data(), nullptr) ==
          BA_ERR_CONFIG);
    CHECK(ba_model_attack(m, "fgsm", -0.1, 9, x.data(), y.data(), rows, in, out, 1, adv.data(), nullptr) ==
          BA_ERR_CONFIG);

    const fs::path dir = scratch("model");
    fs::create_directories(dir);
    const std::string path = (dir / "m.json").string();
    REQUIRE(ba_model_save(m, path.c_str()) == BA_OK);
    ba_model *back = nullptr;
    REQUIRE(ba_model_load(path.c_str(), &back) == BA_OK);
    std::vector<double> pred2(rows * out);
    REQUIRE(ba_model_predict(back, x.data(), rows, in, pred2.data(), pred2.size()) == BA_OK);
    CHECK(pred2 == pred);

    {
        std::ofstream bad(dir / "bad.json");
        bad << "{\"schema_version\": 1, \"layers\": [";
    }
    ba_model *broken = nullptr;
    CHECK(ba_model_load((dir / "bad.json").string().c_str(), &broken) == BA_ERR_PARSE);
    CHECK(broken == nullptr);

    // A replaced model is used by later studies.
    REQUIRE(ba_experiment_set_model(f.ex, "tiny", "undefended", back) == BA_OK);
    CHECK(ba_experiment_set_model(f.ex, "elsewhere", "undefended", back) != BA_OK);

    ba_model_free(back);
    ba_model_free(m);
    ba_dataset_free(ds);
    fs::remove_all(dir);
}

TEST_CASE("studies, reports and emission")
{
    Fixture f;
    ba_report *r1 = nullptr;
    REQUIRE(ba_experiment_run(f.ex, "rq1", nullptr, &r1) == BA_OK);
    size_t cells = 0;
    REQUIRE(ba_report_cell_count(r1, &cells) == BA_OK);
    CHECK(cells == 4 * 3);

    ba_report *one = nullptr;
    REQUIRE(ba_experiment_run(f.ex, "rq1", "attack=mim,epsilon=0.1", &one) == BA_OK);
    REQUIRE(ba_report_cell_count(one, &cells) == BA_OK);
    CHECK(cells == 1);
    CHECK(ba_experiment_run(f.ex, "rq1", "colour=red", &one) != BA_OK);
    CHECK(ba_experiment_run(f.ex, "rq4", nullptr, &one) == BA_ERR_INVALID_ARGUMENT);

    ba_report *partial = nullptr;
    REQUIRE(ba_experiment_partial(f.ex, &partial) == BA_OK);
    ba_report_free(partial);

    char *text = nullptr;
    REQUIRE(ba_report_json(r1, &text) == BA_OK);
    const std::string j1 = take(text);
    CHECK(json::parse(j1)["study"] == "rq1");

    const fs::path dir = scratch("report");
    REQUIRE(ba_report_emit(r1, dir.string().c_str(), 0, R"({"note": "capi"})") == BA_OK);
    CHECK(fs::exists(dir / "report.json"));
    CHECK(fs::exists(dir / "mse_table.csv"));
    CHECK_FALSE(fs::exists(dir / "mse_vs_epsilon_tiny.svg"));
    std::ifstream side(dir / "timestamps.json");
    CHECK(json::parse(side)["note"] == "capi");
    CHECK(ba_report_emit(r1, dir.string().c_str(), 0, "[1, 2]") == BA_ERR_INVALID_ARGUMENT);

    ba_report *loaded = nullptr;
    REQUIRE(ba_report_load((dir / "report.json").string().c_str(), &loaded) == BA_OK);
    REQUIRE(ba_report_json(loaded, &text) == BA_OK);
    CHECK(take(text) == j1);

    ba_report_free(loaded);
    ba_report_free(one);
    ba_report_free(r1);
    fs::remove_all(dir);
}

TEST_CASE("log callback receives progress")
{
    ba_config *cfg = nullptr;
    REQUIRE(ba_config_parse(tiny_text, &cfg) == BA_OK);
    std::vector<std::string> lines;
    ba_experiment *ex = nullptr;
    REQUIRE(ba_experiment_create(
                cfg, [](const char *m, void *u) { static_cast<std::vector<std::string> *>(u)->push_back(m); },
                &lines, &ex) == BA_OK);
    ba_dataset *ds = nullptr;
    REQUIRE(ba_experiment_dataset(ex, "tiny", &ds) == BA_OK);
    REQUIRE_FALSE(lines.empty());
    CHECK(lines.front().find("tiny") != std::string::npos);
    ba_dataset_free(ds);
    ba_experiment_free(ex);
    ba_config_free(cfg);
}
