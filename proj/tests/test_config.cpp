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

#include "beamadv/config.hpp"
#include "beamadv/error.hpp"

#include <filesystem>
#include <fstream>

using namespace beamadv;

namespace
{

std::size_t parse_error_line(const std::string &text)
{
    try
    {
        (void)parse_config(text);
    }
    catch (const ParseError &e)
    {
        return e.line();
    }
    return 0;
}

const char *full_config = R"(# every section
[scenario]
presets = I3_60-mini, custom
num_users = 300      # applied to both
name_suffix_is_not_a_key = 1
)";

} // namespace

TEST_CASE("defaults follow the documented experiment")
{
    ExperimentConfig c;
    CHECK(c.presets == scenario_preset_names());
    CHECK(c.model.hidden == std::vector<std::size_t>{512, 256});
    CHECK(c.train.epochs == 200);
    CHECK(c.train.batch_size == 128);
    CHECK(c.train.learning_rate == 1e-3);
    CHECK(c.rq1_epsilons == std::vector<double>{0.01, 0.3, 0.5, 0.7, 0.9});
    CHECK(c.rq3_epsilons == std::vector<double>{0.03, 0.05, 0.08, 0.10});
    CHECK(c.attack.steps == 10);
    CHECK(!c.attack.step_size);
    CHECK(c.attack.momentum == 1.0);
    CHECK(c.omega == std::vector<AttackKind>{AttackKind::bim});
    CHECK(c.pi == std::vector<double>{0.05, 0.10});
    CHECK(c.epochs_per_round == 50);
    CHECK(c.distill_mode == DistillMode::regression);
    CHECK_THROWS_AS(c.validate(), Error); // no master seed
    c.seed = 1;
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("a complete config parses")
{
    const auto c = parse_config(R"(
[scenario]
presets = I3_60-mini, custom
num_users = 300
name = tiny          # renames both: caught by validate
[model]
hidden = 64, 32
output = linear
[train]
epochs = 12
batch_size = 64
learning_rate = 0.002
optimizer = sgd
shuffle = false
[attacks]
kinds = fgsm, pgd
rq1_epsilons = 0, 0.2
rq3_epsilons = 0.1
rq3_zero_row = false
steps = 4
alpha = 0.01
mu = 0.5
random_start = false
clip_lo = -2
clip_hi = 2
[defenses]
kinds = distillation
omega = fgsm, mim
pi = 0.1
epochs_per_round = 3
temperature = 5
mode = softmax
teacher_hidden = 128
[experiment]
seed = 42
output = results
threads = 2
histogram_bins = 10
)");
    CHECK(c.presets == std::vector<std::string>{"I3_60-mini", "custom"});
    const auto sc = c.scenarios();
    REQUIRE(sc.size() == 2);
    CHECK(sc[0].num_users == 300);
    CHECK(sc[0].num_antennas == 16);
    CHECK(sc[1].num_users == 300);
    CHECK(c.model.hidden == std::vector<std::size_t>{64, 32});
    CHECK(c.train.epochs == 12);
    CHECK(c.train.optimizer == OptimizerKind::sgd);
    CHECK_FALSE(c.train.shuffle);
    CHECK(c.attacks == std::vector<AttackKind>{AttackKind::fgsm, AttackKind::pgd});
    CHECK(c.rq1_epsilons == std::vector<double>{0.0, 0.2});
    CHECK_FALSE(c.rq3_zero_row);
    CHECK(c.attack.steps == 4);
    CHECK(*c.attack.step_size == 0.01);
    CHECK(c.attack.momentum == 0.5);
    CHECK_FALSE(c.attack.random_start);
    CHECK(c.attack.clip_lo == -2.0);
    CHECK(c.defenses == std::vector<DefenseKind>{DefenseKind::distillation});
    CHECK(c.omega == std::vector<AttackKind>{AttackKind::fgsm, AttackKind::mim});
    CHECK(c.temperature == 5.0);
    CHECK(c.distill_mode == DistillMode::softmax);
    CHECK(c.teacher_hidden == std::vector<std::size_t>{128});
    CHECK(*c.seed == 42);
    CHECK(c.output_dir == "results");
    CHECK(c.threads == 2);
    CHECK(c.histogram_bins == 10);
    CHECK_THROWS_AS(c.validate(), Error); // duplicate scenario name "tiny"
}

TEST_CASE("errors name the line")
{
    CHECK(parse_error_line(full_config) == 5);
    CHECK(parse_error_line("[scenario]\npresets = a\n[nope]\n") == 3);
    CHECK(parse_error_line("seed = 1\n") == 1);
    CHECK(parse_error_line("[experiment]\nseed = 1\nseed = 2\n") == 3);
    CHECK(parse_error_line("[experiment]\n\nseed = minus one\n") == 3);
    CHECK(parse_error_line("[train]\nepochs\n") == 2);
    CHECK(parse_error_line("[train\n") == 1);
    CHECK(parse_error_line("[attacks]\nkinds = fgsm, cw\n") == 2);
    CHECK(parse_error_line("[model]\noutput = sigmoid\n") == 2);
    CHECK(parse_error_line("[attacks]\nrandom_start = maybe\n") == 2);
    CHECK(parse_error_line("[scenario]\nnum_users = -3\n") == 2);
}

TEST_CASE("validation catches bad grids and values")
{
    auto bad = [](const std::string &text) {
        CAPTURE(text);
        auto c = parse_config("[experiment]\nseed = 1\n" + text);
        CHECK_THROWS_AS(c.validate(), Error);
    };
    bad("[attacks]\nrq1_epsilons = 0.5, 0.1\n");
    bad("[attacks]\nrq3_epsilons = 0.1, 0.1\n");
    bad("[attacks]\nrq1_epsilons = -0.1, 0.1\n");
    bad("[attacks]\nkinds =\n");
    bad("[attacks]\nsteps = 0\n");
    bad("[attacks]\nclip_lo = 1\nclip_hi = 0\n");
    bad("[defenses]\npi =\n");
    bad("[defenses]\ntemperature = 0.5\n");
    bad("[train]\nepochs = 0\n");
    bad("[scenario]\npresets = nowhere\n");
    bad("[scenario]\nnum_users = 1\n");
    bad("[model]\noutput = relu\n");
}

TEST_CASE("canonical text round trips and drives the hash")
{
    auto c = parse_config("[scenario]\npresets = I3_60-mini\nnum_users = 222\n[model]\nhidden = none\n"
                          "[attacks]\nalpha = 0.02\n[experiment]\nseed = 9\nthreads = 4\noutput = x\n");
    CHECK(c.model.hidden.empty());
    const auto again = parse_config(c.canonical_text());
    CHECK(again.canonical_text() == c.canonical_text());
    CHECK(again.hash() == c.hash());
    CHECK(c.hash().size() == 16);
    // threads and output do not affect results, so they are not part of the hash
    auto other = c;
    other.threads = 1;
    other.output_dir = "elsewhere";
    CHECK(other.hash() == c.hash());
    other.seed = 10;
    CHECK(other.hash() != c.hash());
}

TEST_CASE("set_config_value and key listing")
{
    ExperimentConfig c;
    set_config_value(c, "train", "epochs", "7");
    CHECK(c.train.epochs == 7);
    CHECK_THROWS_AS(set_config_value(c, "train", "epoch", "7"), Error);
    CHECK_THROWS_AS(set_config_value(c, "nowhere", "epochs", "7"), Error);
    const auto keys = config_keys();
    CHECK(keys.size() == 6);
    CHECK(keys.at("attacks").size() >= 10);
}

TEST_CASE("config files")
{
    const auto path = std::filesystem::temp_directory_path() / "beamadv_config_test.ini";
    {
        std::ofstream out(path);
        out << "[experiment]\nseed = 3\n";
    }
    CHECK(*load_config(path).seed == 3);
    {
        std::ofstream out(path);
        out << "[experiment]\nsed = 3\n";
    }
    CHECK_THROWS_AS(load_config(path), ParseError);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_config(path), Error);
}
