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

#include "beamadv/attacks.hpp"
#include "beamadv/error.hpp"
#include "beamadv/metrics.hpp"
#include "beamadv/rng.hpp"

#include <cmath>

using namespace beamadv;

namespace
{

struct Fixture
{
    MlpModel model;
    Matrix x;
    Matrix y;
};

const Fixture &trained()
{
    static const Fixture f = [] {
        ScenarioConfig c = scenario_preset("I3_60-mini");
        c.num_antennas = 8;
        c.codebook_size = 8;
        c.num_pilot_subcarriers = 2;
        c.num_users = 300;
        const Dataset ds = generate_scenario(c);
        TrainConfig cfg;
        cfg.epochs = 15;
        cfg.batch_size = 32;
        cfg.seed = 5;
        Fixture out;
        out.model = train(ModelSpec{{32, 16}, Activation::linear, 1.0}, ds, cfg).model;
        out.x = ds.features;
        out.y = ds.labels;
        return out;
    }();
    return f;
}

MlpModel linear_model()
{
    MlpModel m;
    m.layer_dims = {2, 1};
    m.activations = {Activation::linear};
    m.parameters = {Matrix{{1.0}, {-2.0}}, Matrix(1, 1, 0.0)};
    return m;
}

AttackConfig make(AttackKind kind, double eps)
{
    AttackConfig c;
    c.kind = kind;
    c.epsilon = eps;
    c.seed = 99;
    return c;
}

Matrix rows(const Matrix &m, std::size_t n)
{
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i)
        idx[i] = i;
    return m.select_rows(idx);
}

} // namespace

TEST_CASE("attack names round trip")
{
    for (AttackKind k : all_attacks())
        CHECK(attack_from_string(to_string(k)) == k);
    CHECK(attack_from_string("BIM") == AttackKind::bim);
    CHECK_THROWS_AS(attack_from_string("cw"), Error);
}

TEST_CASE("attack config validation")
{
    AttackConfig c = make(AttackKind::bim, 0.1);
    CHECK_NOTHROW(c.validate());
    CHECK(c.alpha() == doctest::Approx(0.01));
    c.epsilon = -0.1;
    CHECK_THROWS_AS(c.validate(), Error);
    c = make(AttackKind::bim, 0.1);
    c.steps = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = make(AttackKind::pgd, 0.1);
    c.step_size = 0.0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = make(AttackKind::mim, 0.1);
    c.clip_lo = 1.0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = make(AttackKind::mim, 0.1);
    c.momentum = -1.0;
    CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("fgsm hand example")
{
    const auto m = linear_model();
    const Matrix x{{0.5, 0.5}};
    const Matrix y{{0.0}};
    const Matrix adv = fgsm(m, x, y, make(AttackKind::fgsm, 0.1));
    CHECK(adv(0, 0) == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(adv(0, 1) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK_THROWS_AS(bim(m, x, y, make(AttackKind::fgsm, 0.1)), Error);
    CHECK_THROWS_AS(fgsm(m, Matrix{{0.5, 0.5, 0.5}}, y, make(AttackKind::fgsm, 0.1)), Error);
}

TEST_CASE("zero gradient leaves inputs unchanged")
{
    const auto m = linear_model();
    const Matrix x{{0.5, 0.5}};
    const Matrix exact{{-0.5}};
    for (AttackKind k : {AttackKind::fgsm, AttackKind::bim, AttackKind::mim})
        CHECK(run_attack(m, x, exact, make(k, 0.3)) == x);
}

TEST_CASE("zero budget is the identity for every attack")
{
    const auto &f = trained();
    const Matrix x = rows(f.x, 40);
    const Matrix y = rows(f.y, 40);
    for (AttackKind k : all_attacks())
    {
        CAPTURE(to_string(k));
        const auto res = attack_batch(f.model, x, y, make(k, 0.0));
        CHECK(res.adversarial == x);
        CHECK(res.per_sample_mse == mse(y, predict(f.model, x)).per_sample);
    }
}

TEST_CASE("exact reductions between attacks")
{
    const auto &f = trained();
    const Matrix x = rows(f.x, 100);
    const Matrix y = rows(f.y, 100);
    for (double eps : {0.01, 0.1, 0.5})
    {
        CAPTURE(eps);
        AttackConfig single = make(AttackKind::bim, eps);
        single.steps = 1;
        single.step_size = eps;
        CHECK(bim(f.model, x, y, single) == fgsm(f.model, x, y, make(AttackKind::fgsm, eps)));

        const Matrix b = bim(f.model, x, y, make(AttackKind::bim, eps));
        AttackConfig fixed = make(AttackKind::pgd, eps);
        fixed.random_start = false;
        CHECK(pgd(f.model, x, y, fixed) == b);

        AttackConfig no_momentum = make(AttackKind::mim, eps);
        no_momentum.momentum = 0.0;
        CHECK(mim(f.model, x, y, no_momentum) == b);
    }
}

TEST_CASE("mim equals bim when the gradient sign never changes")
{
    // Target far above any reachable prediction: dL/dx = 2(w.x - y) w keeps the sign of -w.
    const auto m = linear_model();
    Rng rng(4);
    Matrix x(20, 2), y(20, 1, 100.0);
    for (auto &v : x.values())
        v = rng.uniform(-0.8, 0.8);
    for (double mu : {0.5, 1.0, 2.0})
    {
        AttackConfig c = make(AttackKind::mim, 0.2);
        c.momentum = mu;
        CHECK(mim(m, x, y, c) == bim(m, x, y, make(AttackKind::bim, 0.2)));
    }
}

TEST_CASE("every iterate stays in the epsilon ball and clip range")
{
    Rng rng(12);
    for (int trial = 0; trial < 6; ++trial)
    {
        const auto model = init_model(ModelSpec{{6, 5}, Activation::linear, 1.0}, 4, 3, 200 + trial);
        Matrix x(25, 4), y(25, 3);
        for (auto &v : x.values())
            v = rng.uniform(-1.0, 1.0);
        for (auto &v : y.values())
            v = rng.uniform(0.0, 1.0);
        for (AttackKind k : all_attacks())
            for (double eps : {0.01, 0.1, 0.5})
            {
                AttackConfig c = make(k, eps);
                c.step_size = eps / 3.0; // overshooting steps exercise the projection
                std::size_t seen = 0;
                bool ok = true;
                run_attack(model, x, y, c, 0, [&](std::size_t, const Matrix &it) {
                    ++seen;
                    for (std::size_t i = 0; i < it.size(); ++i)
                    {
                        const double d = std::abs(it.values()[i] - x.values()[i]);
                        ok = ok && d <= eps + 1e-12 && it.values()[i] >= -1.0 && it.values()[i] <= 1.0;
                    }
                });
                CHECK(ok);
                CHECK(seen == (k == AttackKind::fgsm ? 1 : c.steps));
            }
    }
}

TEST_CASE("fgsm moves each coordinate by exactly epsilon or not at all")
{
    const auto &f = trained();
    const Matrix x = rows(f.x, 50);
    const Matrix y = rows(f.y, 50);
    AttackConfig c = make(AttackKind::fgsm, 0.125);
    c.clip_lo = -10.0;
    c.clip_hi = 10.0;
    const auto res = attack_batch(f.model, x, y, c);
    std::size_t moved = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        const double d = res.adversarial.values()[i] - x.values()[i];
        const bool allowed = d == 0.0 || std::abs(std::abs(d) - 0.125) <= 1e-15;
        CHECK(allowed);
        moved += d != 0.0;
    }
    CHECK(moved > x.size() / 2);
}

TEST_CASE("pgd random start is seeded")
{
    const auto &f = trained();
    const Matrix x = rows(f.x, 30);
    const Matrix y = rows(f.y, 30);
    AttackConfig c = make(AttackKind::pgd, 0.2);
    const Matrix a = pgd(f.model, x, y, c);
    CHECK(pgd(f.model, x, y, c) == a);
    c.seed = 100;
    CHECK_FALSE(pgd(f.model, x, y, c) == a);
}

TEST_CASE("attack_batch is independent of threads and pure")
{
    const auto &f = trained();
    const MlpModel model_before = f.model;
    const Matrix x_before = f.x;
    for (AttackKind k : all_attacks())
    {
        const auto one = attack_batch(f.model, f.x, f.y, make(k, 0.1), 1);
        const auto three = attack_batch(f.model, f.x, f.y, make(k, 0.1), 3);
        CHECK(one.adversarial == three.adversarial);
        CHECK(one.per_sample_mse == three.per_sample_mse);
        CHECK(one.mean_mse == three.mean_mse);
        for (std::size_t i = 0; i < f.x.size(); ++i)
            REQUIRE(one.perturbation.values()[i] == one.adversarial.values()[i] - f.x.values()[i]);
        CHECK(one.config.kind == k);
    }
    CHECK(f.model == model_before);
    CHECK(f.x == x_before);
}

TEST_CASE("stronger budgets hurt more")
{
    const auto &f = trained();
    const auto clean = mse(f.y, predict(f.model, f.x)).mean;
    const auto weak = attack_batch(f.model, f.x, f.y, make(AttackKind::bim, 0.01)).mean_mse;
    const auto strong = attack_batch(f.model, f.x, f.y, make(AttackKind::bim, 0.5)).mean_mse;
    CHECK(weak >= clean);
    CHECK(strong > weak);
}

TEST_CASE("attack_batch errors")
{
    const auto &f = trained();
    CHECK_THROWS_AS(attack_batch(f.model, Matrix(0, f.x.cols()), Matrix(0, f.y.cols()), make(AttackKind::fgsm, 0.1)),
                    Error);
    CHECK_THROWS_AS(attack_batch(f.model, rows(f.x, 3), rows(f.y, 2), make(AttackKind::fgsm, 0.1)), Error);
}
