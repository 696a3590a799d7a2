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

#include "beamadv/attacks.hpp"

#include "beamadv/error.hpp"
#include "beamadv/metrics.hpp"
#include "beamadv/parallel.hpp"
#include "beamadv/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace beamadv
{

std::string to_string(AttackKind k)
{
    switch (k)
    {
    case AttackKind::fgsm: return "fgsm";
    case AttackKind::bim: return "bim";
    case AttackKind::pgd: return "pgd";
    case AttackKind::mim: return "mim";
    }
    fail(ErrorCode::internal, "unknown attack kind");
}

AttackKind attack_from_string(const std::string &s)
{
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    for (AttackKind k : all_attacks())
        if (to_string(k) == lower)
            return k;
    fail(ErrorCode::config, "unknown attack '" + s + "' (known: fgsm, bim, pgd, mim)");
}

std::vector<AttackKind> all_attacks()
{
    return {AttackKind::fgsm, AttackKind::bim, AttackKind::pgd, AttackKind::mim};
}

double AttackConfig::alpha() const
{
    return step_size ? *step_size : epsilon / static_cast<double>(steps);
}

void AttackConfig::validate() const
{
    const std::string name = to_string(kind);
    require(std::isfinite(epsilon) && epsilon >= 0.0, ErrorCode::config, name + ": epsilon must be >= 0");
    require(std::isfinite(clip_lo) && std::isfinite(clip_hi) && clip_lo < clip_hi, ErrorCode::config,
            name + ": clip_lo must be below clip_hi");
    if (kind != AttackKind::fgsm)
    {
        require(steps >= 1, ErrorCode::config, name + ": steps must be >= 1");
        require(!step_size || (std::isfinite(*step_size) && *step_size > 0.0), ErrorCode::config,
                name + ": step size must be > 0");
    }
    require(std::isfinite(momentum) && momentum >= 0.0, ErrorCode::config, name + ": momentum must be >= 0");
}

namespace
{

double sign(double v)
{
    return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
}

// Projection onto the epsilon ball around x0 intersected with the clip range.
// A coordinate of x0 outside the range keeps x0 itself reachable.
double project(double v, double x0, double eps, double lo, double hi)
{
    const double lower = std::max(x0 - eps, std::min(lo, x0));
    const double upper = std::min(x0 + eps, std::max(hi, x0));
    return std::clamp(v, lower, upper);
}

void signed_step(Matrix &x, const Matrix &x0, const Matrix &direction, double step, const AttackConfig &cfg)
{
    auto xv = x.values();
    auto x0v = x0.values();
    auto dv = direction.values();
    for (std::size_t i = 0; i < xv.size(); ++i)
        xv[i] = project(xv[i] + step * sign(dv[i]), x0v[i], cfg.epsilon, cfg.clip_lo, cfg.clip_hi);
}

void accumulate_momentum(Matrix &velocity, const Matrix &grad, double mu)
{
    for (std::size_t r = 0; r < grad.rows(); ++r)
    {
        auto g = grad.row(r);
        double l1 = 0.0;
        for (double v : g)
            l1 += std::abs(v);
        double *vel = velocity.data() + r * velocity.cols();
        for (std::size_t c = 0; c < g.size(); ++c)
            vel[c] = mu * vel[c] + (l1 > 0.0 ? g[c] / l1 : 0.0);
    }
}

} // namespace

Matrix run_attack(const MlpModel &model, const Matrix &x, const Matrix &y, const AttackConfig &cfg,
                  std::size_t first_row, const IterateObserver &observer)
{
    cfg.validate();
    require(x.cols() == model.input_dim(), ErrorCode::dimension_mismatch,
            to_string(cfg.kind) + ": features have " + std::to_string(x.cols()) + " columns, model expects " +
                std::to_string(model.input_dim()));
    require(y.rows() == x.rows() && y.cols() == model.output_dim(), ErrorCode::dimension_mismatch,
            to_string(cfg.kind) + ": labels do not match features or model output");

    if (cfg.kind == AttackKind::fgsm)
    {
        Matrix adv = x;
        signed_step(adv, x, input_gradients(model, x, y), cfg.epsilon, cfg);
        if (observer)
            observer(1, adv);
        return adv;
    }

    Matrix adv = x;
    if (cfg.kind == AttackKind::pgd && cfg.random_start)
    {
        for (std::size_t r = 0; r < x.rows(); ++r)
        {
            Rng rng(derive_seed(cfg.seed, first_row + r));
            double *row = adv.data() + r * adv.cols();
            const double *orig = x.data() + r * x.cols();
            for (std::size_t c = 0; c < adv.cols(); ++c)
                row[c] = project(orig[c] + rng.uniform(-cfg.epsilon, cfg.epsilon), orig[c], cfg.epsilon, cfg.clip_lo,
                                 cfg.clip_hi);
        }
    }
    const double alpha = cfg.alpha();
    Matrix velocity;
    if (cfg.kind == AttackKind::mim)
        velocity = Matrix(x.rows(), x.cols(), 0.0);
    for (std::size_t step = 1; step <= cfg.steps; ++step)
    {
        const Matrix grad = input_gradients(model, adv, y);
        if (cfg.kind == AttackKind::mim)
        {
            accumulate_momentum(velocity, grad, cfg.momentum);
            signed_step(adv, x, velocity, alpha, cfg);
        }
        else
            signed_step(adv, x, grad, alpha, cfg);
        if (observer)
            observer(step, adv);
    }
    return adv;
}

namespace
{

Matrix run_kind(AttackKind expected, const MlpModel &model, const Matrix &x, const Matrix &y,
                const AttackConfig &cfg)
{
    require(cfg.kind == expected, ErrorCode::invalid_argument,
            to_string(expected) + " called with a " + to_string(cfg.kind) + " configuration");
    return run_attack(model, x, y, cfg);
}

} // namespace

Matrix fgsm(const MlpModel &model, const Matrix &x, const Matrix &y, const AttackConfig &cfg)
{
    return run_kind(AttackKind::fgsm, model, x, y, cfg);
}

Matrix bim(const MlpModel &model, const Matrix &x, const Matrix &y, const AttackConfig &cfg)
{
    return run_kind(AttackKind::bim, model, x, y, cfg);
}

Matrix pgd(const MlpModel &model, const Matrix &x, const Matrix &y, const AttackConfig &cfg)
{
    return run_kind(AttackKind::pgd, model, x, y, cfg);
}

Matrix mim(const MlpModel &model, const Matrix &x, const Matrix &y, const AttackConfig &cfg)
{
    return run_kind(AttackKind::mim, model, x, y, cfg);
}

AttackResult attack_batch(const MlpModel &model, const Matrix &x, const Matrix &y, const AttackConfig &cfg,
                          int threads)
{
    require(x.rows() > 0, ErrorCode::invalid_argument, to_string(cfg.kind) + ": no rows to attack");
    cfg.validate();
    require(x.cols() == model.input_dim() && y.rows() == x.rows() && y.cols() == model.output_dim(),
            ErrorCode::dimension_mismatch, to_string(cfg.kind) + ": features, labels and model do not match");

    constexpr std::size_t block = 256;
    const std::size_t blocks = (x.rows() + block - 1) / block;
    Matrix adversarial(x.rows(), x.cols());
    parallel_chunks(blocks, threads, [&](std::size_t b0, std::size_t b1) {
        for (std::size_t b = b0; b < b1; ++b)
        {
            std::vector<std::size_t> rows;
            for (std::size_t r = b * block; r < std::min(x.rows(), (b + 1) * block); ++r)
                rows.push_back(r);
            const Matrix adv = run_attack(model, x.select_rows(rows), y.select_rows(rows), cfg, rows.front());
            std::copy(adv.values().begin(), adv.values().end(), adversarial.data() + rows.front() * x.cols());
        }
    });

    AttackResult out;
    out.config = cfg;
    out.perturbation = Matrix(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i)
        out.perturbation.values()[i] = adversarial.values()[i] - x.values()[i];
    auto scored = mse(y, predict(model, adversarial));
    out.per_sample_mse = std::move(scored.per_sample);
    out.mean_mse = scored.mean;
    out.adversarial = std::move(adversarial);
    return out;
}

} // namespace beamadv
