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

#include "beamadv/config.hpp"

#include "beamadv/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace beamadv
{

std::string to_string(DefenseKind d)
{
    return d == DefenseKind::adversarial_training ? "adversarial_training" : "distillation";
}

DefenseKind defense_from_string(const std::string &s)
{
    if (s == "adversarial_training" || s == "adv")
        return DefenseKind::adversarial_training;
    if (s == "distillation" || s == "distill")
        return DefenseKind::distillation;
    fail(ErrorCode::config, "unknown defense '" + s + "' (known: adversarial_training, distillation)");
}

namespace
{

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string &value)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, ','))
    {
        item = trim(item);
        if (!item.empty())
            out.push_back(item);
    }
    return out;
}

double parse_double(const std::string &key, const std::string &v)
{
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size() || !std::isfinite(out))
        fail(ErrorCode::config, key + ": expected a number, got '" + v + "'");
    return out;
}

std::uint64_t parse_u64(const std::string &key, const std::string &v)
{
    std::uint64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
        fail(ErrorCode::config, key + ": expected a non-negative integer, got '" + v + "'");
    return out;
}

std::size_t parse_count(const std::string &key, const std::string &v)
{
    return static_cast<std::size_t>(parse_u64(key, v));
}

bool parse_bool(const std::string &key, const std::string &v)
{
    if (v == "true" || v == "yes" || v == "1")
        return true;
    if (v == "false" || v == "no" || v == "0")
        return false;
    fail(ErrorCode::config, key + ": expected true or false, got '" + v + "'");
}

std::vector<double> parse_doubles(const std::string &key, const std::string &v)
{
    std::vector<double> out;
    for (const auto &item : split_list(v))
        out.push_back(parse_double(key, item));
    return out;
}

std::vector<std::size_t> parse_counts(const std::string &key, const std::string &v)
{
    std::vector<std::size_t> out;
    if (v == "none")
        return out;
    for (const auto &item : split_list(v))
        out.push_back(parse_count(key, item));
    return out;
}

std::string fmt(double v)
{
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

template <typename T, typename F>
std::string join(const std::vector<T> &items, F &&f)
{
    std::string out;
    for (const auto &item : items)
        out += (out.empty() ? "" : ", ") + f(item);
    return out;
}

void apply_scenario_key(ScenarioConfig &c, const std::string &key, const std::string &v)
{
    if (key == "name") c.name = v;
    else if (key == "num_antennas") c.num_antennas = parse_count(key, v);
    else if (key == "num_subcarriers") c.num_subcarriers = parse_count(key, v);
    else if (key == "num_pilot_subcarriers") c.num_pilot_subcarriers = parse_count(key, v);
    else if (key == "num_users") c.num_users = parse_count(key, v);
    else if (key == "num_paths") c.num_paths = parse_count(key, v);
    else if (key == "carrier_ghz") c.carrier_ghz = parse_double(key, v);
    else if (key == "bandwidth_ghz") c.bandwidth_ghz = parse_double(key, v);
    else if (key == "codebook_size") c.codebook_size = parse_count(key, v);
    else if (key == "x_min") c.user_region.x_min = parse_double(key, v);
    else if (key == "x_max") c.user_region.x_max = parse_double(key, v);
    else if (key == "y_min") c.user_region.y_min = parse_double(key, v);
    else if (key == "y_max") c.user_region.y_max = parse_double(key, v);
    else if (key == "seed") c.seed = parse_u64(key, v);
    else if (key == "angle_spread_deg") c.angle_spread_deg = parse_double(key, v);
    else if (key == "delay_spread_ns") c.delay_spread_ns = parse_double(key, v);
    else if (key == "power_decay") c.power_decay = parse_double(key, v);
    else if (key == "snr_db") c.snr_db = parse_double(key, v);
    else if (key == "train_fraction") c.train_fraction = parse_double(key, v);
    else if (key == "unit_gain") c.unit_gain = parse_bool(key, v);
    else fail(ErrorCode::config, "unknown key '" + key + "' in section [scenario]");
}

const std::vector<std::string> scenario_override_keys{
    "name", "num_antennas", "num_subcarriers", "num_pilot_subcarriers", "num_users", "num_paths",
    "carrier_ghz", "bandwidth_ghz", "codebook_size", "x_min", "x_max", "y_min", "y_max", "seed",
    "angle_spread_deg", "delay_spread_ns", "power_decay", "snr_db", "train_fraction", "unit_gain"};

using Setter = std::function<void(ExperimentConfig &, const std::string &key, const std::string &value)>;

const std::map<std::string, std::map<std::string, Setter>> &setters()
{
    static const std::map<std::string, std::map<std::string, Setter>> table = [] {
        std::map<std::string, std::map<std::string, Setter>> t;
        t["scenario"]["presets"] = [](ExperimentConfig &c, const std::string &, const std::string &v) {
            c.presets = split_list(v);
        };
        t["scenario"]["preset"] = t["scenario"]["presets"];
        for (const auto &k : scenario_override_keys)
            t["scenario"][k] = [](ExperimentConfig &c, const std::string &key, const std::string &v) {
                ScenarioConfig probe;
                apply_scenario_key(probe, key, v);
                c.scenario_overrides.emplace_back(key, v);
            };

        t["model"]["hidden"] = [](ExperimentConfig &c, const std::string &k, const std::string &v) {
            c.model.hidden = parse_counts(k, v);
        };
        t["model"]["output"] = [](ExperimentConfig &c, const std::string &, const std::string &v) {
            c.model.output = activation_from_string(v);
        };
        t["model"]["temperature"] = [](ExperimentConfig &c, const std::string &k, const std::string &v) {
            c.model.temperature = parse_double(k, v);
        };

        t["train"]["epochs"] = [](ExperimentConfig &c, const std::string &k, const std::string &v) {
            c.train.epochs = parse_count(k, v);
        };
        t["train"]["batch_size"] = [](ExperimentConfig &c, const std::string &k, const std::string &v) {
            c.train.batch_size = parse_count(k, v);
        };
        t["train"]["learning_rate"] = [](ExperimentConfig &c, const std::string &k, const std::string &v) {
            c.train.learning_rate = parse_double(k, v);
        };
        t["train"]["optimizer"] = [](ExperimentConfig &c, const std::string &, const std::string &v) {
            c.train.optimizer = optimizer_from_string(v);
        };
        t["train"]["shuffle"] = [](ExperimentConfig &c, const std::string &k, const std::string &v) {
            c.train.shuffle = parse_bool(k, v);
        };

        t["attacks"]["kinds"] = [](ExperimentConfig &c, const std::string &, const std::string &v) {
            c.attacks.clear();
            for (const auto &item : split_list(v))
                c.attacks.push_back(attack_from_string(item));
        };
        t["attacks"]["kind"] = t["attacks"]["kinds"];
        t["attacks"]["rq1_epsilons"] = [](ExperimentConfig &c, const std::string &k, const std::string &v) {
            c.rq1_epsilons = parse_doubles(k, v);
        };
        t["attacks"]["rq3_epsilons"] = [](ExperimentConfig &c, const std::string &k, const std::string &v) {
            c.rq3_epsilons = parse_doubles(k, v);
        };
        t["attacks"]["epsilon"] = [](ExperimentConfig &c, const std::string &k, const std::string &v) {
            c.rq1_epsilons = c.rq3_epsilons = parse_doubles(k, v);
        };
        t["attacks"]["rq3_zero_row"] = [](ExperimentConfig &c, const std::string &k, const std::string &v) {
            c.rq3_zero_row = parse_bool(k, v);
        };
        t["attacks"]["steps"] = [](ExperimentConfig &c, const std::string &k, const std::string &v) {
            c.attack.steps = parse_count(k, v);
        };
        t["attacks"]["alpha"] = [](ExperimentConfig &c, const std::string &k, const std::string &v) {
            if (v == "auto")
                c.attack.step_size.reset();
            else
                c.attack.step_size = parse_double(k, v);
        };
        t["attacks"]["mu"] = [](ExperimentConfig &c, const std::string &k, const std::string &v) {
            c.attack.momentum = parse_double(k, v);
        };
        t["attacks"]["random_start"] = [](ExperimentConfig &c, const std::string &k, const std::string &v) {
            c.attack.random_start = parse_bool(k, v);
        };
        t["attacks"]["clip_lo"] = [](ExperimentConfig &c, const std::string &k, const std::string &v) {
            c.attack.clip_lo = parse_double(k, v);
        };
        t["attacks"]["clip_hi"] = [](ExperimentConfig &c, const std::string &k, const std::string &v) {
            c.attack.clip_hi = parse_double(k, v);
        };

        t["defenses"]["kinds"] = [](ExperimentConfig &c, const std::string &, const std::string &v) {
            c.defenses.clear();
            for (const auto &item : split_list(v))
                c.defenses.push_back(defense_from_string(item));
        };
        t["defenses"]["kind"] = t["defenses"]["kinds"];
        t["defenses"]["omega"] = [](ExperimentConfig &c, const std::string &, const std::string &v) {
            c.omega.clear();
            for (const auto &item : split_list(v))
                c.omega.push_back(attack_from_string(item));
        };
        t["defenses"]["pi"] = [](ExperimentConfig &c, const std::string &k, const std::string &v) {
            c.pi = parse_doubles(k, v);
        };
        t["defenses"]["epochs_per_round"] = [](ExperimentConfig &c, const std::string &k, const std::string &v) {
            c.epochs_per_round = parse_count(k, v);
        };
        t["defenses"]["temperature"] = [](ExperimentConfig &c, const std::string &k, const std::string &v) {
            c.temperature = parse_double(k, v);
        };
        t["defenses"]["mode"] = [](ExperimentConfig &c, const std::string &, const std::string &v) {
            c.distill_mode = distill_mode_from_string(v);
        };
        t["defenses"]["teacher_hidden"] = [](ExperimentConfig &c, const std::string &k, const std::string &v) {
            c.teacher_hidden = v == "auto" ? std::vector<std::size_t>{} : parse_counts(k, v);
        };

        t["experiment"]["seed"] = [](ExperimentConfig &c, const std::string &k, const std::string &v) {
            c.seed = parse_u64(k, v);
        };
        t["experiment"]["output"] = [](ExperimentConfig &c, const std::string &, const std::string &v) {
            c.output_dir = v;
        };
        t["experiment"]["threads"] = [](ExperimentConfig &c, const std::string &k, const std::string &v) {
            const auto n = parse_u64(k, v);
            if (n < 1 || n > 1024)
                fail(ErrorCode::config, "threads: expected 1..1024, got '" + v + "'");
            c.threads = static_cast<int>(n);
        };
        t["experiment"]["histogram_bins"] = [](ExperimentConfig &c, const std::string &k, const std::string &v) {
            c.histogram_bins = parse_count(k, v);
        };
        return t;
    }();
    return table;
}

bool strictly_ascending(const std::vector<double> &v)
{
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1]))
            return false;
    return true;
}

} // namespace

void set_config_value(ExperimentConfig &cfg, const std::string &section, const std::string &key,
                      const std::string &value)
{
    const auto &table = setters();
    const auto sec = table.find(section);
    require(sec != table.end(), ErrorCode::config, "unknown section [" + section + "]");
    const auto it = sec->second.find(key);
    require(it != sec->second.end(), ErrorCode::config, "unknown key '" + key + "' in section [" + section + "]");
    it->second(cfg, key, value);
}

std::map<std::string, std::vector<std::string>> config_keys()
{
    std::map<std::string, std::vector<std::string>> out;
    for (const auto &[section, keys] : setters())
        for (const auto &[key, _] : keys)
            out[section].push_back(key);
    return out;
}

ExperimentConfig parse_config(const std::string &text)
{
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    std::size_t line_no = 0;
    std::set<std::pair<std::string, std::string>> seen;
    while (std::getline(in, raw))
    {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty())
            continue;
        if (line.front() == '[')
        {
            if (line.back() != ']')
                throw ParseError("unterminated section header '" + line + "'", line_no);
            section = trim(line.substr(1, line.size() - 2));
            if (!setters().contains(section))
                throw ParseError("unknown section [" + section + "]", line_no);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("expected 'key = value', got '" + line + "'", line_no);
        if (section.empty())
            throw ParseError("key outside of any section", line_no);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const bool repeatable = section == "scenario" && key != "presets" && key != "preset";
        if (!repeatable && !seen.emplace(section, key).second)
            throw ParseError("duplicate key '" + key + "' in section [" + section + "]", line_no);
        try
        {
            set_config_value(cfg, section, key, value);
        }
        catch (const ParseError &)
        {
            throw;
        }
        catch (const Error &e)
        {
            throw ParseError(e.what(), line_no);
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path &path)
{
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::io, "cannot open config file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    try
    {
        return parse_config(ss.str());
    }
    catch (const ParseError &e)
    {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::vector<ScenarioConfig> ExperimentConfig::scenarios() const
{
    std::vector<ScenarioConfig> out;
    for (const auto &p : presets)
    {
        ScenarioConfig c = p == "custom" ? ScenarioConfig{} : scenario_preset(p);
        for (const auto &[k, v] : scenario_overrides)
            apply_scenario_key(c, k, v);
        out.push_back(std::move(c));
    }
    return out;
}

void ExperimentConfig::validate() const
{
    require(!presets.empty(), ErrorCode::config, "[scenario] presets: at least one scenario is required");
    std::set<std::string> names;
    for (const auto &s : scenarios())
    {
        s.validate();
        require(names.insert(s.name).second, ErrorCode::config,
                "[scenario]: scenario name '" + s.name + "' appears twice");
    }
    require(model.output == Activation::linear || model.output == Activation::softmax, ErrorCode::config,
            "[model] output: expected linear or softmax");
    require(model.temperature >= 1.0, ErrorCode::config, "[model] temperature must be >= 1");
    train.validate();
    require(!attacks.empty(), ErrorCode::config, "[attacks] kinds: at least one attack is required");
    require(!rq1_epsilons.empty() && strictly_ascending(rq1_epsilons), ErrorCode::config,
            "[attacks] rq1_epsilons: must be non-empty and strictly ascending");
    require(!rq3_epsilons.empty() && strictly_ascending(rq3_epsilons), ErrorCode::config,
            "[attacks] rq3_epsilons: must be non-empty and strictly ascending");
    for (double e : rq1_epsilons)
        require(e >= 0.0, ErrorCode::config, "[attacks] rq1_epsilons: budgets must be >= 0");
    for (double e : rq3_epsilons)
        require(e >= 0.0, ErrorCode::config, "[attacks] rq3_epsilons: budgets must be >= 0");
    AttackConfig probe = attack;
    for (AttackKind k : all_attacks())
    {
        probe.kind = k;
        probe.validate();
    }
    require(!omega.empty(), ErrorCode::config, "[defenses] omega: at least one attack is required");
    require(!pi.empty(), ErrorCode::config, "[defenses] pi: at least one budget is required");
    for (double e : pi)
        require(e >= 0.0, ErrorCode::config, "[defenses] pi: budgets must be >= 0");
    require(epochs_per_round >= 1, ErrorCode::config, "[defenses] epochs_per_round must be >= 1");
    require(temperature >= 1.0, ErrorCode::config, "[defenses] temperature must be >= 1");
    require(histogram_bins >= 1, ErrorCode::config, "[experiment] histogram_bins must be >= 1");
    require(threads >= 1, ErrorCode::config, "[experiment] threads must be >= 1");
    require(seed.has_value(), ErrorCode::config,
            "[experiment] seed: a master seed is required (set it in the config or pass --seed)");
}

std::string ExperimentConfig::canonical_text() const
{
    std::ostringstream out;
    auto str = [](const std::string &s) { return s; };
    auto num = [](double v) { return fmt(v); };
    auto cnt = [](std::size_t v) { return std::to_string(v); };
    auto atk = [](AttackKind k) { return to_string(k); };
    out << "[scenario]\n";
    out << "presets = " << join(presets, str) << "\n";
    for (const auto &[k, v] : scenario_overrides)
        out << k << " = " << v << "\n";
    out << "\n[model]\n";
    out << "hidden = " << (model.hidden.empty() ? std::string("none") : join(model.hidden, cnt)) << "\n";
    out << "output = " << to_string(model.output) << "\n";
    out << "temperature = " << fmt(model.temperature) << "\n";
    out << "\n[train]\n";
    out << "epochs = " << train.epochs << "\n";
    out << "batch_size = " << train.batch_size << "\n";
    out << "learning_rate = " << fmt(train.learning_rate) << "\n";
    out << "optimizer = " << to_string(train.optimizer) << "\n";
    out << "shuffle = " << (train.shuffle ? "true" : "false") << "\n";
    out << "\n[attacks]\n";
    out << "kinds = " << join(attacks, atk) << "\n";
    out << "rq1_epsilons = " << join(rq1_epsilons, num) << "\n";
    out << "rq3_epsilons = " << join(rq3_epsilons, num) << "\n";
    out << "rq3_zero_row = " << (rq3_zero_row ? "true" : "false") << "\n";
    out << "steps = " << attack.steps << "\n";
    out << "alpha = " << (attack.step_size ? fmt(*attack.step_size) : std::string("auto")) << "\n";
    out << "mu = " << fmt(attack.momentum) << "\n";
    out << "random_start = " << (attack.random_start ? "true" : "false") << "\n";
    out << "clip_lo = " << fmt(attack.clip_lo) << "\n";
    out << "clip_hi = " << fmt(attack.clip_hi) << "\n";
    out << "\n[defenses]\n";
    out << "kinds = " << join(defenses, [](DefenseKind d) { return to_string(d); }) << "\n";
    out << "omega = " << join(omega, atk) << "\n";
    out << "pi = " << join(pi, num) << "\n";
    out << "epochs_per_round = " << epochs_per_round << "\n";
    out << "temperature = " << fmt(temperature) << "\n";
    out << "mode = " << to_string(distill_mode) << "\n";
    out << "teacher_hidden = " << (teacher_hidden.empty() ? std::string("auto") : join(teacher_hidden, cnt))
        << "\n";
    out << "\n[experiment]\n";
    if (seed)
        out << "seed = " << *seed << "\n";
    out << "histogram_bins = " << histogram_bins << "\n";
    return out.str();
}

std::string ExperimentConfig::hash() const
{
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : canonical_text())
    {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace beamadv
