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

#include "beamadv/channel.hpp"

#include "beamadv/error.hpp"
#include "beamadv/parallel.hpp"
#include "beamadv/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace beamadv
{

void ScenarioConfig::validate() const
{
    auto check = [](bool ok, const std::string &what) { require(ok, ErrorCode::config, "scenario: " + what); };
    check(num_antennas >= 1, "num_antennas must be >= 1");
    check(num_subcarriers >= 1, "num_subcarriers must be >= 1");
    check(num_pilot_subcarriers >= 1, "num_pilot_subcarriers must be >= 1");
    check(num_pilot_subcarriers <= num_subcarriers, "num_pilot_subcarriers must not exceed num_subcarriers");
    check(num_users >= 1, "num_users must be >= 1");
    check(num_paths >= 1, "num_paths must be >= 1");
    check(codebook_size >= 2, "codebook_size must be >= 2");
    check(carrier_ghz > 0.0 && bandwidth_ghz > 0.0, "carrier_ghz and bandwidth_ghz must be positive");
    check(user_region.x_min < user_region.x_max && user_region.y_min < user_region.y_max,
          "user_region must have x_min < x_max and y_min < y_max");
    check(angle_spread_deg >= 0.0 && delay_spread_ns >= 0.0 && power_decay >= 0.0,
          "spreads and power_decay must be non-negative");
    check(std::isfinite(snr_db), "snr_db must be finite");
    check(train_fraction > 0.0 && train_fraction < 1.0, "train_fraction must lie in (0, 1)");
    const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(num_users) * train_fraction));
    check(n_train >= 1 && n_train < num_users,
          "num_users and train_fraction must leave both a training and a test user");

    const std::size_t feature_elems = num_users * 2 * feature_dim();
    const std::size_t label_elems = num_users * codebook_size;
    require(feature_elems <= max_matrix_elements && label_elems <= max_matrix_elements, ErrorCode::config,
            "scenario '" + name + "' needs a " + std::to_string(num_users) + "x" + std::to_string(2 * feature_dim()) +
                " feature matrix and a " + std::to_string(num_users) + "x" + std::to_string(codebook_size) +
                " label matrix; the limit is " + std::to_string(max_matrix_elements) + " elements per matrix");
}

ScenarioConfig scenario_preset(const std::string &name)
{
    ScenarioConfig c;
    c.name = name;
    if (name == "O1_60-mini")
    {
        c.num_antennas = 64;
        c.num_subcarriers = 1024;
        c.num_pilot_subcarriers = 8;
        c.num_users = 4000;
        c.num_paths = 5;
        c.carrier_ghz = 60.0;
        c.bandwidth_ghz = 0.5;
        c.codebook_size = 64;
        c.user_region = {10.0, 110.0, -80.0, 80.0};
        c.delay_spread_ns = 50.0;
        c.seed = 601;
    }
    else if (name == "I1_2p5-mini")
    {
        c.num_antennas = 32;
        c.num_subcarriers = 64;
        c.num_pilot_subcarriers = 8;
        c.num_users = 2000;
        c.num_paths = 5;
        c.carrier_ghz = 2.5;
        c.bandwidth_ghz = 0.02;
        c.codebook_size = 32;
        c.user_region = {1.0, 10.0, -5.0, 5.0};
        c.delay_spread_ns = 15.0;
        c.seed = 25;
    }
    else if (name == "I3_60-mini")
    {
        c.num_antennas = 16;
        c.num_subcarriers = 32;
        c.num_pilot_subcarriers = 8;
        c.num_users = 2000;
        c.num_paths = 5;
        c.carrier_ghz = 60.0;
        c.bandwidth_ghz = 0.5;
        c.codebook_size = 16;
        c.user_region = {1.0, 11.0, -5.0, 5.0};
        c.delay_spread_ns = 10.0;
        c.seed = 360;
    }
    else
    {
        std::string known;
        for (const auto &n : scenario_preset_names())
            known += (known.empty() ? "" : ", ") + n;
        fail(ErrorCode::config, "unknown scenario preset '" + name + "' (known: " + known + ")");
    }
    return c;
}

std::vector<std::string> scenario_preset_names()
{
    return {"O1_60-mini", "I1_2p5-mini", "I3_60-mini"};
}

std::vector<ComplexVector> dft_codebook(std::size_t num_antennas, std::size_t m)
{
    require(m >= 1, ErrorCode::invalid_argument, "codebook needs at least one beam");
    require(num_antennas >= 1, ErrorCode::invalid_argument, "codebook needs at least one antenna");
    const double norm = 1.0 / std::sqrt(static_cast<double>(num_antennas));
    std::vector<ComplexVector> beams(m, ComplexVector(num_antennas));
    for (std::size_t b = 0; b < m; ++b)
        for (std::size_t u = 0; u < num_antennas; ++u)
        {
            // Reduce u*b mod m first so the phase argument stays small.
            const double phase = -2.0 * std::numbers::pi * static_cast<double>((u * b) % m) / static_cast<double>(m);
            beams[b][u] = std::polar(norm, phase);
        }
    return beams;
}

ComplexVector generate_user_channel(const ScenarioConfig &config, std::uint64_t user_seed)
{
    Rng rng(user_seed);
    const Rect &r = config.user_region;
    const double x = rng.uniform(r.x_min, r.x_max);
    const double y = rng.uniform(r.y_min, r.y_max);
    const double los_angle = std::atan2(y, x);
    const double spread = config.angle_spread_deg * std::numbers::pi / 180.0;

    std::vector<double> powers(config.num_paths);
    double total_power = 0.0;
    for (std::size_t l = 0; l < config.num_paths; ++l)
    {
        powers[l] = std::exp(-config.power_decay * static_cast<double>(l));
        total_power += powers[l];
    }

    struct Path
    {
        Complex gain;
        double angle;
        double delay_s;
    };
    std::vector<Path> paths(config.num_paths);
    for (std::size_t l = 0; l < config.num_paths; ++l)
    {
        Path &p = paths[l];
        p.angle = l == 0 ? los_angle : los_angle + spread * rng.normal();
        p.delay_s = l == 0 ? 0.0 : rng.exponential(config.delay_spread_ns) * 1e-9;
        if (config.unit_gain)
            p.gain = Complex(1.0, 0.0);
        else
        {
            const double sigma = std::sqrt(powers[l] / total_power / 2.0);
            const double re = rng.normal();
            const double im = rng.normal();
            p.gain = Complex(sigma * re, sigma * im);
        }
    }

    const std::size_t antennas = config.num_antennas;
    const std::size_t pilots = config.num_pilot_subcarriers;
    const double bandwidth_hz = config.bandwidth_ghz * 1e9;
    ComplexVector h(antennas * pilots);
    for (std::size_t s = 0; s < pilots; ++s)
    {
        const std::size_t subcarrier = s * (config.num_subcarriers / pilots);
        const double freq = static_cast<double>(subcarrier) * bandwidth_hz / static_cast<double>(config.num_subcarriers);
        for (const Path &p : paths)
        {
            const Complex delay_term = std::polar(1.0, -2.0 * std::numbers::pi * p.delay_s * freq);
            const double sin_angle = std::sin(p.angle);
            for (std::size_t u = 0; u < antennas; ++u)
            {
                const Complex steering = std::polar(1.0, std::numbers::pi * static_cast<double>(u) * sin_angle);
                h[s * antennas + u] += p.gain * steering * delay_term;
            }
        }
    }
    return h;
}

std::vector<double> compute_beam_labels(std::span<const Complex> channel, std::size_t num_antennas,
                                        const std::vector<ComplexVector> &codebook, double noise_power)
{
    require(num_antennas >= 1 && channel.size() % num_antennas == 0 && !channel.empty(),
            ErrorCode::dimension_mismatch, "channel length is not a multiple of the antenna count");
    require(!codebook.empty(), ErrorCode::invalid_argument, "empty codebook");
    require(noise_power > 0.0, ErrorCode::invalid_argument, "noise power must be positive");
    const bool all_zero = std::all_of(channel.begin(), channel.end(), [](Complex v) { return v == Complex(0.0, 0.0); });
    require(!all_zero, ErrorCode::numeric, "all-zero channel has no defined beam labels");

    const std::size_t pilots = channel.size() / num_antennas;
    std::vector<double> rates(codebook.size(), 0.0);
    for (std::size_t b = 0; b < codebook.size(); ++b)
    {
        require(codebook[b].size() == num_antennas, ErrorCode::dimension_mismatch,
                "codebook beam " + std::to_string(b) + " has the wrong antenna count");
        double rate = 0.0;
        for (std::size_t s = 0; s < pilots; ++s)
        {
            Complex response{};
            for (std::size_t u = 0; u < num_antennas; ++u)
                response += std::conj(channel[s * num_antennas + u]) * codebook[b][u];
            rate += std::log2(1.0 + std::norm(response) / noise_power);
        }
        rates[b] = rate / static_cast<double>(pilots);
    }
    const double best = *std::max_element(rates.begin(), rates.end());
    require(best > 0.0, ErrorCode::numeric, "channel yields zero rate on every beam");
    for (double &v : rates)
        v /= best;
    return rates;
}

std::vector<double> complex_to_real(std::span<const Complex> samples)
{
    std::vector<double> out(2 * samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
    {
        out[2 * i] = samples[i].real();
        out[2 * i + 1] = samples[i].imag();
    }
    return out;
}

ComplexVector real_to_complex(std::span<const double> row)
{
    require(row.size() % 2 == 0, ErrorCode::dimension_mismatch,
            "real feature row has odd length " + std::to_string(row.size()));
    ComplexVector out(row.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = Complex(row[2 * i], row[2 * i + 1]);
    return out;
}

Dataset generate_scenario(const ScenarioConfig &config, int threads)
{
    config.validate();
    const std::size_t n = config.num_users;
    const std::size_t k = config.feature_dim();
    const std::size_t m = config.codebook_size;
    const auto codebook = dft_codebook(config.num_antennas, m);
    const double noise_power = std::pow(10.0, -config.snr_db / 10.0);

    Dataset ds;
    ds.scenario = config;
    ds.features = Matrix(n, 2 * k);
    ds.labels = Matrix(n, m);

    parallel_chunks(n, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t user = begin; user < end; ++user)
        {
            const std::uint64_t user_seed = derive_seed(config.seed, user);
            for (std::uint64_t attempt = 0;; ++attempt)
            {
                require(attempt < 100, ErrorCode::numeric,
                        "user " + std::to_string(user) + " kept drawing degenerate channels");
                const ComplexVector h = generate_user_channel(config, attempt == 0 ? user_seed : derive_seed(user_seed, attempt));
                const bool degenerate =
                    std::all_of(h.begin(), h.end(), [](Complex v) { return std::abs(v) == 0.0; });
                if (degenerate)
                    continue;
                const auto labels = compute_beam_labels(h, config.num_antennas, codebook, noise_power);
                const auto real = complex_to_real(h);
                std::copy(real.begin(), real.end(), ds.features.row(user).begin());
                std::copy(labels.begin(), labels.end(), ds.labels.row(user).begin());
                break;
            }
        }
    });

    ds = split_dataset(std::move(ds), config.train_fraction, derive_seed(config.seed, "split"));
    return normalize_features(std::move(ds));
}

Dataset split_dataset(Dataset dataset, double train_fraction, std::uint64_t seed)
{
    const std::size_t n = dataset.size();
    require(n >= 2, ErrorCode::invalid_argument, "splitting needs at least 2 rows, got " + std::to_string(n));
    require(train_fraction > 0.0 && train_fraction < 1.0, ErrorCode::invalid_argument,
            "train fraction must lie in (0, 1)");
    const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_fraction));
    require(n_train >= 1 && n_train < n, ErrorCode::invalid_argument,
            "train fraction " + std::to_string(train_fraction) + " leaves an empty part for n=" + std::to_string(n));

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i)
        order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);
    dataset.split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    dataset.split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    std::sort(dataset.split.train.begin(), dataset.split.train.end());
    std::sort(dataset.split.test.begin(), dataset.split.test.end());
    return dataset;
}

Dataset normalize_features(Dataset dataset)
{
    require(!dataset.normalization.applied, ErrorCode::state, "dataset features are already normalized");
    require(!dataset.split.train.empty(), ErrorCode::state, "normalization needs a training split");
    double max_modulus = 0.0;
    for (std::size_t r : dataset.split.train)
    {
        auto row = dataset.features.row(r);
        for (std::size_t i = 0; i + 1 < row.size(); i += 2)
            max_modulus = std::max(max_modulus, std::hypot(row[i], row[i + 1]));
    }
    require(max_modulus > 0.0 && std::isfinite(max_modulus), ErrorCode::numeric,
            "training features have no usable scale");
    // Rows outside the training split may exceed the training scale; keep
    // every feature inside the recorded range.
    for (double &v : dataset.features.values())
        v = std::clamp(v / max_modulus, -1.0, 1.0);
    dataset.normalization.applied = true;
    dataset.normalization.scale = max_modulus;
    dataset.normalization.feature_lo = -1.0;
    dataset.normalization.feature_hi = 1.0;
    return dataset;
}

namespace
{

void append_number(std::string &out, double v)
{
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    out.append(buf, res.ptr);
}

std::vector<std::string_view> split_commas(std::string_view line)
{
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true)
    {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos)
        {
            cells.push_back(line.substr(start));
            return cells;
        }
        cells.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

std::string expected_column(std::size_t index, std::size_t k)
{
    if (index < 2 * k)
        return "f" + std::to_string(index / 2) + (index % 2 == 0 ? "_re" : "_im");
    return "y" + std::to_string(index - 2 * k);
}

} // namespace

void export_dataset_csv(const Dataset &dataset, const std::filesystem::path &path)
{
    const std::size_t k2 = dataset.features.cols();
    const std::size_t m = dataset.labels.cols();
    require(k2 % 2 == 0, ErrorCode::dimension_mismatch, "feature width must be even");
    require(dataset.labels.rows() == dataset.features.rows(), ErrorCode::dimension_mismatch,
            "feature and label row counts differ");

    std::string out;
    out.reserve((k2 + m) * 24 * (dataset.size() + 1));
    for (std::size_t c = 0; c < k2 + m; ++c)
    {
        if (c)
            out += ',';
        out += expected_column(c, k2 / 2);
    }
    out += '\n';
    for (std::size_t r = 0; r < dataset.size(); ++r)
    {
        for (std::size_t c = 0; c < k2; ++c)
        {
            if (c)
                out += ',';
            append_number(out, dataset.features(r, c));
        }
        for (std::size_t c = 0; c < m; ++c)
        {
            out += ',';
            append_number(out, dataset.labels(r, c));
        }
        out += '\n';
    }

    std::ofstream f(path, std::ios::binary);
    require(static_cast<bool>(f), ErrorCode::io, "cannot open '" + path.string() + "' for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    require(static_cast<bool>(f), ErrorCode::io, "failed writing '" + path.string() + "'");
}

Dataset import_dataset_csv(const std::filesystem::path &path)
{
    std::ifstream f(path, std::ios::binary);
    require(static_cast<bool>(f), ErrorCode::io, "cannot open '" + path.string() + "'");
    std::stringstream buffer;
    buffer << f.rdbuf();
    const std::string text = buffer.str();

    std::vector<std::string_view> lines;
    {
        std::string_view rest(text);
        while (!rest.empty())
        {
            const std::size_t nl = rest.find('\n');
            std::string_view line = rest.substr(0, nl);
            if (!line.empty() && line.back() == '\r')
                line.remove_suffix(1);
            lines.push_back(line);
            if (nl == std::string_view::npos)
                break;
            rest.remove_prefix(nl + 1);
        }
    }
    while (!lines.empty() && lines.back().empty())
        lines.pop_back();
    if (lines.empty())
        throw ParseError("no data rows (file is empty)", 0);

    const auto header = split_commas(lines[0]);
    std::size_t feature_cols = 0;
    while (feature_cols < header.size() && !header[feature_cols].empty() && header[feature_cols][0] == 'f')
        ++feature_cols;
    if (feature_cols == 0)
        throw ParseError("expected column 'f0_re' but found '" + std::string(header[0]) + "'", 1);
    // an odd count means the last feature pair is incomplete
    const std::size_t k = (feature_cols + 1) / 2;
    for (std::size_t c = 0; c < header.size(); ++c)
    {
        const std::string want = expected_column(c, k);
        if (header[c] != want)
            throw ParseError("expected column '" + want + "' but found '" + std::string(header[c]) + "'", 1);
    }
    if (header.size() == 2 * k)
        throw ParseError("expected column 'y0' after the feature columns", 1);
    const std::size_t m = header.size() - 2 * k;

    if (lines.size() < 2)
        throw ParseError("no data rows", 1);

    std::vector<double> feats;
    std::vector<double> labels;
    feats.reserve((lines.size() - 1) * 2 * k);
    labels.reserve((lines.size() - 1) * m);
    for (std::size_t li = 1; li < lines.size(); ++li)
    {
        const auto cells = split_commas(lines[li]);
        if (cells.size() != header.size())
            throw ParseError("row has " + std::to_string(cells.size()) + " cells, header has " +
                                 std::to_string(header.size()),
                             li + 1);
        for (std::size_t c = 0; c < cells.size(); ++c)
        {
            double v = 0.0;
            const auto cell = cells[c];
            auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(v))
                throw ParseError("column '" + expected_column(c, k) + "': not a finite number: '" + std::string(cell) + "'",
                                 li + 1);
            (c < 2 * k ? feats : labels).push_back(v);
        }
    }

    Dataset ds;
    const std::size_t n = lines.size() - 1;
    ds.features = Matrix(n, 2 * k, std::move(feats));
    ds.labels = Matrix(n, m, std::move(labels));
    ds.scenario.name = "imported:" + path.filename().string();
    ds.scenario.num_antennas = k;
    ds.scenario.num_pilot_subcarriers = 1;
    ds.scenario.num_subcarriers = 1;
    ds.scenario.num_users = n;
    ds.scenario.codebook_size = m;
    return ds;
}

} // namespace beamadv
