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

#ifndef BEAMADV_CHANNEL_HPP
#define BEAMADV_CHANNEL_HPP

#include "beamadv/matrix.hpp"

#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace beamadv
{

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;

struct Rect
{
    double x_min = 0.0;
    double x_max = 0.0;
    double y_min = 0.0;
    double y_max = 0.0;
};

/// Geometry and radio parameters of one synthetic scenario. The base station
/// is a uniform linear array at the origin with broadside along +x.
struct ScenarioConfig
{
    std::string name = "custom";
    std::size_t num_antennas = 16;
    std::size_t num_subcarriers = 32;
    std::size_t num_pilot_subcarriers = 8;
    std::size_t num_users = 1000;
    std::size_t num_paths = 5;
    double carrier_ghz = 60.0;
    double bandwidth_ghz = 0.5;
    std::size_t codebook_size = 16;
    Rect user_region{5.0, 50.0, -40.0, 40.0};
    std::uint64_t seed = 1;

    double angle_spread_deg = 5.0;   // std of per-path angular scatter
    double delay_spread_ns = 20.0;   // mean excess delay of non-line-of-sight paths
    double power_decay = 4.0;        // path l carries power proportional to exp(-l * decay)
    double snr_db = 0.0;             // per-antenna SNR used for the rate labels
    double train_fraction = 0.8;
    bool unit_gain = false;          // force every path gain to exactly 1
    std::size_t max_matrix_elements = 50'000'000;

    std::size_t feature_dim() const noexcept { return num_antennas * num_pilot_subcarriers; }

    /// Throws a config error on the first violated constraint.
    void validate() const;
};

/// Named desk-scale presets: "O1_60-mini", "I1_2p5-mini", "I3_60-mini".
ScenarioConfig scenario_preset(const std::string &name);
std::vector<std::string> scenario_preset_names();

struct DataSplit
{
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;

    bool empty() const noexcept { return train.empty() && test.empty(); }
    friend bool operator==(const DataSplit &, const DataSplit &) = default;
};

struct NormalizationRecord
{
    bool applied = false;
    /// Features were divided by this (max channel modulus over training users).
    double scale = 1.0;
    /// Range attacks clip adversarial features to.
    double feature_lo = -1.0;
    double feature_hi = 1.0;

    friend bool operator==(const NormalizationRecord &, const NormalizationRecord &) = default;
};

struct Dataset
{
    /// n x 2k, layout [re0, im0, re1, im1, ...] with entry index s * antennas + u.
    Matrix features;
    /// n x m, each row max-normalized achievable rates.
    Matrix labels;
    ScenarioConfig scenario;
    DataSplit split;
    NormalizationRecord normalization;

    std::size_t size() const noexcept { return features.rows(); }
    Matrix train_features() const { return features.select_rows(split.train); }
    Matrix train_labels() const { return labels.select_rows(split.train); }
    Matrix test_features() const { return features.select_rows(split.test); }
    Matrix test_labels() const { return labels.select_rows(split.test); }
};

/// Beam b, antenna u: exp(-j 2 pi u b / m) / sqrt(num_antennas).
std::vector<ComplexVector> dft_codebook(std::size_t num_antennas, std::size_t m);

/// Per-user channel at the pilot subcarriers, pilot-major (index s * antennas + u).
ComplexVector generate_user_channel(const ScenarioConfig &config, std::uint64_t user_seed);

/// rate_b = mean_s log2(1 + |h_s^H f_b|^2 / noise_power), then divided by its max.
std::vector<double> compute_beam_labels(std::span<const Complex> channel, std::size_t num_antennas,
                                        const std::vector<ComplexVector> &codebook, double noise_power);

std::vector<double> complex_to_real(std::span<const Complex> samples);
ComplexVector real_to_complex(std::span<const double> row);

/// Generates, splits and normalizes a dataset. Deterministic in config.seed
/// regardless of `threads`.
Dataset generate_scenario(const ScenarioConfig &config, int threads = 1);

/// Deterministic shuffled split into floor(n f) training and the rest test
/// rows. Each list is returned in ascending order.
Dataset split_dataset(Dataset dataset, double train_fraction, std::uint64_t seed);

/// Divides features by the max complex modulus over training rows, clamps to
/// [-1, 1] and records the scale.
Dataset normalize_features(Dataset dataset);

/// Header f0_re,f0_im,...,f{k-1}_re,f{k-1}_im,y0,...,y{m-1}; 17 significant digits.
void export_dataset_csv(const Dataset &dataset, const std::filesystem::path &path);
/// Features and labels only: the imported dataset has no split and is marked
/// as not normalized by this library.
Dataset import_dataset_csv(const std::filesystem::path &path);

} // namespace beamadv

#endif
