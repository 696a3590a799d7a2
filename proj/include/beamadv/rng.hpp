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

#ifndef BEAMADV_RNG_HPP
#define BEAMADV_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace beamadv
{

// All randomness flows from explicit 64-bit seeds. std::mt19937_64's output
// sequence is fixed by the standard; the distributions below are hand-rolled
// because the standard library's are implementation-defined.

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Child seed for a numbered stream (row, user, cell index...).
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept;
/// Child seed for a named stream.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag) noexcept;

class Rng
{
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Standard normal (Box-Muller, cached pair).
    double normal();
    /// Exponential with the given mean.
    double exponential(double mean);
    /// Uniform integer in [0, n).
    std::size_t below(std::size_t n);

    template <typename T>
    void shuffle(std::vector<T> &v)
    {
        for (std::size_t i = v.size(); i > 1; --i)
        {
            std::size_t j = below(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace beamadv

#endif
