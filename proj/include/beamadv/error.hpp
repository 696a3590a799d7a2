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

#ifndef BEAMADV_ERROR_HPP
#define BEAMADV_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace beamadv
{

// Mirrors ba_status in beamadv.h; values are part of the C ABI.
enum class ErrorCode : int
{
    invalid_argument = 1,
    dimension_mismatch = 2,
    state = 3,
    parse = 4,
    io = 5,
    numeric = 6,
    config = 7,
    unsupported = 8,
    internal = 99
};

std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error
{
public:
    Error(ErrorCode code, const std::string &message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Parse failures carry the 1-based line they were detected on (0 = unknown).
class ParseError : public Error
{
public:
    ParseError(const std::string &message, std::size_t line = 0)
        : Error(ErrorCode::parse, line ? "line " + std::to_string(line) + ": " + message : message),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string &message)
{
    throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string &message)
{
    if (!condition)
        throw Error(code, message);
}

} // namespace beamadv

#endif
