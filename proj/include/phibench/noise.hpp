// Copyright 2026 The phibench Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "phibench/error.hpp"
#include "phibench/rng.hpp"

namespace phibench {

namespace detail {

// Glyph pairs OCR engines commonly confuse.
inline char confusable(char c, Rng& rng) {
    switch (c) {
        case 'O': return '0';
        case '0': return rng.bernoulli(0.5) ? 'O' : 'o';
        case 'o': return '0';
        case 'l': return '1';
        case '1': return rng.bernoulli(0.5) ? 'l' : 'I';
        case 'I': return '1';
        case 'S': return '5';
        case '5': return 'S';
        case 'B': return '8';
        case '8': return 'B';
        case 'Z': return '2';
        case '2': return 'Z';
        case 'G': return '6';
        case '6': return 'G';
        case 'e': return 'c';
        case 'c': return 'e';
        case 'm': return 'n';
        case 'n': return 'm';
        case '.': return ',';
        case ',': return '.';
        case '-': return '_';
        case '@': return 'a';
        default: break;
    }
    static constexpr std::string_view kAlphabet = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
    char r;
    do {
        r = kAlphabet[rng.index(kAlphabet.size())];
    } while (r == c);
    return r;
}

}  // namespace detail

/// Corrupts each character independently with probability char_error_rate by
/// substitution (confusion table first), deletion, or duplication. The number
/// of corrupted source positions is written to corrupted when non-null.
inline std::string inject_ocr_noise(std::string_view text, double char_error_rate, Rng& rng,
                                    std::size_t* corrupted = nullptr) {
    if (!(char_error_rate >= 0.0 && char_error_rate <= 1.0)) {
        throw ConfigError("char_error_rate must lie in [0, 1]");
    }
    std::string out;
    out.reserve(text.size() + 4);
    std::size_t hits = 0;
    for (char c : text) {
        if (!rng.bernoulli(char_error_rate)) {
            out.push_back(c);
            continue;
        }
        ++hits;
        const double u = rng.uniform();
        if (u < 0.7) {
            out.push_back(detail::confusable(c, rng));
        } else if (u < 0.85) {
            // dropped
        } else {
            out.push_back(c);
            out.push_back(c);
        }
    }
    if (corrupted) *corrupted = hits;
    return out;
}

}  // namespace phibench
