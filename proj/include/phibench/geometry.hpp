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

#include <algorithm>
#include <cstdint>
#include <vector>

namespace phibench {

/// Axis-aligned pixel box; (x, y) is the top-left corner.
struct BoundingBox {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    int right() const noexcept { return x + w; }
    int bottom() const noexcept { return y + h; }
    std::int64_t area() const noexcept { return static_cast<std::int64_t>(w) * h; }
    bool valid() const noexcept { return w > 0 && h > 0 && x >= 0 && y >= 0; }

    bool fits_in(int width, int height) const noexcept {
        return valid() && right() <= width && bottom() <= height;
    }

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

inline std::int64_t intersection_area(const BoundingBox& a, const BoundingBox& b) noexcept {
    const int ix = std::max(0, std::min(a.right(), b.right()) - std::max(a.x, b.x));
    const int iy = std::max(0, std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y));
    return static_cast<std::int64_t>(ix) * iy;
}

inline double iou(const BoundingBox& a, const BoundingBox& b) noexcept {
    const std::int64_t inter = intersection_area(a, b);
    const std::int64_t uni = a.area() + b.area() - inter;
    return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

/// Top-to-bottom, then left-to-right.
inline bool reading_order_less(const BoundingBox& a, const BoundingBox& b) noexcept {
    if (a.y != b.y) return a.y < b.y;
    if (a.x != b.x) return a.x < b.x;
    if (a.h != b.h) return a.h < b.h;
    return a.w < b.w;
}

inline void canonical_sort(std::vector<BoundingBox>& boxes) {
    std::stable_sort(boxes.begin(), boxes.end(), reading_order_less);
}

}  // namespace phibench
