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

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "phibench/error.hpp"
#include "phibench/geometry.hpp"

namespace phibench {

/// Interleaved 8-bit image with 1 (gray) or 3 (RGB) channels.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> pixels;

    Image() = default;
    Image(int w, int h, int c, std::uint8_t fill = 0)
        : width(w), height(h), channels(c), pixels(static_cast<std::size_t>(w) * h * c, fill) {}

    bool empty() const noexcept { return pixels.empty(); }

    std::uint8_t& at(int x, int y, int c = 0) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t at(int x, int y, int c = 0) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    /// Non-owning OpenCV header over the pixel buffer.
    cv::Mat view() {
        return cv::Mat(height, width, channels == 1 ? CV_8UC1 : CV_8UC3, pixels.data());
    }
    cv::Mat view() const {
        return cv::Mat(height, width, channels == 1 ? CV_8UC1 : CV_8UC3,
                       const_cast<std::uint8_t*>(pixels.data()));
    }

    friend bool operator==(const Image&, const Image&) = default;
};

inline Image from_mat(const cv::Mat& m) {
    cv::Mat src = m;
    if (src.depth() == CV_16U) src.convertTo(src, CV_8U, 1.0 / 257.0);
    if (src.depth() != CV_8U) throw IoError("only 8 and 16-bit images are supported");
    if (src.channels() == 4) cv::cvtColor(src, src, cv::COLOR_BGRA2RGB);
    else if (src.channels() == 3) cv::cvtColor(src, src, cv::COLOR_BGR2RGB);
    if (!src.isContinuous()) src = src.clone();
    Image img(src.cols, src.rows, src.channels());
    std::copy(src.datastart, src.dataend, img.pixels.begin());
    return img;
}

inline std::vector<std::uint8_t> encode_png(const Image& img) {
    cv::Mat m = img.view();
    cv::Mat out;
    if (img.channels == 3) cv::cvtColor(m, out, cv::COLOR_RGB2BGR);
    else out = m;
    std::vector<std::uint8_t> buf;
    if (!cv::imencode(".png", out, buf)) throw IoError("png encoding failed");
    return buf;
}

inline Image decode_png(std::span<const std::uint8_t> bytes) {
    if (bytes.empty()) throw IoError("empty image buffer");
    std::vector<std::uint8_t> copy(bytes.begin(), bytes.end());
    cv::Mat m = cv::imdecode(copy, cv::IMREAD_UNCHANGED);
    if (m.empty()) throw IoError("image buffer is not decodable");
    return from_mat(m);
}

inline Image read_image(const std::filesystem::path& path) {
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (m.empty()) throw IoError("cannot read image: " + path.string());
    return from_mat(m);
}

inline void write_png(const Image& img, const std::filesystem::path& path) {
    const auto buf = encode_png(img);
    FILE* f = std::fopen(path.string().c_str(), "wb");
    if (!f) throw IoError("cannot write image: " + path.string());
    const bool ok = std::fwrite(buf.data(), 1, buf.size(), f) == buf.size();
    std::fclose(f);
    if (!ok) throw IoError("short write: " + path.string());
}

inline Image to_gray(const Image& img) {
    if (img.channels == 1) return img;
    cv::Mat g;
    cv::cvtColor(img.view(), g, cv::COLOR_RGB2GRAY);
    return from_mat(g);
}

inline Image crop(const Image& img, const BoundingBox& box) {
    if (!box.fits_in(img.width, img.height)) throw Error("crop box outside image");
    Image out(box.w, box.h, img.channels);
    const std::size_t row = static_cast<std::size_t>(box.w) * img.channels;
    for (int r = 0; r < box.h; ++r) {
        const auto* src = &img.pixels[(static_cast<std::size_t>(box.y + r) * img.width + box.x) * img.channels];
        std::copy(src, src + row, &out.pixels[static_cast<std::size_t>(r) * row]);
    }
    return out;
}

}  // namespace phibench
