// Copyright 2026 The qdfarm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qdfarm/imaging.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "qdfarm/stats.h"

namespace qdfarm {

ChargeStabilityMap differentiate_dc(const ChargeStabilityMap &map) {
    if (map.mode() != MapMode::DcCurrent) {
        throw std::invalid_argument("differentiate_dc expects a dc_current map");
    }
    const std::size_t rows = map.rows();
    const std::size_t cols = map.cols();
    if (rows < 3) {
        throw std::invalid_argument("differentiate_dc needs at least 3 V_DS rows");
    }
    ChargeStabilityMap out(map.device_id(), MapMode::DcDerivative, map.vg(), map.vds());
    const auto &vds = map.vds();
    for (std::size_t r = 0; r < rows; ++r) {
        std::size_t a = r == 0 ? 0 : r - 1;
        std::size_t b = r + 1 == rows ? rows - 1 : r + 1;
        double dv = vds.at(b) - vds.at(a);
        for (std::size_t c = 0; c < cols; ++c) {
            out.at(r, c) = (map.at(b, c) - map.at(a, c)) / dv;
        }
    }
    return out;
}

ChargeStabilityMap remove_drift(const ChargeStabilityMap &map, std::size_t window) {
    ChargeStabilityMap out = map;
    const std::size_t n = std::min(std::max<std::size_t>(window, 1), map.cols());
    for (std::size_t r = 0; r < map.rows(); ++r) {
        auto row = out.row(r);
        double mean = 0.0;
        for (std::size_t c = 0; c < n; ++c) mean += row[c];
        mean /= static_cast<double>(n);
        for (double &x : row) x -= mean;
    }
    return out;
}

// ---------------------------------------------------------------------------
// CLAHE

namespace {

struct TileMapping {
    bool identity = false;
    std::vector<double> lut;

    double apply(double v, int bins) const {
        if (identity) return v;
        int b = std::min(bins - 1, static_cast<int>(v * bins));
        return lut[std::max(b, 0)];
    }
};

std::vector<std::size_t> tile_edges(std::size_t extent, int tiles) {
    std::vector<std::size_t> edges(tiles + 1);
    for (int i = 0; i <= tiles; ++i) {
        edges[i] = extent * static_cast<std::size_t>(i) / static_cast<std::size_t>(tiles);
    }
    return edges;
}

// Locates `pos` between tile centers; returns lower tile and weight of the upper.
std::pair<int, double> blend_position(double pos, const std::vector<double> &centers) {
    const int n = static_cast<int>(centers.size());
    if (n == 1 || pos <= centers.front()) return {0, 0.0};
    if (pos >= centers.back()) return {n - 1, 0.0};
    int i = 0;
    while (i + 1 < n && centers[i + 1] <= pos) ++i;
    if (i + 1 >= n) return {n - 1, 0.0};
    double w = (pos - centers[i]) / (centers[i + 1] - centers[i]);
    return {i, w};
}

}  // namespace

ChargeStabilityMap clahe(const ChargeStabilityMap &map, const ClaheParams &params) {
    if (params.tile_rows < 1 || params.tile_cols < 1) {
        throw std::invalid_argument("clahe needs at least a 1x1 tile grid");
    }
    if (!(params.clip_limit > 0.0)) {
        throw std::invalid_argument("clahe clip limit must be positive");
    }
    if (params.bins < 2) {
        throw std::invalid_argument("clahe needs at least 2 histogram bins");
    }
    const std::size_t rows = map.rows();
    const std::size_t cols = map.cols();
    if (rows < static_cast<std::size_t>(params.tile_rows) || cols < static_cast<std::size_t>(params.tile_cols)) {
        throw std::invalid_argument("clahe tile grid is finer than the map");
    }
    const int bins = params.bins;

    ChargeStabilityMap out = map;
    auto [mn_it, mx_it] = std::minmax_element(map.values().begin(), map.values().end());
    const double lo = *mn_it;
    const double hi = *mx_it;
    if (!(hi > lo)) {
        std::fill(out.values().begin(), out.values().end(), 0.0);
        return out;
    }
    std::vector<double> norm(map.size());
    for (std::size_t i = 0; i < map.size(); ++i) {
        norm[i] = (map.values()[i] - lo) / (hi - lo);
    }

    auto re = tile_edges(rows, params.tile_rows);
    auto ce = tile_edges(cols, params.tile_cols);
    std::vector<TileMapping> tiles(params.tile_rows * params.tile_cols);
    for (int ti = 0; ti < params.tile_rows; ++ti) {
        for (int tj = 0; tj < params.tile_cols; ++tj) {
            TileMapping &tm = tiles[ti * params.tile_cols + tj];
            std::vector<double> hist(bins, 0.0);
            double tmin = 1.0, tmax = 0.0;
            for (std::size_t r = re[ti]; r < re[ti + 1]; ++r) {
                for (std::size_t c = ce[tj]; c < ce[tj + 1]; ++c) {
                    double v = norm[r * cols + c];
                    tmin = std::min(tmin, v);
                    tmax = std::max(tmax, v);
                    int b = std::min(bins - 1, static_cast<int>(v * bins));
                    hist[b] += 1.0;
                }
            }
            const double total = static_cast<double>((re[ti + 1] - re[ti]) * (ce[tj + 1] - ce[tj]));
            if (!(tmax > tmin)) {
                tm.identity = true;
                continue;
            }
            const double clip = std::max(1.0, params.clip_limit * total);
            double excess = 0.0;
            for (double &h : hist) {
                if (h > clip) {
                    excess += h - clip;
                    h = clip;
                }
            }
            const double share = excess / bins;
            for (double &h : hist) h += share;
            tm.lut.resize(bins);
            double cdf = 0.0;
            const double cdf_min = hist[0];
            for (int b = 0; b < bins; ++b) {
                cdf += hist[b];
                tm.lut[b] = cdf;
            }
            const double denom = total - cdf_min;
            if (!(denom > 0.0)) {
                tm.identity = true;
                continue;
            }
            for (double &x : tm.lut) x = std::clamp((x - cdf_min) / denom, 0.0, 1.0);
        }
    }

    std::vector<double> rc(params.tile_rows), cc(params.tile_cols);
    for (int i = 0; i < params.tile_rows; ++i) rc[i] = 0.5 * static_cast<double>(re[i] + re[i + 1] - 1);
    for (int j = 0; j < params.tile_cols; ++j) cc[j] = 0.5 * static_cast<double>(ce[j] + ce[j + 1] - 1);

    for (std::size_t r = 0; r < rows; ++r) {
        auto [i0, wy] = blend_position(static_cast<double>(r), rc);
        int i1 = std::min(i0 + 1, params.tile_rows - 1);
        for (std::size_t c = 0; c < cols; ++c) {
            auto [j0, wx] = blend_position(static_cast<double>(c), cc);
            int j1 = std::min(j0 + 1, params.tile_cols - 1);
            double v = norm[r * cols + c];
            auto f = [&](int i, int j) { return tiles[i * params.tile_cols + j].apply(v, bins); };
            double top = (1.0 - wx) * f(i0, j0) + wx * f(i0, j1);
            double bottom = (1.0 - wx) * f(i1, j0) + wx * f(i1, j1);
            out.at(r, c) = std::clamp((1.0 - wy) * top + wy * bottom, 0.0, 1.0);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Canny

std::size_t BinaryEdgeMap::count() const {
    return static_cast<std::size_t>(std::count_if(pixels.begin(), pixels.end(), [](auto p) { return p != 0; }));
}

namespace {

std::vector<double> gaussian_smooth(std::span<const double> img, std::size_t rows, std::size_t cols, double sigma) {
    if (!(sigma > 0.0)) {
        return {img.begin(), img.end()};
    }
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int k = -radius; k <= radius; ++k) {
        kernel[k + radius] = std::exp(-0.5 * k * k / (sigma * sigma));
        sum += kernel[k + radius];
    }
    for (double &k : kernel) k /= sum;

    auto clampi = [](long v, long hi) { return static_cast<std::size_t>(std::clamp(v, 0L, hi)); };
    std::vector<double> tmp(rows * cols), out(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            double s = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                s += kernel[k + radius] * img[r * cols + clampi(static_cast<long>(c) + k, static_cast<long>(cols) - 1)];
            }
            tmp[r * cols + c] = s;
        }
    }
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            double s = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                s += kernel[k + radius] * tmp[clampi(static_cast<long>(r) + k, static_cast<long>(rows) - 1) * cols + c];
            }
            out[r * cols + c] = s;
        }
    }
    return out;
}

}  // namespace

BinaryEdgeMap canny(const ChargeStabilityMap &map, const CannyParams &params) {
    if (params.low_threshold.has_value() != params.high_threshold.has_value()) {
        throw std::invalid_argument("canny: set both absolute thresholds or neither");
    }
    if (params.low_threshold && !(*params.low_threshold < *params.high_threshold)) {
        throw std::invalid_argument("canny: low threshold must be below high threshold");
    }
    if (!params.low_threshold && !(params.low_quantile < params.high_quantile)) {
        throw std::invalid_argument("canny: low quantile must be below high quantile");
    }
    const std::size_t rows = map.rows();
    const std::size_t cols = map.cols();
    BinaryEdgeMap edges{map.vg(), map.vds(), std::vector<std::uint8_t>(rows * cols, 0)};
    if (rows < 3 || cols < 3) {
        return edges;
    }

    auto smooth = gaussian_smooth(map.values(), rows, cols, params.gaussian_sigma);
    auto px = [&](long r, long c) {
        r = std::clamp(r, 0L, static_cast<long>(rows) - 1);
        c = std::clamp(c, 0L, static_cast<long>(cols) - 1);
        return smooth[static_cast<std::size_t>(r) * cols + static_cast<std::size_t>(c)];
    };
    std::vector<double> gx(rows * cols), gy(rows * cols), mag(rows * cols);
    for (long r = 0; r < static_cast<long>(rows); ++r) {
        for (long c = 0; c < static_cast<long>(cols); ++c) {
            double sx = (px(r - 1, c + 1) + 2.0 * px(r, c + 1) + px(r + 1, c + 1)) -
                        (px(r - 1, c - 1) + 2.0 * px(r, c - 1) + px(r + 1, c - 1));
            double sy = (px(r + 1, c - 1) + 2.0 * px(r + 1, c) + px(r + 1, c + 1)) -
                        (px(r - 1, c - 1) + 2.0 * px(r - 1, c) + px(r - 1, c + 1));
            std::size_t i = static_cast<std::size_t>(r) * cols + static_cast<std::size_t>(c);
            gx[i] = sx;
            gy[i] = sy;
            mag[i] = std::hypot(sx, sy);
        }
    }

    double low, high;
    if (params.low_threshold) {
        low = *params.low_threshold;
        high = *params.high_threshold;
    } else {
        low = quantile(mag, params.low_quantile);
        high = quantile(mag, params.high_quantile);
    }

    // Non-maximum suppression along the quantized gradient direction.
    std::vector<double> nms(rows * cols, 0.0);
    for (std::size_t r = 1; r + 1 < rows; ++r) {
        for (std::size_t c = 1; c + 1 < cols; ++c) {
            std::size_t i = r * cols + c;
            double m = mag[i];
            if (!(m > 0.0)) continue;
            double angle = std::atan2(gy[i], gx[i]) * 180.0 / std::numbers::pi;
            if (angle < 0.0) angle += 180.0;
            std::size_t a, b;
            if (angle < 22.5 || angle >= 157.5) {
                a = i - 1;
                b = i + 1;
            } else if (angle < 67.5) {
                a = i - cols - 1;
                b = i + cols + 1;
            } else if (angle < 112.5) {
                a = i - cols;
                b = i + cols;
            } else {
                a = i - cols + 1;
                b = i + cols - 1;
            }
            if (m >= mag[a] && m > mag[b]) {
                nms[i] = m;
            }
        }
    }

    // Hysteresis.
    std::vector<std::size_t> stack;
    for (std::size_t i = 0; i < nms.size(); ++i) {
        if (nms[i] > 0.0 && nms[i] >= high) {
            edges.pixels[i] = 1;
            stack.push_back(i);
        }
    }
    while (!stack.empty()) {
        std::size_t i = stack.back();
        stack.pop_back();
        long r = static_cast<long>(i / cols);
        long c = static_cast<long>(i % cols);
        for (long dr = -1; dr <= 1; ++dr) {
            for (long dc = -1; dc <= 1; ++dc) {
                long rr = r + dr, cc = c + dc;
                if (rr < 0 || cc < 0 || rr >= static_cast<long>(rows) || cc >= static_cast<long>(cols)) continue;
                std::size_t j = static_cast<std::size_t>(rr) * cols + static_cast<std::size_t>(cc);
                if (!edges.pixels[j] && nms[j] > 0.0 && nms[j] >= low) {
                    edges.pixels[j] = 1;
                    stack.push_back(j);
                }
            }
        }
    }
    return edges;
}

// ---------------------------------------------------------------------------
// Probabilistic Hough transform

namespace {

struct Pixel {
    int x = 0;  // column
    int y = 0;  // row
};

struct LineFit {
    double cx = 0.0, cy = 0.0;  // centroid
    double dx = 0.0, dy = 0.0;  // unit direction
};

LineFit fit_line(const std::vector<Pixel> &pts) {
    LineFit f;
    const double n = static_cast<double>(pts.size());
    for (const auto &p : pts) {
        f.cx += p.x;
        f.cy += p.y;
    }
    f.cx /= n;
    f.cy /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (const auto &p : pts) {
        double ax = p.x - f.cx, ay = p.y - f.cy;
        sxx += ax * ax;
        syy += ay * ay;
        sxy += ax * ay;
    }
    // Principal axis of the 2x2 scatter matrix.
    double theta = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
    f.dx = std::cos(theta);
    f.dy = std::sin(theta);
    return f;
}

class HoughWalker {
   public:
    HoughWalker(std::vector<std::uint8_t> &mask, int rows, int cols, int max_gap, int band)
        : mask_(mask), rows_(rows), cols_(cols), max_gap_(max_gap), band_(band) {}

    // Collects mask pixels along the line through (x0, y0) with direction
    // (dx, dy), stepping one pixel along the major axis.
    std::vector<Pixel> walk(double x0, double y0, double dx, double dy) const {
        std::vector<Pixel> found;
        const bool steep = std::abs(dy) >= std::abs(dx);
        const double inc = steep ? dx / dy : dy / dx;
        for (int sign : {1, -1}) {
            int gap = 0;
            for (int k = sign > 0 ? 0 : 1;; ++k) {
                double major = (steep ? y0 : x0) + sign * k;
                double minor = (steep ? x0 : y0) + sign * k * inc;
                int mj = static_cast<int>(std::lround(major));
                int base = static_cast<int>(std::lround(minor));
                if (steep ? (mj < 0 || mj >= rows_) : (mj < 0 || mj >= cols_)) break;
                if (steep ? (base < -band_ || base >= cols_ + band_) : (base < -band_ || base >= rows_ + band_)) break;
                bool hit = false;
                for (int off = -band_; off <= band_; ++off) {
                    int mn = base + off;
                    int x = steep ? mn : mj;
                    int y = steep ? mj : mn;
                    if (x < 0 || y < 0 || x >= cols_ || y >= rows_) continue;
                    if (mask_[static_cast<std::size_t>(y) * cols_ + x]) {
                        found.push_back({x, y});
                        hit = true;
                    }
                }
                if (hit) {
                    gap = 0;
                } else if (++gap > max_gap_) {
                    break;
                }
            }
        }
        return found;
    }

   private:
    std::vector<std::uint8_t> &mask_;
    int rows_, cols_, max_gap_, band_;
};

}  // namespace

std::vector<Segment> hough_segments(const BinaryEdgeMap &edges, const HoughParams &params) {
    const int rows = static_cast<int>(edges.rows());
    const int cols = static_cast<int>(edges.cols());
    std::vector<Segment> segments;
    if (rows == 0 || cols == 0) {
        return segments;
    }
    if (!(params.angle_resolution_deg > 0.0) || !(params.distance_resolution > 0.0) || params.max_gap < 0 ||
        params.band < 0) {
        throw std::invalid_argument("hough_segments: invalid resolution, gap or band");
    }
    const double min_length = params.min_length >= 0.0 ? params.min_length : 0.15 * static_cast<double>(rows);

    const int numangle = static_cast<int>(std::lround(180.0 / params.angle_resolution_deg));
    const double irho = 1.0 / params.distance_resolution;
    const int numrho = static_cast<int>(std::lround(2.0 * (rows + cols) * irho)) + 1;
    const int rho_offset = (numrho - 1) / 2;
    std::vector<double> cos_t(numangle), sin_t(numangle);
    for (int n = 0; n < numangle; ++n) {
        double th = n * params.angle_resolution_deg * std::numbers::pi / 180.0;
        cos_t[n] = std::cos(th) * irho;
        sin_t[n] = std::sin(th) * irho;
    }
    std::vector<int> accum(static_cast<std::size_t>(numangle) * numrho, 0);
    auto vote = [&](const Pixel &p, int delta) {
        for (int n = 0; n < numangle; ++n) {
            int r = static_cast<int>(std::lround(p.x * cos_t[n] + p.y * sin_t[n])) + rho_offset;
            accum[static_cast<std::size_t>(n) * numrho + r] += delta;
        }
    };

    std::vector<std::uint8_t> mask(edges.pixels.begin(), edges.pixels.end());
    std::vector<std::uint8_t> voted(mask.size(), 0);
    std::vector<Pixel> points;
    for (int y = 0; y < rows; ++y) {
        for (int x = 0; x < cols; ++x) {
            if (mask[static_cast<std::size_t>(y) * cols + x]) points.push_back({x, y});
        }
    }
    std::mt19937_64 rng(params.seed);
    std::shuffle(points.begin(), points.end(), rng);

    HoughWalker walker(mask, rows, cols, params.max_gap, params.band);
    const double vg_step = edges.vg.step();
    const double vds_step = edges.vds.step();

    for (const Pixel &p : points) {
        std::size_t pi = static_cast<std::size_t>(p.y) * cols + p.x;
        if (!mask[pi]) continue;

        int best_val = params.accumulator_threshold - 1;
        int best_n = -1;
        for (int n = 0; n < numangle; ++n) {
            int r = static_cast<int>(std::lround(p.x * cos_t[n] + p.y * sin_t[n])) + rho_offset;
            int &a = accum[static_cast<std::size_t>(n) * numrho + r];
            ++a;
            if (a > best_val) {
                best_val = a;
                best_n = n;
            }
        }
        voted[pi] = 1;
        if (best_n < 0) continue;

        // Walk along the accumulator direction, refit, and walk again along the fit.
        double th = best_n * params.angle_resolution_deg * std::numbers::pi / 180.0;
        auto first = walker.walk(p.x, p.y, -std::sin(th), std::cos(th));
        if (first.size() < 2) continue;
        LineFit fit = fit_line(first);
        double t0 = (p.x - fit.cx) * fit.dx + (p.y - fit.cy) * fit.dy;
        auto pts = walker.walk(fit.cx + t0 * fit.dx, fit.cy + t0 * fit.dy, fit.dx, fit.dy);
        if (pts.size() < 2) continue;
        fit = fit_line(pts);

        double tmin = 1e300, tmax = -1e300;
        for (const auto &q : pts) {
            double t = (q.x - fit.cx) * fit.dx + (q.y - fit.cy) * fit.dy;
            tmin = std::min(tmin, t);
            tmax = std::max(tmax, t);
        }
        double length = tmax - tmin;
        if (length < min_length) continue;

        for (const auto &q : pts) {
            std::size_t qi = static_cast<std::size_t>(q.y) * cols + q.x;
            if (!mask[qi]) continue;
            if (voted[qi]) {
                vote(q, -1);
                voted[qi] = 0;
            }
            mask[qi] = 0;
        }

        if (std::abs(fit.dx) < 1e-9) continue;  // vertical in pixel space: slope is not finite
        Segment s;
        double x0 = fit.cx + tmin * fit.dx, y0 = fit.cy + tmin * fit.dy;
        double x1 = fit.cx + tmax * fit.dx, y1 = fit.cy + tmax * fit.dy;
        if (x1 < x0) {
            std::swap(x0, x1);
            std::swap(y0, y1);
        }
        s.vg0 = edges.vg.min + x0 * vg_step;
        s.vds0 = edges.vds.min + y0 * vds_step;
        s.vg1 = edges.vg.min + x1 * vg_step;
        s.vds1 = edges.vds.min + y1 * vds_step;
        s.slope = (fit.dy * vds_step) / (fit.dx * vg_step);
        s.length = length;
        s.support = static_cast<int>(pts.size());
        if (std::isfinite(s.slope)) {
            segments.push_back(s);
        }
    }
    return segments;
}

// ---------------------------------------------------------------------------
// Subpixel refinement

namespace {

// Least-squares x = a + b * y.
std::pair<double, double> fit_x_of_y(const std::vector<std::pair<double, double>> &pts) {
    double n = static_cast<double>(pts.size());
    double sx = 0.0, sy = 0.0, syy = 0.0, sxy = 0.0;
    for (auto [x, y] : pts) {
        sx += x;
        sy += y;
        syy += y * y;
        sxy += x * y;
    }
    double den = n * syy - sy * sy;
    double b = (n * sxy - sx * sy) / den;
    return {(sx - b * sy) / n, b};
}

}  // namespace

std::vector<Segment> refine_segments(const ChargeStabilityMap &map, std::span<const Segment> segments,
                                     const RefineParams &params) {
    std::vector<Segment> out(segments.begin(), segments.end());
    const std::size_t rows = map.rows();
    const std::size_t cols = map.cols();
    if (rows < 3 || cols < 3 || segments.empty()) return out;

    auto smooth = gaussian_smooth(map.values(), rows, cols, params.gaussian_sigma);
    std::vector<double> gx(rows * cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 1; c + 1 < cols; ++c) {
            gx[r * cols + c] = 0.5 * (smooth[r * cols + c + 1] - smooth[r * cols + c - 1]);
        }
    }
    const Axis &vg = map.vg();
    const Axis &vds = map.vds();
    const double px_ratio = vds.step() / vg.step();  // pixel slope = slope / px_ratio
    const double exclusion = params.zero_bias_exclusion * 0.5 * vds.span();

    for (auto &seg : out) {
        if (!(std::abs(seg.slope) / px_ratio > 1.0)) continue;
        double y0 = vds.index_of(seg.vds0), y1 = vds.index_of(seg.vds1);
        double xa = vg.index_of(seg.vg0), xb = vg.index_of(seg.vg1);
        double dxdy = (xb - xa) / (y1 - y0);
        long rlo = std::max(0L, static_cast<long>(std::ceil(std::min(y0, y1))));
        long rhi = std::min(static_cast<long>(rows) - 1, static_cast<long>(std::floor(std::max(y0, y1))));

        // Edge polarity (sign of the horizontal gradient) flips across zero
        // bias for one line, so it is fixed separately on each side.
        auto predicted = [&](long r) { return xa + (static_cast<double>(r) - y0) * dxdy; };
        auto usable = [&](long r) { return std::abs(vds.at(static_cast<std::size_t>(r))) >= exclusion; };
        auto window = [&](long r) {
            long center = std::lround(predicted(r));
            return std::pair{std::max(1L, center - params.search),
                             std::min(static_cast<long>(cols) - 2, center + params.search)};
        };
        double side_sum[2] = {0.0, 0.0};
        for (long r = rlo; r <= rhi; ++r) {
            if (!usable(r)) continue;
            auto [clo, chi] = window(r);
            double strongest = 0.0;
            for (long c = clo; c <= chi; ++c) {
                if (std::abs(gx[r * cols + c]) > std::abs(strongest)) strongest = gx[r * cols + c];
            }
            side_sum[vds.at(static_cast<std::size_t>(r)) > 0.0] += strongest;
        }

        std::vector<std::pair<double, double>> pts;
        for (long r = rlo; r <= rhi; ++r) {
            if (!usable(r)) continue;
            const double sign = side_sum[vds.at(static_cast<std::size_t>(r)) > 0.0] >= 0.0 ? 1.0 : -1.0;
            auto [clo, chi] = window(r);
            long best = -1;
            double best_val = 0.0;
            for (long c = clo; c <= chi; ++c) {
                double v = sign * gx[r * cols + c];
                if (v > best_val) {
                    best_val = v;
                    best = c;
                }
            }
            if (best < 2 || best > static_cast<long>(cols) - 3) continue;
            // Skip rows where an opposite edge is close enough to pull the peak.
            bool crowded = false;
            for (long c = std::max(1L, best - params.isolation);
                 c <= std::min(static_cast<long>(cols) - 2, best + params.isolation); ++c) {
                if (-sign * gx[r * cols + c] > 0.25 * best_val) crowded = true;
            }
            if (crowded) continue;
            double a = sign * gx[r * cols + best - 1];
            double b = best_val;
            double c = sign * gx[r * cols + best + 1];
            double den = a - 2.0 * b + c;
            double off = den < 0.0 ? 0.5 * (a - c) / den : 0.0;
            pts.emplace_back(static_cast<double>(best) + std::clamp(off, -0.5, 0.5), static_cast<double>(r));
        }
        if (pts.size() < params.min_rows) continue;
        auto [a, b] = fit_x_of_y(pts);
        std::vector<std::pair<double, double>> kept;
        for (auto [x, y] : pts) {
            if (std::abs(x - (a + b * y)) <= 1.0) kept.emplace_back(x, y);
        }
        if (kept.size() < params.min_rows) continue;
        std::tie(a, b) = fit_x_of_y(kept);
        if (std::abs(b) < 1e-12) continue;

        double x0 = a + b * y0, x1 = a + b * y1;
        if (x1 < x0) {
            std::swap(x0, x1);
            std::swap(y0, y1);
        }
        seg.vg0 = vg.min + x0 * vg.step();
        seg.vg1 = vg.min + x1 * vg.step();
        seg.vds0 = vds.min + y0 * vds.step();
        seg.vds1 = vds.min + y1 * vds.step();
        seg.slope = px_ratio / b;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Peak finding

double peak_prominence(std::span<const double> trace, std::size_t index) {
    const double h = trace[index];
    double left_min = h;
    for (std::size_t k = index; k-- > 0;) {
        if (trace[k] > h) break;
        left_min = std::min(left_min, trace[k]);
    }
    double right_min = h;
    for (std::size_t k = index + 1; k < trace.size(); ++k) {
        if (trace[k] > h) break;
        right_min = std::min(right_min, trace[k]);
    }
    return h - std::max(left_min, right_min);
}

std::vector<std::size_t> find_peak_indices(std::span<const double> trace, double min_prominence) {
    std::vector<std::size_t> peaks;
    const std::size_t n = trace.size();
    std::size_t i = 1;
    while (i + 1 < n) {
        if (trace[i - 1] < trace[i]) {
            std::size_t j = i;
            while (j + 1 < n && trace[j + 1] == trace[i]) ++j;
            if (j + 1 < n && trace[j + 1] < trace[i]) {
                std::size_t mid = (i + j) / 2;
                if (peak_prominence(trace, mid) >= min_prominence) {
                    peaks.push_back(mid);
                }
            }
            i = j + 1;
        } else {
            ++i;
        }
    }
    return peaks;
}

std::vector<double> find_peaks(std::span<const double> trace, const Axis &vg, double min_prominence) {
    if (trace.size() != vg.count) {
        throw std::invalid_argument("find_peaks: trace length does not match the V_GS axis");
    }
    std::vector<double> out;
    for (std::size_t idx : find_peak_indices(trace, min_prominence)) {
        out.push_back(vg.at(idx));
    }
    return out;
}

}  // namespace qdfarm
