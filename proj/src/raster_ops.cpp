#include "ashe/raster_ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace ashe {

double LineSegment::angle_deg() const {
    double a = rad2deg(std::atan2(p1.y - p0.y, p1.x - p0.x));
    if (a < 0.0) a += 180.0;
    if (a >= 180.0) a -= 180.0;
    return a;
}

GrayImage to_grayscale(const Image& img) {
    require(img.w > 0 && img.h > 0, "to_grayscale: empty image");
    GrayImage out(img.w, img.h);
    const uint8_t* p = img.px.data();
    for (size_t i = 0, n = static_cast<size_t>(img.w) * img.h; i < n; ++i, p += 3) {
        const uint32_t y = 299u * p[0] + 587u * p[1] + 114u * p[2];
        out.px[i] = static_cast<uint8_t>((y + 500u) / 1000u);
    }
    return out;
}

namespace {

std::vector<uint32_t> gauss_kernel_fixed(double sigma, int ksize) {
    require(ksize >= 1 && (ksize % 2) == 1, "gaussian_blur: ksize must be odd");
    require(sigma > 0.0, "gaussian_blur: sigma must be positive");
    const int r = ksize / 2;
    std::vector<double> w(ksize);
    double sum = 0.0;
    for (int i = 0; i < ksize; ++i) {
        const double d = i - r;
        w[i] = std::exp(-(d * d) / (2.0 * sigma * sigma));
        sum += w[i];
    }
    std::vector<uint32_t> fixed(ksize);
    int64_t total = 0;
    for (int i = 0; i < ksize; ++i) {
        fixed[i] = static_cast<uint32_t>(std::llround(w[i] / sum * 65536.0));
        total += fixed[i];
    }
    // Fold the rounding residual into the center tap: the kernel sums to
    // exactly 2^16, so constant regions pass through unchanged.
    fixed[r] = static_cast<uint32_t>(fixed[r] + (65536 - total));
    return fixed;
}

// Plane blur in 16.16 fixed point; the horizontal pass keeps full fractional
// precision so the result rounds once, matching a direct 2D convolution
// within one gray level.
void blur_plane(const uint8_t* src, uint8_t* dst, int w, int h,
                const std::vector<uint32_t>& k, std::vector<uint32_t>& tmp) {
    const int ks = static_cast<int>(k.size());
    const int r = ks / 2;
    tmp.resize(static_cast<size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        const uint8_t* row = src + static_cast<size_t>(y) * w;
        uint32_t* trow = tmp.data() + static_cast<size_t>(y) * w;
        int x = 0;
        for (; x < std::min(r, w); ++x) {
            uint32_t acc = 0;
            for (int i = 0; i < ks; ++i)
                acc += k[i] * row[std::clamp(x + i - r, 0, w - 1)];
            trow[x] = acc;
        }
        for (; x < w - r; ++x) {
            uint32_t acc = 0;
            const uint8_t* p = row + x - r;
            for (int i = 0; i < ks; ++i) acc += k[i] * p[i];
            trow[x] = acc;
        }
        for (; x < w; ++x) {
            uint32_t acc = 0;
            for (int i = 0; i < ks; ++i)
                acc += k[i] * row[std::clamp(x + i - r, 0, w - 1)];
            trow[x] = acc;
        }
    }
    for (int y = 0; y < h; ++y) {
        uint8_t* drow = dst + static_cast<size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            uint64_t acc = 0;
            for (int i = 0; i < ks; ++i) {
                const int yy = std::clamp(y + i - r, 0, h - 1);
                acc += static_cast<uint64_t>(k[i]) * tmp[static_cast<size_t>(yy) * w + x];
            }
            const uint64_t v = (acc + (1ull << 31)) >> 32;
            drow[x] = static_cast<uint8_t>(std::min<uint64_t>(v, 255));
        }
    }
}

}  // namespace

GrayImage gaussian_blur(const GrayImage& img, double sigma, int ksize) {
    const auto k = gauss_kernel_fixed(sigma, ksize);
    GrayImage out(img.w, img.h);
    std::vector<uint32_t> tmp;
    blur_plane(img.px.data(), out.px.data(), img.w, img.h, k, tmp);
    return out;
}

Image gaussian_blur(const Image& img, double sigma, int ksize) {
    const auto k = gauss_kernel_fixed(sigma, ksize);
    Image out(img.w, img.h);
    const size_t n = static_cast<size_t>(img.w) * img.h;
    std::vector<uint8_t> plane(n), blurred(n);
    std::vector<uint32_t> tmp;
    for (int c = 0; c < 3; ++c) {
        for (size_t i = 0; i < n; ++i) plane[i] = img.px[i * 3 + c];
        blur_plane(plane.data(), blurred.data(), img.w, img.h, k, tmp);
        for (size_t i = 0; i < n; ++i) out.px[i * 3 + c] = blurred[i];
    }
    return out;
}

Bitmap canny_edges(const GrayImage& img, double low, double high) {
    require(low >= 0.0 && low < high, "canny_edges: need 0 <= low < high");
    const int w = img.w, h = img.h;
    Bitmap out(w, h, 0);
    if (w < 3 || h < 3) return out;

    std::vector<float> mag(static_cast<size_t>(w) * h, 0.0f);
    std::vector<uint8_t> bin(static_cast<size_t>(w) * h, 0);
    const uint8_t* g = img.px.data();
    for (int y = 1; y < h - 1; ++y) {
        const uint8_t* r0 = g + static_cast<size_t>(y - 1) * w;
        const uint8_t* r1 = g + static_cast<size_t>(y) * w;
        const uint8_t* r2 = g + static_cast<size_t>(y + 1) * w;
        for (int x = 1; x < w - 1; ++x) {
            const int gx = -r0[x - 1] + r0[x + 1] - 2 * r1[x - 1] + 2 * r1[x + 1] -
                           r2[x - 1] + r2[x + 1];
            const int gy = r2[x - 1] + 2 * r2[x] + r2[x + 1] - r0[x - 1] -
                           2 * r0[x] - r0[x + 1];
            const float m = std::sqrt(static_cast<float>(gx) * gx +
                                      static_cast<float>(gy) * gy);
            const size_t idx = static_cast<size_t>(y) * w + x;
            mag[idx] = m;
            // Direction quantized to 4 bins without atan2. tan(22.5 deg) and
            // tan(67.5 deg) bound the diagonal sectors.
            const float ax = std::abs(static_cast<float>(gx));
            const float ay = std::abs(static_cast<float>(gy));
            uint8_t b;
            int sg;
            if (ay <= 0.41421356f * ax) {        // edge runs vertically
                b = 0;
                sg = gx >= 0 ? 1 : -1;
            } else if (ay >= 2.41421356f * ax) {  // edge runs horizontally
                b = 2;
                sg = gy >= 0 ? 1 : -1;
            } else if (static_cast<int64_t>(gx) * gy >= 0) {
                b = 1;
                sg = gx >= 0 ? 1 : -1;
            } else {
                b = 3;
                sg = gy >= 0 ? 1 : -1;
            }
            bin[idx] = static_cast<uint8_t>(b | (sg > 0 ? 0 : 4));
        }
    }

    // Non-maximum suppression. The forward neighbor (the brighter side of the
    // edge) is compared strictly so a two-pixel-wide plateau keeps exactly one
    // ridge line, on the same side of the step for opposing edges.
    static const int dx4[4] = {1, 1, 0, -1};
    static const int dy4[4] = {0, 1, 1, 1};
    std::vector<float> nms(static_cast<size_t>(w) * h, 0.0f);
    for (int y = 1; y < h - 1; ++y) {
        for (int x = 1; x < w - 1; ++x) {
            const size_t idx = static_cast<size_t>(y) * w + x;
            const float m = mag[idx];
            if (m <= 0.0f) continue;
            const int b = bin[idx] & 3;
            const int sg = (bin[idx] & 4) ? -1 : 1;
            const int fx = sg * dx4[b], fy = sg * dy4[b];
            const float mp = mag[static_cast<size_t>(y + fy) * w + (x + fx)];
            const float mm = mag[static_cast<size_t>(y - fy) * w + (x - fx)];
            if (m > mp && m >= mm) nms[idx] = m;
        }
    }

    // Hysteresis: seed from strong pixels, grow through weak ones.
    std::vector<size_t> stack;
    stack.reserve(1024);
    for (int y = 1; y < h - 1; ++y) {
        for (int x = 1; x < w - 1; ++x) {
            const size_t idx = static_cast<size_t>(y) * w + x;
            if (nms[idx] >= high && !out.px[idx]) {
                out.px[idx] = 255;
                stack.push_back(idx);
                while (!stack.empty()) {
                    const size_t cur = stack.back();
                    stack.pop_back();
                    const int cy = static_cast<int>(cur / w);
                    const int cx = static_cast<int>(cur % w);
                    for (int ny = cy - 1; ny <= cy + 1; ++ny) {
                        for (int nx = cx - 1; nx <= cx + 1; ++nx) {
                            if (ny < 1 || ny >= h - 1 || nx < 1 || nx >= w - 1)
                                continue;
                            const size_t nidx = static_cast<size_t>(ny) * w + nx;
                            if (!out.px[nidx] && nms[nidx] >= low &&
                                nms[nidx] > 0.0f) {
                                out.px[nidx] = 255;
                                stack.push_back(nidx);
                            }
                        }
                    }
                }
            }
        }
    }
    return out;
}

Bitmap blue_mask(const Image& img, int min_blue, int dominance) {
    Bitmap out(img.w, img.h, 0);
    const uint8_t* p = img.px.data();
    for (size_t i = 0, n = static_cast<size_t>(img.w) * img.h; i < n; ++i, p += 3) {
        const int r = p[0], g = p[1], b = p[2];
        if (b >= min_blue && b - std::max(r, g) >= dominance) out.px[i] = 255;
    }
    return out;
}

Bitmap prune_short_edges(const Bitmap& edges, int min_len) {
    require(min_len >= 1, "prune_short_edges: min_len must be >= 1");
    const int w = edges.w, h = edges.h;
    Bitmap out = edges;
    std::vector<uint8_t> seen(static_cast<size_t>(w) * h, 0);
    std::vector<size_t> stack, comp;
    for (size_t start = 0, n = static_cast<size_t>(w) * h; start < n; ++start) {
        if (!out.px[start] || seen[start]) continue;
        comp.clear();
        stack.assign(1, start);
        seen[start] = 1;
        while (!stack.empty()) {
            const size_t cur = stack.back();
            stack.pop_back();
            comp.push_back(cur);
            const int cy = static_cast<int>(cur / w);
            const int cx = static_cast<int>(cur % w);
            for (int ny = std::max(0, cy - 1); ny <= std::min(h - 1, cy + 1); ++ny) {
                for (int nx = std::max(0, cx - 1); nx <= std::min(w - 1, cx + 1);
                     ++nx) {
                    const size_t nidx = static_cast<size_t>(ny) * w + nx;
                    if (out.px[nidx] && !seen[nidx]) {
                        seen[nidx] = 1;
                        stack.push_back(nidx);
                    }
                }
            }
        }
        if (comp.size() < static_cast<size_t>(min_len))
            for (size_t idx : comp) out.px[idx] = 0;
    }
    return out;
}

GrayImage bitmap_to_gray(const Bitmap& bm) {
    GrayImage g(bm.w, bm.h);
    g.px = bm.px;
    return g;
}

namespace {
struct HoughCand {
    int votes;
    int theta;
    int rho;
};
}  // namespace

std::vector<LineSegment> hough_segments(const Bitmap& edges,
                                        const HoughParams& params) {
    require(params.rho_res > 0.0 && params.theta_res_deg > 0.0,
            "hough_segments: resolutions must be positive");
    std::vector<LineSegment> result;
    std::vector<Vec2> pts;
    for (int y = 0; y < edges.h; ++y)
        for (int x = 0; x < edges.w; ++x)
            if (edges.at(x, y)) pts.push_back({static_cast<double>(x),
                                               static_cast<double>(y)});
    if (pts.empty()) return result;

    const int ntheta = std::max(1, static_cast<int>(std::lround(180.0 / params.theta_res_deg)));
    const double diag = std::hypot(edges.w, edges.h);
    const int nrho = static_cast<int>(2.0 * diag / params.rho_res) + 3;
    std::vector<double> cs(ntheta), sn(ntheta);
    for (int t = 0; t < ntheta; ++t) {
        const double a = deg2rad(t * params.theta_res_deg);
        cs[t] = std::cos(a);
        sn[t] = std::sin(a);
    }

    std::vector<int> acc(static_cast<size_t>(ntheta) * nrho, 0);
    auto rho_index = [&](double rho) {
        return static_cast<int>(std::floor((rho + diag) / params.rho_res + 0.5));
    };
    for (const Vec2& p : pts) {
        for (int t = 0; t < ntheta; ++t) {
            const int ri = rho_index(p.x * cs[t] + p.y * sn[t]);
            ++acc[static_cast<size_t>(t) * nrho + ri];
        }
    }

    // Local maxima (8-neighborhood in accumulator space) above the vote floor.
    std::vector<HoughCand> cands;
    for (int t = 0; t < ntheta; ++t) {
        for (int r = 0; r < nrho; ++r) {
            const int v = acc[static_cast<size_t>(t) * nrho + r];
            if (v < params.votes_min) continue;
            bool ismax = true;
            for (int dt = -1; dt <= 1 && ismax; ++dt) {
                for (int dr = -1; dr <= 1; ++dr) {
                    if (dt == 0 && dr == 0) continue;
                    const int tt = t + dt, rr = r + dr;
                    if (tt < 0 || tt >= ntheta || rr < 0 || rr >= nrho) continue;
                    if (acc[static_cast<size_t>(tt) * nrho + rr] > v) {
                        ismax = false;
                        break;
                    }
                }
            }
            if (ismax) cands.push_back({v, t, r});
        }
    }
    std::sort(cands.begin(), cands.end(), [](const HoughCand& a, const HoughCand& b) {
        if (a.votes != b.votes) return a.votes > b.votes;
        if (a.theta != b.theta) return a.theta < b.theta;
        return a.rho < b.rho;
    });

    const double corridor = 1.5 * params.rho_res;
    std::vector<uint8_t> consumed(pts.size(), 0);
    std::vector<std::pair<double, size_t>> along;  // (projection, point index)
    for (const HoughCand& c : cands) {
        const double rho_c = c.rho * params.rho_res - diag;
        const Vec2 n{cs[c.theta], sn[c.theta]};
        const Vec2 d{-sn[c.theta], cs[c.theta]};
        along.clear();
        for (size_t i = 0; i < pts.size(); ++i) {
            if (consumed[i]) continue;
            if (std::abs(dot(pts[i], n) - rho_c) <= corridor)
                along.push_back({dot(pts[i], d), i});
        }
        if (along.empty()) continue;
        std::sort(along.begin(), along.end());

        size_t run_begin = 0;
        auto flush = [&](size_t run_end) {  // [run_begin, run_end)
            if (run_end <= run_begin) return;
            const double extent = along[run_end - 1].first - along[run_begin].first;
            if (extent >= params.min_seg_len) {
                const Vec2 a = pts[along[run_begin].second];
                const Vec2 b = pts[along[run_end - 1].second];
                if (a.x != b.x || a.y != b.y) {
                    result.push_back({a, b});
                    for (size_t j = run_begin; j < run_end; ++j)
                        consumed[along[j].second] = 1;
                }
            }
            run_begin = run_end;
        };
        for (size_t i = run_begin + 1; i < along.size(); ++i)
            if (along[i].first - along[i - 1].first > params.max_gap) flush(i);
        flush(along.size());
    }
    return result;
}

}  // namespace ashe
