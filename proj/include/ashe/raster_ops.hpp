#pragma once

#include <vector>

#include "ashe/geometry.hpp"
#include "ashe/image.hpp"

namespace ashe {

// Straight edge segment in sub-pixel coordinates.
struct LineSegment {
    Vec2 p0;
    Vec2 p1;
    double length() const { return std::hypot(p1.x - p0.x, p1.y - p0.y); }
    // Orientation of the segment direction folded into [0, 180).
    double angle_deg() const;
};

struct HoughParams {
    double rho_res = 1.0;       // px
    double theta_res_deg = 1.0;
    int votes_min = 50;
    double min_seg_len = 40.0;  // px
    double max_gap = 5.0;       // px
};

// ITU-R BT.601 luma, rounded to nearest.
GrayImage to_grayscale(const Image& img);

// Separable Gaussian blur, clamp-to-edge borders. Kernel weights are
// normalized in 16.16 fixed point with the residual folded into the center
// tap, so a constant image is reproduced exactly.
GrayImage gaussian_blur(const GrayImage& img, double sigma, int ksize);
Image gaussian_blur(const Image& img, double sigma, int ksize);

// Canny: Sobel 3x3, L2 gradient magnitude, non-maximum suppression with the
// gradient direction quantized to 4 bins, then double-threshold hysteresis
// (weak pixels survive when 8-connected, transitively, to a strong pixel).
// Output values are 0/255.
Bitmap canny_edges(const GrayImage& img, double low, double high);

// Pixel set iff B >= min_blue and B - max(R, G) >= dominance.
Bitmap blue_mask(const Image& img, int min_blue = 120, int dominance = 40);

// Removes 8-connected components smaller than min_len pixels.
Bitmap prune_short_edges(const Bitmap& edges, int min_len);

// Accumulator-based segment extraction: peaks with votes_min support are
// traced along their supporting edge pixels, bridging gaps up to max_gap and
// keeping runs at least min_seg_len long. Each edge pixel supports at most
// one emitted segment.
std::vector<LineSegment> hough_segments(const Bitmap& edges,
                                        const HoughParams& params = {});

// 0/255 grayscale view of a binary map, as canny input.
GrayImage bitmap_to_gray(const Bitmap& bm);

}  // namespace ashe
