#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qdforge/rng.hpp"
#include "qdforge/types.hpp"

namespace qdforge {

struct Hsv {
    double h = 0, s = 0, v = 0;
};

/// Hexcone conversion. Achromatic pixels get h = 0, s = 0; h is in [0, 1).
Hsv rgb_to_hsv(Rgb p);
Rgb hsv_to_rgb(Hsv p);

/// Means and sample deviations (divisor N-1) of hue, saturation and
/// brightness. Hue uses the circular mean and the wrapped deviation
/// folded into [-0.5, 0.5]. A single-pixel image has zero deviations.
HsvSummary hsv_summary(const ImageBuffer& img);

/// Signed difference a - b wrapped into [-0.5, 0.5].
double wrap_hue_delta(double a, double b);

/// Mean of the squared differences m1..m6 of the two summaries, with the
/// hue-mean term taken as circular distance min(|d|, 1 - |d|).
double hsv_distance(const HsvSummary& a, const HsvSummary& b);

/// Euclidean distance. Throws Error on a dimension mismatch.
double embedding_distance(std::span<const double> u, std::span<const double> v);

inline constexpr std::size_t kDownsampleSide = 16;
inline constexpr std::size_t kEmbeddingDim = kDownsampleSide * kDownsampleSide * 3;

/// First pixel of cell `cell` along an axis of `extent` pixels (cell <= 16).
inline std::size_t cell_begin(std::size_t extent, std::size_t cell)
{
    return cell * extent / kDownsampleSide;
}

/// 16x16 box filter; output is (cell_y, cell_x, channel) with channel fastest.
std::vector<double> downsample16(const ImageBuffer& img);

/// Desk-scale stand-in for a truncated vision transformer: box-filter to
/// 16x16x3 and apply a fixed random orthonormal rotation.
class SyntheticEmbedder {
public:
    /// The rotation is drawn once from `rng` (Gaussian matrix, QR, sign fixed
    /// by diag(R) so the result is Haar distributed).
    explicit SyntheticEmbedder(RngStream& rng);

    std::vector<double> embed(const ImageBuffer& img) const;
    /// Rotation applied to an already downsampled vector.
    std::vector<double> rotate(std::span<const double> x) const;
    /// Transpose rotation, used to pull a target direction back into
    /// downsampled pixel space.
    std::vector<double> rotate_transpose(std::span<const double> y) const;

    std::span<const double> matrix() const noexcept { return rotation_; }

private:
    std::vector<double> rotation_;  // row-major kEmbeddingDim^2
};

/// Fixed-order 4-way accumulated dot product (reproducible across builds).
double dot(std::span<const double> a, std::span<const double> b);

/// Behavioural distance between two evaluated individuals.
double individual_distance(const Individual& a, const Individual& b, DistanceMetricKind kind);

/// Mean over individuals of the mean distance to the k nearest other members.
/// Falls back to all other members (with a warning) when |pop| <= k.
double population_diversity(std::span<const Individual> pop, DistanceMetricKind kind, std::size_t k = 15);

}  // namespace qdforge
