#include "qdforge/imagemetrics.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "qdforge/log.hpp"

namespace qdforge {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double sq(double x) { return x * x; }

}  // namespace

Hsv rgb_to_hsv(Rgb p)
{
    const double mx = std::max({p.r, p.g, p.b});
    const double mn = std::min({p.r, p.g, p.b});
    const double delta = mx - mn;
    Hsv out{0.0, 0.0, mx};
    if (delta <= 0.0)
        return out;
    out.s = mx > 0.0 ? delta / mx : 0.0;
    double h;
    if (mx == p.r)
        h = (p.g - p.b) / delta;
    else if (mx == p.g)
        h = 2.0 + (p.b - p.r) / delta;
    else
        h = 4.0 + (p.r - p.g) / delta;
    h /= 6.0;
    if (h < 0.0)
        h += 1.0;
    if (h >= 1.0)
        h -= 1.0;
    out.h = h;
    return out;
}

Rgb hsv_to_rgb(Hsv p)
{
    const double h6 = (p.h - std::floor(p.h)) * 6.0;
    const int sector = std::min(static_cast<int>(h6), 5);
    const double f = h6 - sector;
    const double v = p.v;
    const double a = v * (1.0 - p.s);
    const double b = v * (1.0 - p.s * f);
    const double c = v * (1.0 - p.s * (1.0 - f));
    switch (sector) {
    case 0: return {v, c, a};
    case 1: return {b, v, a};
    case 2: return {a, v, c};
    case 3: return {a, b, v};
    case 4: return {c, a, v};
    default: return {v, a, b};
    }
}

double wrap_hue_delta(double a, double b)
{
    double d = a - b;
    d -= std::round(d);
    return d;
}

HsvSummary hsv_summary(const ImageBuffer& img)
{
    const std::size_t n = img.pixel_count();
    if (n == 0)
        throw Error("hsv_summary: empty image");

    std::vector<Hsv> hsv(n);
    double sum_sin = 0, sum_cos = 0, sum_s = 0, sum_b = 0;
    const auto pixels = img.pixels();
    for (std::size_t i = 0; i < n; ++i) {
        hsv[i] = rgb_to_hsv(pixels[i]);
        sum_sin += std::sin(kTwoPi * hsv[i].h);
        sum_cos += std::cos(kTwoPi * hsv[i].h);
        sum_s += hsv[i].s;
        sum_b += hsv[i].v;
    }

    HsvSummary out;
    out.n_pixels = n;
    double mean_h = std::atan2(sum_sin, sum_cos) / kTwoPi;
    if (mean_h < 0.0)
        mean_h += 1.0;
    if (mean_h >= 1.0)
        mean_h = 0.0;
    out.mean_h = mean_h;
    out.mean_s = sum_s / static_cast<double>(n);
    out.mean_b = sum_b / static_cast<double>(n);
    if (n == 1)
        return out;

    double ss_h = 0, ss_s = 0, ss_b = 0;
    for (const Hsv& p : hsv) {
        ss_h += sq(wrap_hue_delta(p.h, out.mean_h));
        ss_s += sq(p.s - out.mean_s);
        ss_b += sq(p.v - out.mean_b);
    }
    const double denom = static_cast<double>(n - 1);
    out.std_h = std::sqrt(ss_h / denom);
    out.std_s = std::sqrt(ss_s / denom);
    out.std_b = std::sqrt(ss_b / denom);
    return out;
}

double hsv_distance(const HsvSummary& a, const HsvSummary& b)
{
    const double m1 = std::abs(a.mean_b - b.mean_b);
    const double m2 = std::abs(a.std_b - b.std_b);
    const double m3 = std::abs(a.mean_s - b.mean_s);
    const double m4 = std::abs(a.std_s - b.std_s);
    const double dh = std::abs(a.mean_h - b.mean_h);
    const double m5 = std::min(dh, 1.0 - dh);
    const double m6 = std::abs(a.std_h - b.std_h);
    return (sq(m1) + sq(m2) + sq(m3) + sq(m4) + sq(m5) + sq(m6)) / 6.0;
}

double embedding_distance(std::span<const double> u, std::span<const double> v)
{
    if (u.size() != v.size())
        throw Error("embedding_distance: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                    std::to_string(v.size()) + ")");
    double acc = 0;
    for (std::size_t i = 0; i < u.size(); ++i)
        acc += sq(u[i] - v[i]);
    return std::sqrt(acc);
}

double dot(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size())
        throw Error("dot: dimension mismatch");
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    std::size_t i = 0;
    for (; i + 4 <= a.size(); i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < a.size(); ++i)
        s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

std::vector<double> downsample16(const ImageBuffer& img)
{
    const std::size_t w = img.width();
    const std::size_t h = img.height();
    if (w < kDownsampleSide || h < kDownsampleSide)
        throw Error("downsample16: image must be at least 16x16");
    std::vector<double> out(kEmbeddingDim);
    for (std::size_t cy = 0; cy < kDownsampleSide; ++cy) {
        const std::size_t y0 = cell_begin(h, cy), y1 = cell_begin(h, cy + 1);
        for (std::size_t cx = 0; cx < kDownsampleSide; ++cx) {
            const std::size_t x0 = cell_begin(w, cx), x1 = cell_begin(w, cx + 1);
            double r = 0, g = 0, b = 0;
            for (std::size_t y = y0; y < y1; ++y) {
                for (std::size_t x = x0; x < x1; ++x) {
                    const Rgb p = img.at(x, y);
                    r += p.r;
                    g += p.g;
                    b += p.b;
                }
            }
            const double count = static_cast<double>((y1 - y0) * (x1 - x0));
            const std::size_t k = (cy * kDownsampleSide + cx) * 3;
            out[k] = r / count;
            out[k + 1] = g / count;
            out[k + 2] = b / count;
        }
    }
    return out;
}

SyntheticEmbedder::SyntheticEmbedder(RngStream& rng) : rotation_(kEmbeddingDim * kEmbeddingDim)
{
    constexpr auto n = static_cast<Eigen::Index>(kEmbeddingDim);
    Eigen::MatrixXd gauss(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c)
            gauss(r, c) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd& packed = qr.matrixQR();
    for (Eigen::Index c = 0; c < n; ++c) {
        if (packed(c, c) < 0)
            q.col(c) = -q.col(c);
    }
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c)
            rotation_[static_cast<std::size_t>(r * n + c)] = q(r, c);
}

std::vector<double> SyntheticEmbedder::rotate(std::span<const double> x) const
{
    if (x.size() != kEmbeddingDim)
        throw Error("SyntheticEmbedder: expected a 768-dimensional input");
    std::vector<double> y(kEmbeddingDim);
    const std::span<const double> m(rotation_);
    for (std::size_t r = 0; r < kEmbeddingDim; ++r)
        y[r] = dot(m.subspan(r * kEmbeddingDim, kEmbeddingDim), x);
    return y;
}

std::vector<double> SyntheticEmbedder::rotate_transpose(std::span<const double> y) const
{
    if (y.size() != kEmbeddingDim)
        throw Error("SyntheticEmbedder: expected a 768-dimensional input");
    std::vector<double> x(kEmbeddingDim, 0.0);
    for (std::size_t r = 0; r < kEmbeddingDim; ++r) {
        const double yr = y[r];
        const double* row = rotation_.data() + r * kEmbeddingDim;
        for (std::size_t c = 0; c < kEmbeddingDim; ++c)
            x[c] += row[c] * yr;
    }
    return x;
}

std::vector<double> SyntheticEmbedder::embed(const ImageBuffer& img) const
{
    return rotate(downsample16(img));
}

double individual_distance(const Individual& a, const Individual& b, DistanceMetricKind kind)
{
    switch (kind) {
    case DistanceMetricKind::Hsv:
        if (!a.hsv || !b.hsv)
            throw Error("individual_distance: HSV summary cache missing");
        return hsv_distance(*a.hsv, *b.hsv);
    case DistanceMetricKind::Embedding:
        if (!a.embedding || !b.embedding)
            throw Error("individual_distance: embedding cache missing");
        return embedding_distance(*a.embedding, *b.embedding);
    }
    throw Error("individual_distance: unknown metric");
}

double population_diversity(std::span<const Individual> pop, DistanceMetricKind kind, std::size_t k)
{
    const std::size_t n = pop.size();
    if (n < 2)
        throw Error("population_diversity: need at least two individuals");
    if (k == 0)
        throw Error("population_diversity: k must be positive");
    if (n <= k) {
        warn("population_diversity: population of " + std::to_string(n) + " is not larger than k=" +
             std::to_string(k) + "; using all other members");
        k = n - 1;
    }

    std::vector<double> dist(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            dist[i * n + j] = dist[j * n + i] = individual_distance(pop[i], pop[j], kind);

    double total = 0;
    std::vector<double> row;
    row.reserve(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        row.clear();
        for (std::size_t j = 0; j < n; ++j)
            if (j != i)
                row.push_back(dist[i * n + j]);
        std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k), row.end());
        double s = 0;
        for (std::size_t j = 0; j < k; ++j)
            s += row[j];
        total += s / static_cast<double>(k);
    }
    return total / static_cast<double>(n);
}

}  // namespace qdforge
