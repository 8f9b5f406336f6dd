#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qdforge/decoder.hpp"
#include "qdforge/imagemetrics.hpp"
#include "qdforge/types.hpp"

namespace qdforge {

struct PromptVector {
    std::string prompt_text;
    std::vector<double> target;
};

struct FitnessScore {
    double value = 0;
};

/// u.v / (|u||v|), clamped to [-1, 1]. Throws Error on a zero vector or a
/// dimension mismatch.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

/// Unit 768-vector drawn from a stream seeded by FNV-1a of the prompt bytes.
PromptVector embed_prompt_synthetic(std::string_view prompt);

struct PromptPreset {
    std::string_view id;
    std::string_view text;
};

inline constexpr std::array<PromptPreset, 5> kPromptPresets{{
    {"SP1", "a lonely house in the woods"},
    {"SP2", "a pyramid made of ice"},
    {"SP3", "artificial intelligence"},
    {"SP4", "cosmic love and attention"},
    {"SP5", "fire in the sky"},
}};

/// Resolved prompt: a preset id, or free text with a derived id "P<hex8>".
struct PromptRef {
    std::string id;
    std::string text;
};

PromptRef resolve_prompt(std::string_view id_or_text);

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::vector<double> embed(const ImageBuffer& img) const = 0;
    virtual std::size_t dimension() const = 0;
};

class SyntheticEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit SyntheticEmbeddingProvider(std::shared_ptr<const SyntheticEmbedder> embedder)
        : embedder_(std::move(embedder))
    {
    }
    std::vector<double> embed(const ImageBuffer& img) const override { return embedder_->embed(img); }
    std::size_t dimension() const override { return kEmbeddingDim; }

private:
    std::shared_ptr<const SyntheticEmbedder> embedder_;
};

FitnessScore score(const ImageBuffer& img, const PromptVector& prompt, const EmbeddingProvider& provider);

/// Fills every cache of an individual from its genome.
class Evaluator {
public:
    virtual ~Evaluator() = default;

    virtual void evaluate(Individual& ind) const = 0;
    virtual void evaluate_all(std::span<Individual> pop) const;

    /// Full evaluations performed so far (decode + embed + score).
    std::uint64_t evaluations() const noexcept { return evaluations_.load(); }

protected:
    void count_evaluation() const noexcept { ++evaluations_; }

private:
    mutable std::atomic<std::uint64_t> evaluations_{0};
};

/// Deterministic, offline backend: synthetic codebook, synthetic embedding,
/// hash-seeded prompt direction.
class SyntheticEvaluator final : public Evaluator {
public:
    SyntheticEvaluator(EngineConfig cfg, std::shared_ptr<const Codebook> book,
                       std::shared_ptr<const SyntheticEmbedder> embedder, PromptVector prompt);

    void evaluate(Individual& ind) const override;

    const EngineConfig& config() const noexcept { return cfg_; }
    const Codebook& codebook() const noexcept { return *book_; }
    const SyntheticEmbedder& embedder() const noexcept { return *embedder_; }
    const PromptVector& prompt() const noexcept { return prompt_; }

    /// R^T t / |t|: the prompt direction expressed in downsampled pixel
    /// space. score = d . w / |d| for a downsampled image d.
    std::span<const double> pixel_space_target() const noexcept { return pixel_target_; }

private:
    EngineConfig cfg_;
    std::shared_ptr<const Codebook> book_;
    std::shared_ptr<const SyntheticEmbedder> embedder_;
    PromptVector prompt_;
    std::vector<double> pixel_target_;
};

}  // namespace qdforge
