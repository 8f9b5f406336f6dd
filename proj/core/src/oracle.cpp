#include "qdforge/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace qdforge {

double cosine_similarity(std::span<const double> u, std::span<const double> v)
{
    if (u.size() != v.size())
        throw Error("cosine_similarity: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                    std::to_string(v.size()) + ")");
    const double nu = std::sqrt(dot(u, u));
    const double nv = std::sqrt(dot(v, v));
    if (nu == 0.0 || nv == 0.0)
        throw Error("cosine_similarity: zero-magnitude vector");
    return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

PromptVector embed_prompt_synthetic(std::string_view prompt)
{
    if (prompt.empty())
        throw Error("embed_prompt_synthetic: empty prompt");
    RngStream rng = derive_stream(fnv1a64(prompt), "prompt");
    std::vector<double> t(kEmbeddingDim);
    double norm2 = 0;
    do {
        for (auto& x : t)
            x = rng.normal();
        norm2 = dot(t, t);
    } while (norm2 == 0.0);
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& x : t)
        x *= inv;
    return {std::string(prompt), std::move(t)};
}

PromptRef resolve_prompt(std::string_view id_or_text)
{
    if (id_or_text.empty())
        throw Error("prompt must be nonempty");
    for (const auto& p : kPromptPresets) {
        if (p.id == id_or_text)
            return {std::string(p.id), std::string(p.text)};
    }
    for (const auto& p : kPromptPresets) {
        if (p.text == id_or_text)
            return {std::string(p.id), std::string(p.text)};
    }
    char id[16];
    std::snprintf(id, sizeof id, "P%08x", static_cast<unsigned>(fnv1a64(id_or_text) & 0xffffffffu));
    return {id, std::string(id_or_text)};
}

FitnessScore score(const ImageBuffer& img, const PromptVector& prompt, const EmbeddingProvider& provider)
{
    const auto e = provider.embed(img);
    return {cosine_similarity(e, prompt.target)};
}

void Evaluator::evaluate_all(std::span<Individual> pop) const
{
    for (auto& ind : pop)
        evaluate(ind);
}

SyntheticEvaluator::SyntheticEvaluator(EngineConfig cfg, std::shared_ptr<const Codebook> book,
                                       std::shared_ptr<const SyntheticEmbedder> embedder, PromptVector prompt)
    : cfg_(cfg), book_(std::move(book)), embedder_(std::move(embedder)), prompt_(std::move(prompt))
{
    if (prompt_.target.size() != kEmbeddingDim)
        throw Error("SyntheticEvaluator: prompt target must be 768-dimensional");
    const double norm = std::sqrt(dot(prompt_.target, prompt_.target));
    if (norm == 0.0)
        throw Error("SyntheticEvaluator: prompt target has zero magnitude");
    pixel_target_ = embedder_->rotate_transpose(prompt_.target);
    for (auto& x : pixel_target_)
        x /= norm;
}

void SyntheticEvaluator::evaluate(Individual& ind) const
{
    ImageBuffer img = decode(ind.genome, *book_, cfg_);
    ind.hsv = hsv_summary(img);
    ind.embedding = embedder_->embed(img);
    ind.fitness = cosine_similarity(*ind.embedding, prompt_.target);
    ind.phenotype = std::move(img);
    count_evaluation();
}

}  // namespace qdforge
