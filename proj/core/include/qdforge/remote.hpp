#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qdforge/decoder.hpp"
#include "qdforge/oracle.hpp"
#include "qdforge/refine.hpp"

namespace qdforge {

/// The sidecar could not be reached at all (connection refused, DNS, timeout).
class SidecarUnavailable : public Error {
public:
    using Error::Error;
};

/// The sidecar answered with an error status or a malformed body.
class SidecarError : public Error {
public:
    SidecarError(int status, const std::string& what) : Error(what), status_(status) {}
    int status() const noexcept { return status_; }

private:
    int status_;
};

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

struct SidecarHealth {
    std::string raw_json;
    std::size_t embedding_dim = 0;
};

/// HTTP+JSON client for the model sidecar. Every request carries a
/// client-generated request_id that the response must echo; images travel as
/// base64 PPM P6, vectors as JSON number arrays.
class SidecarClient {
public:
    SidecarClient(std::string base_url, double timeout_s = 30.0, std::string model = {});

    SidecarHealth health() const;
    std::vector<double> embed_image(const ImageBuffer& img) const;
    double score(std::string_view prompt, const ImageBuffer& img) const;
    Genome refine(const Genome& genome, std::string_view prompt, std::uint32_t steps) const;

    const std::string& base_url() const noexcept { return base_url_; }

private:
    std::string post(const std::string& path, const std::string& body) const;
    std::string next_request_id() const;

    std::string base_url_;
    double timeout_s_;
    std::string model_;
    mutable std::atomic<std::uint64_t> counter_{0};
};

class RemoteEmbeddingProvider final : public EmbeddingProvider {
public:
    RemoteEmbeddingProvider(std::shared_ptr<const SidecarClient> client, bool normalize,
                            std::size_t dimension = kEmbeddingDim);
    std::vector<double> embed(const ImageBuffer& img) const override;
    std::size_t dimension() const override { return dimension_; }

private:
    std::shared_ptr<const SidecarClient> client_;
    bool normalize_;
    std::size_t dimension_;
};

/// Local decode and HSV statistics; embedding and fitness come from the
/// sidecar. Populations are evaluated with at most `max_in_flight`
/// concurrent requests.
class RemoteEvaluator final : public Evaluator {
public:
    RemoteEvaluator(EngineConfig cfg, std::shared_ptr<const Codebook> book,
                    std::shared_ptr<const SidecarClient> client, std::string prompt_text,
                    std::uint32_t max_in_flight = 4, bool normalize = false);

    void evaluate(Individual& ind) const override;
    void evaluate_all(std::span<Individual> pop) const override;

    const SidecarClient& client() const noexcept { return *client_; }
    const std::string& prompt_text() const noexcept { return prompt_; }

private:
    EngineConfig cfg_;
    std::shared_ptr<const Codebook> book_;
    std::shared_ptr<const SidecarClient> client_;
    RemoteEmbeddingProvider provider_;
    std::string prompt_;
    std::uint32_t max_in_flight_;
};

/// One sidecar /refine call (steps = 1) per step. Not guaranteed monotone.
class RemoteRefiner final : public Refiner {
public:
    explicit RemoteRefiner(const RemoteEvaluator& eval) : eval_(&eval) {}
    Individual step(const Individual& ind, RngStream& rng) const override;

private:
    const RemoteEvaluator* eval_;
};

}  // namespace qdforge
