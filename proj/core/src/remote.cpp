#include "qdforge/remote.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>

#include "httplib.h"
#include "json.hpp"

namespace qdforge {

using nlohmann::json;

namespace {

constexpr std::string_view kAlphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

json parse_body(const std::string& body, const std::string& endpoint)
{
    try {
        return json::parse(body);
    } catch (const json::parse_error&) {
        throw SidecarError(200, endpoint + ": response is not valid JSON");
    }
}

void check_request_id(const json& response, const std::string& expected, const std::string& endpoint)
{
    if (!response.contains("request_id") || response["request_id"] != expected)
        throw SidecarError(200, endpoint + ": response does not echo request_id " + expected);
}

std::vector<double> finite_vector(const json& value, const std::string& endpoint)
{
    if (!value.is_array())
        throw SidecarError(200, endpoint + ": expected a numeric array");
    std::vector<double> out;
    out.reserve(value.size());
    for (const auto& x : value) {
        if (!x.is_number())
            throw SidecarError(200, endpoint + ": non-numeric vector element");
        const double v = x.get<double>();
        if (!std::isfinite(v))
            throw SidecarError(200, endpoint + ": non-finite vector element");
        out.push_back(v);
    }
    return out;
}

}  // namespace

std::string base64_encode(std::string_view bytes)
{
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 3 <= bytes.size(); i += 3) {
        const std::uint32_t n = (std::uint32_t(static_cast<unsigned char>(bytes[i])) << 16) |
                                (std::uint32_t(static_cast<unsigned char>(bytes[i + 1])) << 8) |
                                std::uint32_t(static_cast<unsigned char>(bytes[i + 2]));
        out += kAlphabet[(n >> 18) & 63];
        out += kAlphabet[(n >> 12) & 63];
        out += kAlphabet[(n >> 6) & 63];
        out += kAlphabet[n & 63];
    }
    const std::size_t rest = bytes.size() - i;
    if (rest > 0) {
        std::uint32_t n = std::uint32_t(static_cast<unsigned char>(bytes[i])) << 16;
        if (rest == 2)
            n |= std::uint32_t(static_cast<unsigned char>(bytes[i + 1])) << 8;
        out += kAlphabet[(n >> 18) & 63];
        out += kAlphabet[(n >> 12) & 63];
        out += rest == 2 ? kAlphabet[(n >> 6) & 63] : '=';
        out += '=';
    }
    return out;
}

std::string base64_decode(std::string_view text)
{
    auto value_of = [](char c) -> int {
        const auto pos = kAlphabet.find(c);
        return pos == std::string_view::npos ? -1 : static_cast<int>(pos);
    };
    std::string out;
    std::uint32_t buffer = 0;
    int bits = 0;
    for (const char c : text) {
        if (c == '=')
            break;
        if (c == '\n' || c == '\r')
            continue;
        const int v = value_of(c);
        if (v < 0)
            throw Error("base64_decode: invalid character");
        buffer = (buffer << 6) | static_cast<std::uint32_t>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out += static_cast<char>((buffer >> bits) & 0xff);
        }
    }
    return out;
}

SidecarClient::SidecarClient(std::string base_url, double timeout_s, std::string model)
    : base_url_(std::move(base_url)), timeout_s_(timeout_s), model_(std::move(model))
{
    while (!base_url_.empty() && base_url_.back() == '/')
        base_url_.pop_back();
}

std::string SidecarClient::next_request_id() const
{
    return "qdf-" + std::to_string(counter_.fetch_add(1) + 1);
}

std::string SidecarClient::post(const std::string& path, const std::string& body) const
{
    httplib::Client cli(base_url_);
    const auto timeout = std::chrono::duration<double>(timeout_s_);
    cli.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    cli.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    auto res = cli.Post(path, body, "application/json");
    if (!res)
        throw SidecarUnavailable("sidecar at " + base_url_ + " unreachable (" + httplib::to_string(res.error()) + ")");
    if (res->status != 200)
        throw SidecarError(res->status, path + ": sidecar returned HTTP " + std::to_string(res->status));
    return res->body;
}

SidecarHealth SidecarClient::health() const
{
    httplib::Client cli(base_url_);
    cli.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::duration<double>(timeout_s_)));
    auto res = cli.Get("/health");
    if (!res)
        throw SidecarUnavailable("sidecar at " + base_url_ + " unreachable (" + httplib::to_string(res.error()) + ")");
    if (res->status != 200)
        throw SidecarError(res->status, "/health: sidecar returned HTTP " + std::to_string(res->status));
    const json j = parse_body(res->body, "/health");
    SidecarHealth h;
    h.raw_json = res->body;
    if (j.contains("embedding_dim") && j["embedding_dim"].is_number_unsigned())
        h.embedding_dim = j["embedding_dim"].get<std::size_t>();
    return h;
}

std::vector<double> SidecarClient::embed_image(const ImageBuffer& img) const
{
    const std::string id = next_request_id();
    json req = {{"request_id", id}, {"image", base64_encode(encode_ppm(img))}};
    if (!model_.empty())
        req["model"] = model_;
    const json res = parse_body(post("/embed_image", req.dump()), "/embed_image");
    check_request_id(res, id, "/embed_image");
    if (!res.contains("vector"))
        throw SidecarError(200, "/embed_image: missing 'vector'");
    return finite_vector(res["vector"], "/embed_image");
}

double SidecarClient::score(std::string_view prompt, const ImageBuffer& img) const
{
    const std::string id = next_request_id();
    json req = {{"request_id", id}, {"prompt", std::string(prompt)}, {"image", base64_encode(encode_ppm(img))}};
    if (!model_.empty())
        req["model"] = model_;
    const json res = parse_body(post("/score", req.dump()), "/score");
    check_request_id(res, id, "/score");
    if (!res.contains("score") || !res["score"].is_number())
        throw SidecarError(200, "/score: missing numeric 'score'");
    const double s = res["score"].get<double>();
    if (!std::isfinite(s) || s < -1.0 || s > 1.0)
        throw SidecarError(200, "/score: score outside [-1, 1]");
    return s;
}

Genome SidecarClient::refine(const Genome& genome, std::string_view prompt, std::uint32_t steps) const
{
    const std::string id = next_request_id();
    json genes = json::array();
    for (const auto g : genome.indices())
        genes.push_back(g);
    json req = {{"request_id", id}, {"genome", genes}, {"prompt", std::string(prompt)}, {"steps", steps}};
    if (!model_.empty())
        req["model"] = model_;
    const json res = parse_body(post("/refine", req.dump()), "/refine");
    check_request_id(res, id, "/refine");
    if (!res.contains("genome") || !res["genome"].is_array())
        throw SidecarError(200, "/refine: missing 'genome'");
    std::vector<Genome::value_type> out;
    out.reserve(res["genome"].size());
    for (const auto& g : res["genome"]) {
        if (!g.is_number_unsigned())
            throw SidecarError(200, "/refine: genome entries must be non-negative integers");
        out.push_back(g.get<Genome::value_type>());
    }
    if (out.size() != genome.size())
        throw SidecarError(200, "/refine: genome length changed");
    return Genome(std::move(out));
}

RemoteEmbeddingProvider::RemoteEmbeddingProvider(std::shared_ptr<const SidecarClient> client, bool normalize,
                                                 std::size_t dimension)
    : client_(std::move(client)), normalize_(normalize), dimension_(dimension)
{
}

std::vector<double> RemoteEmbeddingProvider::embed(const ImageBuffer& img) const
{
    auto v = client_->embed_image(img);
    if (v.size() != dimension_)
        throw SidecarError(200, "/embed_image: expected " + std::to_string(dimension_) + " values, got " +
                                    std::to_string(v.size()));
    if (normalize_) {
        const double n = std::sqrt(dot(v, v));
        if (n > 0)
            for (auto& x : v)
                x /= n;
    }
    return v;
}

RemoteEvaluator::RemoteEvaluator(EngineConfig cfg, std::shared_ptr<const Codebook> book,
                                 std::shared_ptr<const SidecarClient> client, std::string prompt_text,
                                 std::uint32_t max_in_flight, bool normalize)
    : cfg_(cfg),
      book_(std::move(book)),
      client_(client),
      provider_(std::move(client), normalize),
      prompt_(std::move(prompt_text)),
      max_in_flight_(std::max<std::uint32_t>(1, max_in_flight))
{
    if (prompt_.empty())
        throw Error("RemoteEvaluator: empty prompt");
}

void RemoteEvaluator::evaluate(Individual& ind) const
{
    if (!ind.genome.valid_for(cfg_))
        throw Error("RemoteEvaluator: genome invalid for config");
    ImageBuffer img = decode(ind.genome, *book_, cfg_);
    ind.hsv = hsv_summary(img);
    ind.embedding = provider_.embed(img);
    ind.fitness = client_->score(prompt_, img);
    ind.phenotype = std::move(img);
    count_evaluation();
}

void RemoteEvaluator::evaluate_all(std::span<Individual> pop) const
{
    for (std::size_t start = 0; start < pop.size(); start += max_in_flight_) {
        const std::size_t end = std::min(pop.size(), start + max_in_flight_);
        std::vector<std::future<void>> batch;
        batch.reserve(end - start);
        for (std::size_t i = start; i < end; ++i)
            batch.push_back(std::async(std::launch::async, [this, &ind = pop[i]] { evaluate(ind); }));
        for (auto& f : batch)
            f.get();
    }
}

Individual RemoteRefiner::step(const Individual& ind, RngStream& /*rng*/) const
{
    Individual out;
    out.genome = eval_->client().refine(ind.genome, eval_->prompt_text(), 1);
    eval_->evaluate(out);
    return out;
}

}  // namespace qdforge
