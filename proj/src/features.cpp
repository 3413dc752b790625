#include "messplus/features.hpp"

#include <cctype>
#include <cmath>
#include <string>

#include "messplus/kernels.hpp"

namespace messplus {

std::uint64_t seeded_fnv1a(std::uint64_t seed, std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ (seed * 0x100000001b3ULL);
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char ch : text) {
        if (std::isalnum(ch)) {
            current.push_back(static_cast<char>(std::tolower(ch)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) {
        tokens.push_back(std::move(current));
    }
    return tokens;
}

std::vector<double> hashed_token_counts(std::string_view text, std::size_t dim, std::uint64_t seed) {
    std::vector<double> counts(dim, 0.0);
    for (const auto& token : tokenize(text)) {
        counts[seeded_fnv1a(seed, token) % dim] += 1.0;
    }
    return counts;
}

void FeatureExtractor::validate() const {
    if (dim == 0) {
        throw ParameterError("feature dimension must be > 0");
    }
}

std::vector<double> FeatureExtractor::operator()(const RequestEvent& event) const {
    return featurize(*this, event);
}

std::vector<double> featurize(const FeatureExtractor& extractor, const RequestEvent& event) {
    extractor.validate();
    if (extractor.kind == FeatureExtractor::Kind::passthrough) {
        if (event.features.size() != extractor.dim) {
            throw ParameterError("feature vector has dimension " + std::to_string(event.features.size()) +
                                 ", expected " + std::to_string(extractor.dim));
        }
        return event.features;
    }
    auto counts = hashed_token_counts(event.text, extractor.dim, extractor.seed);
    const double norm = std::sqrt(kernels::dot(counts, counts));
    if (norm > 0.0) {
        for (double& v : counts) {
            v /= norm;
        }
    }
    return counts;
}

std::string_view to_string(FeatureExtractor::Kind kind) noexcept {
    return kind == FeatureExtractor::Kind::hashed_tokens ? "hashed_tokens" : "passthrough";
}

FeatureExtractor::Kind feature_kind_from_string(std::string_view name) {
    if (name == "hashed_tokens") {
        return FeatureExtractor::Kind::hashed_tokens;
    }
    if (name == "passthrough") {
        return FeatureExtractor::Kind::passthrough;
    }
    throw ParameterError("unknown feature extractor kind: " + std::string(name));
}

}  // namespace messplus
