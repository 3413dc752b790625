#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "messplus/core.hpp"

namespace messplus {

/// Turns a request into the dense vector the predictor consumes.
///
/// `hashed_tokens` lower-cases the text, splits it on non-alphanumeric
/// characters and counts each token in bucket fnv1a64(seed, token) mod dim;
/// the count vector is then scaled to unit L2 norm. `passthrough` returns the
/// request's own feature vector.
struct FeatureExtractor {
    enum class Kind { hashed_tokens, passthrough };

    Kind kind = Kind::passthrough;
    std::size_t dim = 16;
    std::uint64_t seed = 0;

    std::vector<double> operator()(const RequestEvent& event) const;

    void validate() const;
};

/// 64-bit FNV-1a over `bytes`, with `seed` folded into the offset basis.
std::uint64_t seeded_fnv1a(std::uint64_t seed, std::string_view bytes) noexcept;

std::vector<std::string> tokenize(std::string_view text);

/// Bucket counts before normalisation.
std::vector<double> hashed_token_counts(std::string_view text, std::size_t dim, std::uint64_t seed);

std::vector<double> featurize(const FeatureExtractor& extractor, const RequestEvent& event);

std::string_view to_string(FeatureExtractor::Kind kind) noexcept;
FeatureExtractor::Kind feature_kind_from_string(std::string_view name);

}  // namespace messplus
