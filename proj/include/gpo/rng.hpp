#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace gpo {

using Rng = std::mt19937_64;

/// Derives an independent generator from a base seed and a stream path
/// (e.g. {round, policy, purpose}). Identical inputs give identical streams.
Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream = {});

double standard_normal(Rng& rng);
double uniform(Rng& rng, double lo, double hi);

// Stream tags used when deriving generators; stable values keep runs reproducible.
enum StreamTag : std::uint64_t {
  kInitTag = 1,
  kCollectTag = 2,
  kCriticTag = 3,
  kCrossoverTag = 4,
  kSelectTag = 5,
  kEvalTag = 6,
  kPretrainTag = 7,
};

}  // namespace gpo
