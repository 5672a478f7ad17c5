#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace metatask {

/// Splitmix64 finalizer; used for seed mixing and stream derivation.
std::uint64_t mix64(std::uint64_t x);

/// Derives an independent child seed from (seed, stream).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Deterministic random stream.
///
/// Wraps std::mt19937_64 (whose output sequence the standard pins down) and
/// implements all distributions by hand, so identical seeds give identical
/// draws on every platform and standard library. Child streams derived via
/// derive() depend only on the creation seed and the stream id, never on how
/// many values the parent has consumed; samplers use this to give each
/// episode its own stream.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

    /// Independent child stream for (creation seed, stream id).
    Rng derive(std::uint64_t stream) const { return Rng(derive_seed(seed_, stream)); }

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1), 53-bit resolution.
    double uniform();

    /// Uniform integer on [0, n); unbiased via rejection sampling. n must be > 0.
    std::size_t uniform_index(std::size_t n);

    /// Standard normal via Box-Muller; consumes exactly two uniforms per call.
    double normal();

    bool bernoulli(double p) { return uniform() < p; }

    /// k distinct indices from [0, n), in sampled order (partial Fisher-Yates).
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace metatask
