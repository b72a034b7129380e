#pragma once

#include <cstdint>
#include <vector>

#include "paa/core.hpp"

namespace paa {

// Deterministic generator with platform-independent sampling routines.
// xoshiro256** core seeded through SplitMix64; all distributions are
// implemented here (not via <random>) so that streams are bit-reproducible
// across standard libraries and platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform on [0, 1) with 53-bit resolution.
    double next_double();

    double uniform(double lo, double hi);

    // Uniform integer on {lo, ..., hi} via rejection sampling.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    bool bernoulli(double p);

    // Standard normal via Box-Muller (second value cached).
    double normal();

    // Gamma(shape, 1).  Marsaglia-Tsang for shape >= 1; for shape < 1 the
    // boost log_gamma path keeps tiny shapes finite.
    double gamma(double shape);

    // log of a Gamma(shape, 1) draw; exact for shape >= 1, boosted for < 1 so
    // that shape values like 1e-4 do not underflow to zero.
    double log_gamma_draw(double shape);

    // Symmetric Dirichlet of dimension `dim` with concentration alpha,
    // sampled in log space and normalized by softmax.
    Vector dirichlet(double alpha, Index dim);

    int poisson(double rate);

    // Counts over `probs.size()` categories from `trials` independent draws.
    std::vector<int> multinomial(int trials, const Vector& probs);

private:
    std::uint64_t state_[4];
    bool have_cached_normal_ = false;
    double cached_normal_ = 0.0;
};

// Derives an independent, reproducible stream from a master seed.  The same
// (master_seed, stream_id) pair always yields the same stream on every
// platform.
Rng derive_rng(std::uint64_t master_seed, std::uint64_t stream_id);

} // namespace paa
