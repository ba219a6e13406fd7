#pragma once

#include <array>
#include <cstdint>

namespace filters {

/// Counter-based random stream (Philox 4x64-10).
///
/// A stream is identified by a 64-bit seed and a 64-bit stream id, which
/// together form the Philox key; the block counter advances as numbers are
/// drawn. Two streams constructed with the same (seed, stream id) produce
/// identical sequences regardless of what any other stream did, so
/// per-particle and per-replicate substreams can be consumed from any thread
/// without affecting reproducibility.
///
/// Substreams are derived by mixing a child id into the stream id. Derivation
/// is deterministic, so the stream tree reachable from a root seed is a pure
/// function of that seed.
class RngStream {
public:
    RngStream() : RngStream(0, 0) {}
    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

    /// Child stream with an id derived from (stream id, child id).
    RngStream substream(std::uint64_t child_id) const;

    /// Next raw 64-bit output.
    std::uint64_t next_u64();

    /// Uniform double in the open interval (0, 1).
    double uniform();

    /// Standard normal draw (Box-Muller; pairs are cached).
    double normal();

private:
    void refill();

    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t counter_ = 0;   // block index
    std::array<std::uint64_t, 4> block_{};
    int block_pos_ = 4;           // 4 = empty
    double spare_normal_ = 0.0;
    bool has_spare_normal_ = false;
};

/// SplitMix64 finalizer; used for substream id derivation.
std::uint64_t mix64(std::uint64_t x);

} // namespace filters
