#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace sempref::detail {

// Minimal SHA-256 (FIPS 180-4). Used for cache keys, input digests and the
// config hash; no crypto library dependency needed for that.
class Sha256 {
public:
    Sha256() { reset(); }

    void reset();
    void update(const void* data, std::size_t len);
    void update(std::string_view s) { update(s.data(), s.size()); }

    // Finalizes and returns the digest as lowercase hex. The object must be
    // reset() before reuse.
    std::string hex_digest();

private:
    void process_block(const std::uint8_t* block);

    std::uint32_t state_[8];
    std::uint64_t bit_count_ = 0;
    std::uint8_t buffer_[64];
    std::size_t buffer_len_ = 0;
};

std::string sha256_hex(std::string_view data);

} // namespace sempref::detail
