#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace siglab {

/// Incremental FNV-1a 64-bit hash. Used for run-input fingerprints and
/// determinism checks on emitted files; not cryptographic.
class Fnv64 {
public:
    void update(std::string_view bytes) {
        for (unsigned char c : bytes) {
            h_ ^= c;
            h_ *= 0x100000001b3ULL;
        }
    }
    void update_u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h_ ^= static_cast<unsigned char>(v >> (8 * i));
            h_ *= 0x100000001b3ULL;
        }
    }
    void update_f64(double v) {
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(v));
        __builtin_memcpy(&bits, &v, sizeof(bits));
        update_u64(bits);
    }
    std::uint64_t value() const { return h_; }
    std::string hex() const;

private:
    std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

inline std::string Fnv64::hex() const {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    std::uint64_t v = h_;
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

std::string hash_file_hex(const std::string& path);

} // namespace siglab
