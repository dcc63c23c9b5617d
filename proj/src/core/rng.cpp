#include "core/rng.hpp"

namespace mknock {

std::uint64_t Stream::mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Stream Stream::derive(std::uint64_t tag) const {
    return Stream(FromKey{}, mix(key_ ^ mix(tag + 0x3C6EF372FE94F82BULL)));
}

Stream Stream::derive(std::string_view tag) const {
    // FNV-1a over the tag bytes, then the integer derivation.
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char ch : tag) {
        h ^= ch;
        h *= 0x100000001B3ULL;
    }
    return derive(h);
}

}  // namespace mknock
