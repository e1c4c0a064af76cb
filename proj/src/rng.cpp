#include "splitinf/rng.hpp"

namespace splitinf {

namespace {

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
}

std::uint64_t identity_key(std::uint64_t seed, std::uint64_t stream) noexcept {
    std::uint64_t s = seed ^ 0x6a09e667f3bcc909ULL;
    std::uint64_t a = splitmix64(s);
    s = a ^ (stream * 0x9e3779b97f4a7c15ULL + 0xbb67ae8584caa73bULL);
    return splitmix64(s);
}

} // namespace

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

SeededRng::SeededRng(std::uint64_t seed, std::uint64_t stream_id) noexcept
    : seed_(seed), stream_id_(stream_id) {
    std::uint64_t s = identity_key(seed, stream_id);
    for (auto& word : state_) word = splitmix64(s);
}

SeededRng::result_type SeededRng::operator()() noexcept {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

SeededRng SeededRng::child(std::uint64_t stream) const noexcept {
    return SeededRng(identity_key(seed_, stream_id_), stream);
}

double SeededRng::uniform01() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

} // namespace splitinf
