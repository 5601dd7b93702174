#ifndef EDMPC_RNG_HPP
#define EDMPC_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace edmpc {

/// Child seed for a named stream: SplitMix64 finalizer over root XOR FNV-1a(name).
/// Every stochastic component draws from its own stream so adding draws in one
/// place never shifts another.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream);

/// mt19937_64 with hand-rolled distributions. The engine's sequence is fixed by
/// the standard; std:: distributions are not, so none are used here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    Rng(std::uint64_t root, std::string_view stream) : engine_(derive_seed(root, stream)) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform integer on [0, n), n > 0, by rejection.
    std::uint64_t below(std::uint64_t n);

    /// Uniform integer on [lo, hi].
    long uniform_int(long lo, long hi) {
        return lo + static_cast<long>(below(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

    bool operator==(const Rng& other) const { return engine_ == other.engine_; }

private:
    std::mt19937_64 engine_;
};

} // namespace edmpc

#endif
