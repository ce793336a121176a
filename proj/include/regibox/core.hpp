// Shared primitives: error type, small dense-vector helpers, seeded RNG and
// a deterministic chunked parallel-for.
#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace regibox {

// Error categories map one-to-one onto CLI exit codes.
enum class ErrorKind : std::uint8_t {
    usage = 2,
    data = 3,
    numeric = 4,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }
    [[nodiscard]] int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

// ---------------------------------------------------------------------------
// vector helpers

template <typename A, typename B>
[[nodiscard]] double dot(std::span<const A> x, std::span<const B> y) {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) s += static_cast<double>(x[j]) * static_cast<double>(y[j]);
    return s;
}

template <typename A>
[[nodiscard]] double norm(std::span<const A> x) {
    return std::sqrt(dot(x, x));
}

// In-place unit normalization. Returns false (leaving x untouched) for a zero vector.
template <std::floating_point T>
bool normalize_in_place(std::span<T> x) {
    const double n = norm(std::span<const T>(x));
    if (!(n > 0.0) || !std::isfinite(n)) return false;
    for (auto& v : x) v = static_cast<T>(static_cast<double>(v) / n);
    return true;
}

template <typename T>
[[nodiscard]] bool all_finite(std::span<const T> x) {
    return std::all_of(x.begin(), x.end(), [](T v) { return std::isfinite(static_cast<double>(v)); });
}

// ---------------------------------------------------------------------------
// random numbers
//
// The std distributions are implementation-defined; these are not, so seeded
// outputs are byte-identical across standard libraries.

[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

[[nodiscard]] constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Per-component seed: root xor hashed component tag, then mixed.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t root, std::string_view tag) noexcept {
    return splitmix64(root ^ fnv1a(tag));
}

// xoshiro256** seeded through splitmix64.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) noexcept {
        std::uint64_t s = seed;
        for (auto& w : state_) {
            s += 0x9e3779b97f4a7c15ULL;
            w = splitmix64(s);
        }
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
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

    // Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; the second variate is cached.
    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        constexpr double two_pi = 6.283185307179586476925286766559;
        spare_ = r * std::sin(two_pi * u2);
        has_spare_ = true;
        return r * std::cos(two_pi * u2);
    }

    // Unbiased integer in [0, n) by rejection.
    std::uint64_t below(std::uint64_t n) noexcept {
        if (n <= 1) return 0;
        const std::uint64_t limit = max() - max() % n;
        std::uint64_t r = 0;
        do {
            r = (*this)();
        } while (r >= limit);
        return r % n;
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4]{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Fisher-Yates with Rng::below so permutations are portable.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        std::swap(v[i - 1], v[j]);
    }
}

// ---------------------------------------------------------------------------
// parallelism

// Worker cap: REGIBOX_THREADS if set and positive, else hardware concurrency.
[[nodiscard]] inline std::size_t max_threads() {
    if (const char* env = std::getenv("REGIBOX_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<std::size_t>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// Calls body(chunk_index, begin, end) for fixed-size chunks of [0, n). Chunk
// boundaries depend only on n and chunk_size, so callers that reduce per-chunk
// results in chunk order get identical sums for any worker count.
inline void parallel_chunks(std::size_t n, std::size_t chunk_size,
                            const std::function<void(std::size_t, std::size_t, std::size_t)>& body) {
    if (n == 0) return;
    chunk_size = std::max<std::size_t>(chunk_size, 1);
    const std::size_t chunks = (n + chunk_size - 1) / chunk_size;
    const std::size_t workers = std::min(chunks, max_threads());
    auto run = [&](std::size_t c) { body(c, c * chunk_size, std::min(n, (c + 1) * chunk_size)); };
    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) run(c);
        return;
    }
    std::vector<std::exception_ptr> errors(chunks);
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t c = w; c < chunks; c += workers) {
                    try {
                        run(c);
                    } catch (...) {
                        errors[c] = std::current_exception();
                    }
                }
            });
        }
    }
    // Rethrow the lowest-index failure so the reported error is thread-count independent.
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

[[nodiscard]] inline std::size_t chunk_count(std::size_t n, std::size_t chunk_size) {
    return n == 0 ? 0 : (n + chunk_size - 1) / chunk_size;
}

}  // namespace regibox
