#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <sstream>
#include <string>

namespace sfdmc {

// splitmix64 finalizer, used to spread a root seed into independent streams.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
    return mix64(root ^ mix64(stream));
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b) {
    return derive_seed(derive_seed(root, a), b);
}

// named stream, e.g. derive_seed(seed, "dropout"); the name is FNV-1a hashed
inline std::uint64_t derive_seed(std::uint64_t root, const char* stream) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const char* p = stream; *p; ++p) {
        h ^= static_cast<unsigned char>(*p);
        h *= 1099511628211ULL;
    }
    return derive_seed(root, h);
}

// mt19937_64 with hand-mapped uniform/normal draws. The standard distributions
// are not pinned down by the standard, so mapping the raw engine output keeps
// streams identical across library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; the second value of each pair is cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // uniform integer in [0, n), n >= 1. Lemire's multiply-shift reduction.
    int uniform_int(int n) {
        auto x = eng_();
        auto m = static_cast<unsigned __int128>(x) * static_cast<unsigned __int128>(n);
        return static_cast<int>(m >> 64);
    }

    std::uint64_t next_u64() { return eng_(); }

    std::string state() const {
        std::ostringstream os;
        std::uint64_t bits = 0;
        static_assert(sizeof(bits) == sizeof(spare_));
        std::memcpy(&bits, &spare_, sizeof(bits));
        os << eng_ << ' ' << (have_spare_ ? 1 : 0) << ' ' << bits;
        return os.str();
    }

    void set_state(const std::string& s) {
        std::istringstream is(s);
        int flag = 0;
        std::uint64_t bits = 0;
        is >> eng_ >> flag >> bits;
        std::memcpy(&spare_, &bits, sizeof(bits));
        have_spare_ = flag != 0;
    }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace sfdmc
