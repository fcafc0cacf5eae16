#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "simplexscope/errors.hpp"

namespace simplexscope {

/// splitmix64 step; used to derive independent substream seeds from
/// (seed, stream index) so parallel chunks are reproducible.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed;
    std::uint64_t a = splitmix64(s);
    s ^= stream * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL;
    return a ^ splitmix64(s);
}

/// Deterministic random source. The engine (mt19937_64) is fully specified
/// by the standard and all value conversions are done explicitly here, so
/// streams are bit-reproducible across platforms and standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::int64_t uniform_int(std::int64_t n) {
        return static_cast<std::int64_t>(uniform() * static_cast<double>(n)) % n;
    }

    /// Standard normal via Box-Muller (explicit, not std::normal_distribution,
    /// which is implementation-defined).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double rad = std::sqrt(-2.0 * std::log(u1));
        const double ang = 2.0 * M_PI * u2;
        spare_ = rad * std::sin(ang);
        have_spare_ = true;
        return rad * std::cos(ang);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// Inverse-CDF sampler over a fixed positive weight vector.
class DiscreteSampler {
public:
    explicit DiscreteSampler(const Eigen::VectorXd& weights) {
        if (weights.size() == 0) throw InvalidInputError("DiscreteSampler: empty weights");
        cdf_.resize(static_cast<std::size_t>(weights.size()));
        double acc = 0.0;
        for (Eigen::Index i = 0; i < weights.size(); ++i) {
            if (!(weights[i] > 0.0)) throw InvalidInputError("DiscreteSampler: weights must be positive");
            acc += weights[i];
            cdf_[static_cast<std::size_t>(i)] = acc;
        }
        total_ = acc;
    }

    int sample(Rng& rng) const {
        const double u = rng.uniform() * total_;
        auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
        if (it == cdf_.end()) --it;
        return static_cast<int>(it - cdf_.begin());
    }

private:
    std::vector<double> cdf_;
    double total_ = 0.0;
};

}  // namespace simplexscope
