#ifndef FLOWLAB_GENERATOR_HPP
#define FLOWLAB_GENERATOR_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <thread>
#include <vector>

#include "flowlab/errors.hpp"
#include "flowlab/histogram.hpp"
#include "flowlab/mixture.hpp"

namespace flowlab {

struct GenConfig {
    Feature feature = Feature::length;
    std::uint64_t count = 1;
    std::uint64_t seed = 0;
    double min_packet_size = 64;
    double max_packet_size = 1522;
    int max_retries = 100;

    void validate() const {
        if (count < 1) throw ValidationError("count must be >= 1");
        if (!(min_packet_size >= 1 && min_packet_size <= max_packet_size))
            throw ValidationError("packet size bounds must satisfy 1 <= min <= max");
    }
};

struct GeneratedFlow {
    std::uint64_t length = 0;
    std::uint64_t size = 0;
    double avg_packet_size = 0;

    friend bool operator==(const GeneratedFlow&, const GeneratedFlow&) = default;
};

/// Maps a real draw to a flow length/size: truncate the fractional part and
/// add one (so 4.0 -> 5), then lift sizes below the minimum packet size.
inline std::uint64_t round_draw(double x, Feature feature, double min_packet_size = 64) {
    constexpr double cap = 0x1p62;
    double v = std::isfinite(x) ? std::floor(std::clamp(x, 0.0, cap)) + 1.0 : cap;
    auto k = static_cast<std::uint64_t>(v);
    if (feature == Feature::size) k = std::max(k, static_cast<std::uint64_t>(std::ceil(min_packet_size)));
    return k;
}

template <class Rng>
std::uint64_t sample_feature(const MixtureModel& flows, Rng& rng, Feature feature, double min_packet_size = 64) {
    return round_draw(flows.sample(rng), feature, min_packet_size);
}

/// P(K <= k) for K = round_draw(X); equals the continuous mixture CDF at k
/// (below the size floor it is 0).
inline double rounded_cdf(const MixtureModel& m, std::uint64_t k, Feature feature = Feature::length,
                          double min_packet_size = 64) {
    if (feature == Feature::size && static_cast<double>(k) < std::ceil(min_packet_size)) return 0.0;
    return m.cdf(static_cast<double>(k));
}

/// Average packet size of flows at feature value x: the ratio of the octets
/// and packets mixture densities times the dataset's octets/packets ratio,
/// clamped to [min, max].
inline double avg_packet_size(const ModelSet& ms, Feature feature, std::uint64_t x, double min_packet_size = 64,
                              double max_packet_size = 1522) {
    if (x < 1) throw DomainError("avg_packet_size needs x >= 1");
    const auto& pk = ms.at(feature, Target::packets);
    const auto& oc = ms.at(feature, Target::octets);
    if (pk.sum() == 0) throw ValidationError("packets model has sum 0");
    const double xd = static_cast<double>(x);
    double p = pk.pdf(xd);
    if (!(p >= 1e-300)) throw TailError("packets density vanishes at x=" + std::to_string(x));
    double ratio = oc.pdf(xd) / p * (static_cast<double>(oc.sum()) / static_cast<double>(pk.sum()));
    return std::clamp(ratio, min_packet_size, max_packet_size);
}

namespace detail {

template <class Rng>
GeneratedFlow generate_one(const ModelSet& ms, const MixtureModel& flows, const GenConfig& cfg, Rng& rng) {
    for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
        std::uint64_t v = sample_feature(flows, rng, cfg.feature, cfg.min_packet_size);
        double aps = 0;
        try {
            aps = avg_packet_size(ms, cfg.feature, v, cfg.min_packet_size, cfg.max_packet_size);
        } catch (const TailError&) {
            continue;
        }
        GeneratedFlow f;
        f.avg_packet_size = aps;
        if (cfg.feature == Feature::length) {
            f.length = v;
            f.size = static_cast<std::uint64_t>(std::llround(static_cast<double>(v) * aps));
            f.size = std::max(f.size, static_cast<std::uint64_t>(std::ceil(cfg.min_packet_size)));
        } else {
            f.size = v;
            f.length = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(static_cast<double>(v) / aps)));
        }
        return f;
    }
    throw TailError("no usable sample after " + std::to_string(cfg.max_retries) + " retries");
}

} // namespace detail

/// Streams cfg.count flows to `sink`. Deterministic for a given seed.
inline void generate(const ModelSet& ms, const GenConfig& cfg, const std::function<void(const GeneratedFlow&)>& sink) {
    cfg.validate();
    const auto& flows = ms.at(cfg.feature, Target::flows);
    ms.at(cfg.feature, Target::packets);
    ms.at(cfg.feature, Target::octets);
    std::mt19937_64 rng(cfg.seed);
    for (std::uint64_t n = 0; n < cfg.count; ++n) sink(detail::generate_one(ms, flows, cfg, rng));
}

inline std::vector<GeneratedFlow> generate(const ModelSet& ms, const GenConfig& cfg) {
    std::vector<GeneratedFlow> out;
    out.reserve(cfg.count);
    generate(ms, cfg, [&](const GeneratedFlow& f) { out.push_back(f); });
    return out;
}

/// Splits the count across `workers`, each with its own stream seeded from
/// (seed, worker index). Output is the concatenation in worker order.
inline std::vector<GeneratedFlow> generate_parallel(const ModelSet& ms, const GenConfig& cfg, unsigned workers) {
    if (workers <= 1) return generate(ms, cfg);
    cfg.validate();
    std::vector<std::vector<GeneratedFlow>> parts(workers);
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            GenConfig sub = cfg;
            sub.count = cfg.count / workers + (w < cfg.count % workers ? 1 : 0);
            std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32), w};
            std::array<std::uint32_t, 2> s{};
            seq.generate(s.begin(), s.end());
            sub.seed = (std::uint64_t{s[0]} << 32) | s[1];
            if (sub.count == 0) continue;
            pool.emplace_back([&ms, &parts, sub, w] { parts[w] = generate(ms, sub); });
        }
    }
    std::vector<GeneratedFlow> out;
    out.reserve(cfg.count);
    for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

} // namespace flowlab

#endif // FLOWLAB_GENERATOR_HPP
