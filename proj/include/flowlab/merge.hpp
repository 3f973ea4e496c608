#ifndef FLOWLAB_MERGE_HPP
#define FLOWLAB_MERGE_HPP

#include <algorithm>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "flowlab/errors.hpp"
#include "flowlab/records.hpp"

namespace flowlab {

struct MergeConfig {
    std::uint64_t active_timeout_ms = 300'000;
    std::uint64_t inactive_timeout_ms = 15'000;

    void validate() const {
        if (inactive_timeout_ms == 0 || active_timeout_ms <= inactive_timeout_ms)
            throw ValidationError("merge timeouts must satisfy active > inactive > 0");
    }

    /// Records at least this long may be the head of an exporter split.
    std::uint64_t threshold_ms() const noexcept { return active_timeout_ms - inactive_timeout_ms; }
};

struct MergeReport {
    std::size_t input = 0;
    std::size_t output = 0;
    std::size_t merges = 0;
    std::size_t erroneous = 0;
    std::uint64_t erroneous_packets = 0;
    std::uint64_t erroneous_octets = 0;

    MergeReport& operator+=(const MergeReport& o) noexcept {
        input += o.input;
        output += o.output;
        merges += o.merges;
        erroneous += o.erroneous;
        erroneous_packets += o.erroneous_packets;
        erroneous_octets += o.erroneous_octets;
        return *this;
    }
};

inline std::ostream& operator<<(std::ostream& os, const MergeReport& r) {
    return os << "input=" << r.input << " output=" << r.output << " merges=" << r.merges
              << " erroneous=" << r.erroneous;
}

/// Streaming re-assembly of flows split by the exporter's active timeout.
///
/// Records must arrive ordered by first_ms. A record shorter than
/// active - inactive is final unless it continues a cached record; longer
/// records wait in a one-slot-per-key cache for a continuation that starts
/// within (last_ms, last_ms + inactive]. A same-key record starting at or
/// before the cached last_ms is erroneous and dropped.
class Merger {
public:
    using Sink = std::function<void(const FlowRecord&)>;

    Merger(MergeConfig cfg, Sink sink) : cfg_(cfg), sink_(std::move(sink)) { cfg_.validate(); }

    void push(const FlowRecord& r) {
        if (report_.input > 0 && r.first_ms < last_first_)
            throw OrderError(report_.input, "first_ms decreases; input must be sorted");
        last_first_ = r.first_ms;
        ++report_.input;

        const bool is_long = r.duration_ms() >= cfg_.threshold_ms();
        auto it = cache_.find(r.key);
        if (it != cache_.end()) {
            FlowRecord& c = it->second;
            if (r.first_ms > c.last_ms && r.first_ms - c.last_ms <= cfg_.inactive_timeout_ms) {
                c.packets += r.packets;
                c.octets += r.octets;
                c.last_ms = r.last_ms;
                ++report_.merges;
                if (!is_long) {
                    emit(c);
                    cache_.erase(it);
                }
                return;
            }
            if (r.first_ms <= c.last_ms) {
                ++report_.erroneous;
                report_.erroneous_packets += r.packets;
                report_.erroneous_octets += r.octets;
                return;
            }
            emit(c);
            cache_.erase(it);
        }
        if (is_long) {
            cache_.emplace(r.key, r);
            peak_cache_ = std::max(peak_cache_, cache_.size());
        } else {
            emit(r);
        }
    }

    /// Flushes cached records in key order.
    void finish() {
        std::vector<FlowRecord> rest;
        rest.reserve(cache_.size());
        for (auto& [k, c] : cache_) rest.push_back(c);
        cache_.clear();
        std::sort(rest.begin(), rest.end(), [](const FlowRecord& a, const FlowRecord& b) { return a.key < b.key; });
        for (const auto& c : rest) emit(c);
    }

    const MergeReport& report() const noexcept { return report_; }
    std::size_t cache_size() const noexcept { return cache_.size(); }
    std::size_t peak_cache_size() const noexcept { return peak_cache_; }

private:
    void emit(const FlowRecord& r) {
        ++report_.output;
        sink_(r);
    }

    MergeConfig cfg_;
    Sink sink_;
    std::unordered_map<FlowKey, FlowRecord, FlowKeyHash> cache_;
    MergeReport report_;
    std::uint64_t last_first_ = 0;
    std::size_t peak_cache_ = 0;
};

inline std::pair<std::vector<FlowRecord>, MergeReport> merge(std::span<const FlowRecord> stream,
                                                             const MergeConfig& cfg) {
    std::vector<FlowRecord> out;
    Merger m(cfg, [&](const FlowRecord& r) { out.push_back(r); });
    for (const auto& r : stream) m.push(r);
    m.finish();
    return {std::move(out), m.report()};
}

/// Key-hash sharded merge. Each shard keeps the input order, so the result
/// equals the sequential merge up to output interleaving.
inline std::pair<std::vector<FlowRecord>, MergeReport> merge_sharded(std::span<const FlowRecord> stream,
                                                                     const MergeConfig& cfg, unsigned shards) {
    if (shards <= 1) return merge(stream, cfg);
    cfg.validate();
    std::vector<std::vector<FlowRecord>> parts(shards);
    for (std::size_t i = 0; i < stream.size(); ++i) {
        if (i > 0 && stream[i].first_ms < stream[i - 1].first_ms)
            throw OrderError(i, "first_ms decreases; input must be sorted");
        parts[FlowKeyHash{}(stream[i].key) % shards].push_back(stream[i]);
    }
    std::vector<std::pair<std::vector<FlowRecord>, MergeReport>> results(shards);
    {
        std::vector<std::jthread> workers;
        for (unsigned s = 0; s < shards; ++s)
            workers.emplace_back([&, s] { results[s] = merge(parts[s], cfg); });
    }
    std::vector<FlowRecord> out;
    MergeReport report;
    for (auto& [recs, rep] : results) {
        out.insert(out.end(), recs.begin(), recs.end());
        report += rep;
    }
    return {std::move(out), report};
}

} // namespace flowlab

#endif // FLOWLAB_MERGE_HPP
