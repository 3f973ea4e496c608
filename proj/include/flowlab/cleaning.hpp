#ifndef FLOWLAB_CLEANING_HPP
#define FLOWLAB_CLEANING_HPP

#include <cstdint>
#include <ostream>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "flowlab/errors.hpp"
#include "flowlab/records.hpp"

namespace flowlab {

enum class DirectionFilter { in, out, both };

struct CleanConfig {
    std::set<std::uint16_t> allowed_ifaces;  // empty = all
    DirectionFilter direction = DirectionFilter::both;
    std::set<std::uint8_t> protocols;  // empty = all
    std::uint64_t max_duration_ms = 7ULL * 24 * 3600 * 1000;
    std::uint64_t max_packet_size = 1522;
    std::uint64_t min_packet_size = 64;

    void validate() const {
        if (max_duration_ms == 0) throw ValidationError("max_duration_ms must be > 0");
        if (min_packet_size > max_packet_size) throw ValidationError("min_packet_size > max_packet_size");
    }
};

struct CleanReport {
    std::size_t kept = 0;
    std::size_t dropped_suspect = 0;
    std::size_t dropped_iface = 0;
    std::size_t dropped_protocol = 0;
    std::size_t dropped_duration = 0;
    std::size_t dropped_avg_pkt_size = 0;

    std::size_t input() const noexcept {
        return kept + dropped_suspect + dropped_iface + dropped_protocol + dropped_duration + dropped_avg_pkt_size;
    }

    CleanReport& operator+=(const CleanReport& o) noexcept {
        kept += o.kept;
        dropped_suspect += o.dropped_suspect;
        dropped_iface += o.dropped_iface;
        dropped_protocol += o.dropped_protocol;
        dropped_duration += o.dropped_duration;
        dropped_avg_pkt_size += o.dropped_avg_pkt_size;
        return *this;
    }

    friend bool operator==(const CleanReport&, const CleanReport&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const CleanReport& r) {
    return os << "kept=" << r.kept << " dropped_suspect=" << r.dropped_suspect << " dropped_iface=" << r.dropped_iface
              << " dropped_protocol=" << r.dropped_protocol << " dropped_duration=" << r.dropped_duration
              << " dropped_avg_pkt_size=" << r.dropped_avg_pkt_size;
}

/// Per-record predicate chain. Stateless apart from the report tally.
class Cleaner {
public:
    explicit Cleaner(CleanConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

    /// Returns true when the record is kept; otherwise tallies the first
    /// failing predicate.
    bool accept(const FlowRecord& r) {
        if (r.suspect) {
            ++report_.dropped_suspect;
            return false;
        }
        if (!iface_ok(r)) {
            ++report_.dropped_iface;
            return false;
        }
        if (!cfg_.protocols.empty() && !cfg_.protocols.contains(r.key.protocol)) {
            ++report_.dropped_protocol;
            return false;
        }
        if (r.last_ms < r.first_ms || r.duration_ms() > cfg_.max_duration_ms) {
            ++report_.dropped_duration;
            return false;
        }
        // min <= octets/packets <= max, in exact integer arithmetic
        using u128 = unsigned __int128;
        if (r.packets == 0 || u128{r.octets} < u128{cfg_.min_packet_size} * r.packets ||
            u128{r.octets} > u128{cfg_.max_packet_size} * r.packets) {
            ++report_.dropped_avg_pkt_size;
            return false;
        }
        ++report_.kept;
        return true;
    }

    const CleanReport& report() const noexcept { return report_; }
    const CleanConfig& config() const noexcept { return cfg_; }

private:
    bool iface_ok(const FlowRecord& r) const {
        if (cfg_.direction != DirectionFilter::both && r.direction != Direction::unknown) {
            auto want = cfg_.direction == DirectionFilter::in ? Direction::in : Direction::out;
            if (r.direction != want) return false;
        }
        if (cfg_.allowed_ifaces.empty()) return true;
        bool in_ok = cfg_.allowed_ifaces.contains(r.in_iface);
        bool out_ok = cfg_.allowed_ifaces.contains(r.out_iface);
        switch (cfg_.direction) {
        case DirectionFilter::in: return in_ok;
        case DirectionFilter::out: return out_ok;
        case DirectionFilter::both: return in_ok || out_ok;
        }
        return false;
    }

    CleanConfig cfg_;
    CleanReport report_;
};

inline std::pair<std::vector<FlowRecord>, CleanReport> clean(std::span<const FlowRecord> stream,
                                                             const CleanConfig& cfg) {
    Cleaner cleaner(cfg);
    std::vector<FlowRecord> kept;
    for (const auto& r : stream)
        if (cleaner.accept(r)) kept.push_back(r);
    return {std::move(kept), cleaner.report()};
}

} // namespace flowlab

#endif // FLOWLAB_CLEANING_HPP
