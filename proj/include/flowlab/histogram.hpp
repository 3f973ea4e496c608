#ifndef FLOWLAB_HISTOGRAM_HPP
#define FLOWLAB_HISTOGRAM_HPP

#include <algorithm>
#include <bit>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "flowlab/errors.hpp"
#include "flowlab/records.hpp"

namespace flowlab {

enum class Feature { length, size };
enum class Target { flows, packets, octets };

inline std::string_view to_string(Feature f) { return f == Feature::length ? "length" : "size"; }
inline std::string_view to_string(Target t) {
    switch (t) {
    case Target::flows: return "flows";
    case Target::packets: return "packets";
    case Target::octets: return "octets";
    }
    return "?";
}

inline std::optional<Feature> parse_feature(std::string_view s) {
    if (s == "length") return Feature::length;
    if (s == "size") return Feature::size;
    return std::nullopt;
}

inline std::optional<Target> parse_target(std::string_view s) {
    if (s == "flows") return Target::flows;
    if (s == "packets") return Target::packets;
    if (s == "octets") return Target::octets;
    return std::nullopt;
}

/// Values below 2^exact_limit_exp get width-1 bins, larger values fall into
/// power-of-two bins [2^k, 2^(k+1)).
struct BinSpec {
    int exact_limit_exp = 6;

    static BinSpec for_feature(Feature f) { return BinSpec{f == Feature::length ? 6 : 12}; }

    void validate() const {
        if (exact_limit_exp < 0 || exact_limit_exp > 63) throw ValidationError("exact_limit_exp must be in 0..63");
    }

    std::uint64_t exact_limit() const noexcept { return std::uint64_t{1} << exact_limit_exp; }

    std::uint64_t bin_lo(std::uint64_t v) const {
        if (v == 0) throw DomainError("bin value must be >= 1");
        if (v < exact_limit()) return v;
        return std::bit_floor(v);
    }

    /// Exclusive upper bound. The topmost bin saturates at 2^64 - 1.
    std::uint64_t bin_hi(std::uint64_t lo) const noexcept {
        if (lo < exact_limit()) return lo + 1;
        return lo >= (std::uint64_t{1} << 63) ? std::numeric_limits<std::uint64_t>::max() : lo * 2;
    }

    bool is_bin_start(std::uint64_t lo) const noexcept {
        return lo >= 1 && (lo < exact_limit() || std::has_single_bit(lo));
    }

    friend bool operator==(const BinSpec&, const BinSpec&) = default;
};

struct BinSums {
    std::uint64_t flows = 0;
    std::uint64_t packets = 0;
    std::uint64_t octets = 0;

    BinSums& operator+=(const BinSums& o) noexcept {
        flows += o.flows;
        packets += o.packets;
        octets += o.octets;
        return *this;
    }

    std::uint64_t get(Target t) const noexcept {
        switch (t) {
        case Target::flows: return flows;
        case Target::packets: return packets;
        case Target::octets: return octets;
        }
        return 0;
    }

    friend bool operator==(const BinSums&, const BinSums&) = default;
};

class Histogram {
public:
    using BinMap = std::map<std::uint64_t, BinSums>;

    explicit Histogram(Feature feature = Feature::length, BinSpec spec = BinSpec{})
        : feature_(feature), spec_(spec) {
        spec_.validate();
    }

    Feature feature() const noexcept { return feature_; }
    const BinSpec& spec() const noexcept { return spec_; }
    const BinMap& bins() const noexcept { return bins_; }
    const BinSums& totals() const noexcept { return totals_; }
    bool empty() const noexcept { return bins_.empty(); }

    std::uint64_t value_of(const FlowRecord& r) const noexcept {
        return feature_ == Feature::length ? r.packets : r.octets;
    }

    void add(const FlowRecord& r) {
        BinSums s{1, r.packets, r.octets};
        bins_[spec_.bin_lo(value_of(r))] += s;
        totals_ += s;
    }

    /// Adds sums for a whole bin; `lo` must be a bin start under the spec.
    void add_bin(std::uint64_t lo, const BinSums& s) {
        if (!spec_.is_bin_start(lo)) throw SpecError("value " + std::to_string(lo) + " is not a bin start");
        if (s.flows == 0 && s.packets == 0 && s.octets == 0) return;
        bins_[lo] += s;
        totals_ += s;
    }

    Histogram& operator+=(const Histogram& o) {
        if (o.feature_ != feature_ || !(o.spec_ == spec_))
            throw SpecError("cannot merge histograms with different feature or bin spec");
        for (const auto& [lo, s] : o.bins_) bins_[lo] += s;
        totals_ += o.totals_;
        return *this;
    }

    friend bool operator==(const Histogram&, const Histogram&) = default;

private:
    Feature feature_;
    BinSpec spec_;
    BinMap bins_;
    BinSums totals_;
};

inline Histogram bin(std::span<const FlowRecord> stream, Feature feature, BinSpec spec) {
    Histogram h(feature, spec);
    for (const auto& r : stream) h.add(r);
    return h;
}

/// Map-reduce binning over `threads` contiguous shards.
inline Histogram bin_parallel(std::span<const FlowRecord> stream, Feature feature, BinSpec spec, unsigned threads) {
    if (threads <= 1 || stream.size() < 2 * threads) return bin(stream, feature, spec);
    std::vector<Histogram> parts(threads, Histogram(feature, spec));
    {
        std::vector<std::jthread> workers;
        std::size_t chunk = (stream.size() + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            std::size_t begin = std::min(stream.size(), t * chunk);
            std::size_t end = std::min(stream.size(), begin + chunk);
            workers.emplace_back([&, t, begin, end] { parts[t] = bin(stream.subspan(begin, end - begin), feature, spec); });
        }
    }
    Histogram out(feature, spec);
    for (const auto& p : parts) out += p;
    return out;
}

inline Histogram merge_histograms(const Histogram& a, const Histogram& b) {
    Histogram out = a;
    out += b;
    return out;
}

// ---------------------------------------------------------------------------
// Distribution series (CDF/PDF points)
// ---------------------------------------------------------------------------

struct SeriesPoint {
    std::uint64_t x = 0;
    double cdf_flows = 0, cdf_packets = 0, cdf_octets = 0;
    double pdf_flows = 0, pdf_packets = 0, pdf_octets = 0;
};

struct DistributionSeries {
    std::vector<SeriesPoint> points;
};

/// CDF and PDF points at every non-empty bin start. Bin fractions are
/// divided by the distance to the next non-empty bin (the last bin by its
/// own width), which undoes the boost that wide bins give to raw sums.
inline DistributionSeries to_series(const Histogram& h) {
    if (h.empty()) throw EmptyError("histogram is empty");
    const auto& t = h.totals();
    const double tf = static_cast<double>(t.flows), tp = static_cast<double>(t.packets),
                 to = static_cast<double>(t.octets);
    auto frac = [](std::uint64_t v, double total) { return total > 0 ? static_cast<double>(v) / total : 0.0; };

    DistributionSeries s;
    s.points.reserve(h.bins().size());
    BinSums cum;
    for (auto it = h.bins().begin(); it != h.bins().end(); ++it) {
        const auto& [lo, sums] = *it;
        cum += sums;
        auto next = std::next(it);
        double span = next != h.bins().end() ? static_cast<double>(next->first - lo)
                                             : static_cast<double>(h.spec().bin_hi(lo) - lo);
        SeriesPoint p;
        p.x = lo;
        p.cdf_flows = frac(cum.flows, tf);
        p.cdf_packets = frac(cum.packets, tp);
        p.cdf_octets = frac(cum.octets, to);
        p.pdf_flows = frac(sums.flows, tf) / span;
        p.pdf_packets = frac(sums.packets, tp) / span;
        p.pdf_octets = frac(sums.octets, to) / span;
        s.points.push_back(p);
    }
    // exact 1 at the end, independent of rounding
    s.points.back().cdf_flows = tf > 0 ? 1.0 : 0.0;
    s.points.back().cdf_packets = tp > 0 ? 1.0 : 0.0;
    s.points.back().cdf_octets = to > 0 ? 1.0 : 0.0;
    return s;
}

inline constexpr std::string_view series_csv_header = "x,cdf_flows,cdf_packets,cdf_octets,pdf_flows,pdf_packets,pdf_octets";

inline void write_series_csv(const DistributionSeries& s, std::ostream& out) {
    out << series_csv_header << '\n' << std::setprecision(17);
    for (const auto& p : s.points)
        out << p.x << ',' << p.cdf_flows << ',' << p.cdf_packets << ',' << p.cdf_octets << ',' << p.pdf_flows << ','
            << p.pdf_packets << ',' << p.pdf_octets << '\n';
}

/// Fraction of `target` mass carried by values strictly below `x`. Only
/// meaningful when x is a bin boundary of the histogram's spec.
inline double cdf_below(const Histogram& h, std::uint64_t x, Target target = Target::flows) {
    std::uint64_t below = 0;
    for (const auto& [lo, s] : h.bins()) {
        if (lo >= x) break;
        below += s.get(target);
    }
    auto total = h.totals().get(target);
    return total ? static_cast<double>(below) / static_cast<double>(total) : 0.0;
}

// ---------------------------------------------------------------------------
// Summary statistics
// ---------------------------------------------------------------------------

struct Summary {
    BinSums totals;
    double avg_flow_length = 0;
    double avg_flow_size = 0;
    double avg_packet_size = 0;
};

inline Summary stats(const BinSums& t) {
    if (t.flows == 0 || t.packets == 0) throw EmptyError("no flows to summarize");
    Summary s;
    s.totals = t;
    s.avg_flow_length = static_cast<double>(t.packets) / static_cast<double>(t.flows);
    s.avg_flow_size = static_cast<double>(t.octets) / static_cast<double>(t.flows);
    s.avg_packet_size = static_cast<double>(t.octets) / static_cast<double>(t.packets);
    return s;
}

inline Summary stats(const Histogram& h) {
    if (h.empty()) throw EmptyError("histogram is empty");
    return stats(h.totals());
}

struct CdfRow {
    std::uint64_t x = 0;
    double flows_pct = 0, packets_pct = 0, octets_pct = 0;
};

/// Percentage of flows/packets/octets in flows with feature value <= x, for
/// each x. A bin straddling x is excluded, so with log bins the value is a
/// lower bound at points that are not bin ends.
inline std::vector<CdfRow> cdf_table(const Histogram& h, std::span<const std::uint64_t> xs) {
    std::vector<CdfRow> rows;
    const auto& t = h.totals();
    for (auto x : xs) {
        BinSums cum;
        for (const auto& [lo, s] : h.bins()) {
            if (h.spec().bin_hi(lo) - 1 > x) break;
            cum += s;
        }
        auto pct = [](std::uint64_t v, std::uint64_t total) {
            return total ? 100.0 * static_cast<double>(v) / static_cast<double>(total) : 0.0;
        };
        rows.push_back({x, pct(cum.flows, t.flows), pct(cum.packets, t.packets), pct(cum.octets, t.octets)});
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Histogram CSV
// ---------------------------------------------------------------------------

inline constexpr std::string_view hist_csv_header = "bin_lo,bin_hi,flows,packets,octets";

inline void write_hist_csv(const Histogram& h, std::ostream& out) {
    out << "# flowlab histogram feature=" << to_string(h.feature()) << " exact_exp=" << h.spec().exact_limit_exp
        << '\n'
        << hist_csv_header << '\n';
    for (const auto& [lo, s] : h.bins())
        out << lo << ',' << h.spec().bin_hi(lo) << ',' << s.flows << ',' << s.packets << ',' << s.octets << '\n';
}

namespace detail {

struct HistRow {
    std::uint64_t lo, hi;
    BinSums sums;
    std::size_t line;
};

inline BinSpec infer_spec(const std::vector<HistRow>& rows, Feature feature) {
    std::optional<int> log_min;
    std::uint64_t exact_max = 0;
    for (const auto& r : rows) {
        if (r.hi - r.lo > 1) {
            if (!std::has_single_bit(r.lo)) throw ParseError(r.line, "wide bin does not start at a power of two");
            int k = std::countr_zero(r.lo);
            log_min = log_min ? std::min(*log_min, k) : k;
        } else {
            exact_max = std::max(exact_max, r.lo);
        }
    }
    if (log_min) return BinSpec{*log_min};
    auto dflt = BinSpec::for_feature(feature);
    if (exact_max < dflt.exact_limit()) return dflt;
    return BinSpec{std::min(63, static_cast<int>(std::bit_width(exact_max)))};
}

} // namespace detail

/// Reads a histogram CSV. The feature and bin spec come from the leading
/// `# flowlab histogram` comment when present; otherwise the feature must be
/// supplied and the spec is inferred from the bin widths.
inline Histogram read_hist_csv(std::istream& in, std::optional<Feature> feature = std::nullopt) {
    std::optional<BinSpec> spec;
    std::vector<detail::HistRow> rows;
    bool header_seen = false;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto view = detail::trim(line);
        if (view.empty()) continue;
        if (view.front() == '#') {
            for (auto tok : detail::split(view.substr(1), ' ')) {
                if (tok.starts_with("feature=")) {
                    auto f = parse_feature(tok.substr(8));
                    if (!f) throw ParseError(line_no, "unknown feature");
                    feature = f;
                } else if (tok.starts_with("exact_exp=")) {
                    auto b = detail::parse_uint<std::uint32_t>(tok.substr(10));
                    if (!b || *b > 63) throw ParseError(line_no, "invalid exact_exp");
                    spec = BinSpec{static_cast<int>(*b)};
                }
            }
            continue;
        }
        if (!header_seen) {
            if (view != hist_csv_header) throw ParseError(line_no, "missing or unexpected histogram header");
            header_seen = true;
            continue;
        }
        auto f = detail::split(view);
        if (f.size() != 5) throw ParseError(line_no, "expected 5 fields, got " + std::to_string(f.size()));
        detail::HistRow r{};
        r.line = line_no;
        auto lo = detail::parse_uint<std::uint64_t>(f[0]);
        auto hi = detail::parse_uint<std::uint64_t>(f[1]);
        auto fl = detail::parse_uint<std::uint64_t>(f[2]);
        auto pk = detail::parse_uint<std::uint64_t>(f[3]);
        auto oc = detail::parse_uint<std::uint64_t>(f[4]);
        if (!lo || !hi || !fl || !pk || !oc) throw ParseError(line_no, "non-integer field");
        if (*lo < 1 || *hi <= *lo) throw ParseError(line_no, "invalid bin bounds");
        if (!rows.empty() && *lo <= rows.back().lo) throw ParseError(line_no, "bins not in ascending order");
        r.lo = *lo;
        r.hi = *hi;
        r.sums = BinSums{*fl, *pk, *oc};
        rows.push_back(r);
    }
    if (!header_seen) throw ParseError(line_no, "missing histogram header");
    if (!feature) throw FormatError("histogram feature unknown; pass it explicitly");
    if (!spec) spec = detail::infer_spec(rows, *feature);

    Histogram h(*feature, *spec);
    for (const auto& r : rows) {
        if (!spec->is_bin_start(r.lo) || spec->bin_hi(r.lo) != r.hi)
            throw ParseError(r.line, "bin [" + std::to_string(r.lo) + "," + std::to_string(r.hi) +
                                         ") does not match exact_exp=" + std::to_string(spec->exact_limit_exp));
        h.add_bin(r.lo, r.sums);
    }
    return h;
}

} // namespace flowlab

#endif // FLOWLAB_HISTOGRAM_HPP
