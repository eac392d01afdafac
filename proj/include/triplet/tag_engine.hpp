#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <future>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "triplet/rng.hpp"
#include "triplet/time_tags.hpp"

namespace triplet {

/// One three-fold coincidence: the tick of the tag on each channel.
struct TripletEvent {
    std::uint64_t t1 = 0, t2 = 0, t3 = 0;
    std::int64_t d21() const { return static_cast<std::int64_t>(t2) - static_cast<std::int64_t>(t1); }
    std::int64_t d32() const { return static_cast<std::int64_t>(t3) - static_cast<std::int64_t>(t2); }
    std::int64_t d31() const { return static_cast<std::int64_t>(t3) - static_cast<std::int64_t>(t1); }
    friend bool operator==(const TripletEvent&, const TripletEvent&) = default;
};

struct PairEvent {
    std::uint64_t ta = 0, tb = 0;
    std::int64_t diff() const { return static_cast<std::int64_t>(tb) - static_cast<std::int64_t>(ta); }
    friend bool operator==(const PairEvent&, const PairEvent&) = default;
};

inline constexpr std::uint64_t kDefaultWindowTicks = 32;  // ~5 ns

namespace detail {

inline std::int64_t absdiff(std::uint64_t a, std::uint64_t b) {
    return a > b ? static_cast<std::int64_t>(a - b) : static_cast<std::int64_t>(b - a);
}

struct TagBuffer {
    std::deque<std::uint64_t> ticks;

    void prune(std::uint64_t now, std::uint64_t window) {
        while (!ticks.empty() && now - ticks.front() > window) ticks.pop_front();
    }
};

}  // namespace detail

/// Single forward pass, greedy earliest-completion matching: the first moment
/// one unconsumed tag per channel lies mutually within the window, a triple is
/// emitted and all three tags are consumed. When several partner pairs could
/// complete on the same incoming tag, the pair with the smallest |t2-t1| wins
/// (then smallest |t3-t2|, then the oldest tags). Equal-tick runs are handled
/// in channel order, so any (tick, channel) sort of the same multiset of tags
/// produces identical triples.
inline std::vector<TripletEvent> find_triples(std::span<const TimeTag> stream,
                                              std::uint64_t window_ticks = kDefaultWindowTicks) {
    if (window_ticks == 0) throw std::invalid_argument("find_triples: window must be > 0");

    std::array<detail::TagBuffer, 3> buf;
    std::vector<TripletEvent> out;

    std::vector<TimeTag> run;  // simultaneous-tick run, processed channel-ascending
    std::size_t i = 0;
    const std::size_t n = stream.size();
    std::uint64_t prev_tick = 0;

    auto process_tag = [&](const TimeTag& tag) {
        const int c = tag.channel - 1;
        for (auto& b : buf) b.prune(tag.tick, window_ticks);

        const int a = (c + 1) % 3;
        const int b2 = (c + 2) % 3;
        bool found = false;
        std::uint64_t best_a = 0, best_b = 0;
        std::int64_t best_d21 = 0, best_d32 = 0;
        std::uint64_t trial[3];
        for (std::uint64_t ta : buf[a].ticks) {
            for (std::uint64_t tb : buf[b2].ticks) {
                if (detail::absdiff(ta, tb) > static_cast<std::int64_t>(window_ticks)) continue;
                trial[c] = tag.tick;
                trial[a] = ta;
                trial[b2] = tb;
                const std::int64_t d21 = detail::absdiff(trial[1], trial[0]);
                const std::int64_t d32 = detail::absdiff(trial[2], trial[1]);
                const bool better =
                    !found || d21 < best_d21 || (d21 == best_d21 && d32 < best_d32) ||
                    (d21 == best_d21 && d32 == best_d32 && (ta < best_a || (ta == best_a && tb < best_b)));
                if (better) {
                    found = true;
                    best_a = ta;
                    best_b = tb;
                    best_d21 = d21;
                    best_d32 = d32;
                }
            }
        }
        if (found) {
            std::uint64_t t[3];
            t[c] = tag.tick;
            t[a] = best_a;
            t[b2] = best_b;
            auto erase_one = [](detail::TagBuffer& b, std::uint64_t v) {
                auto it = std::find(b.ticks.begin(), b.ticks.end(), v);
                b.ticks.erase(it);
            };
            erase_one(buf[a], best_a);
            erase_one(buf[b2], best_b);
            out.push_back({t[0], t[1], t[2]});
        } else {
            buf[c].ticks.push_back(tag.tick);
        }
    };

    while (i < n) {
        const TimeTag& t = stream[i];
        if (t.channel < 1 || t.channel > 3)
            throw std::invalid_argument("find_triples: invalid channel " +
                                        std::to_string(int(t.channel)));
        if (i > 0 && t.tick < prev_tick)
            throw std::invalid_argument("find_triples: stream is not tick-sorted at index " +
                                        std::to_string(i));
        prev_tick = t.tick;

        // gather the (rare) run of equal ticks and order it by channel
        std::size_t j = i + 1;
        while (j < n && stream[j].tick == t.tick) ++j;
        if (j == i + 1) {
            process_tag(t);
        } else {
            run.assign(stream.begin() + i, stream.begin() + j);
            std::sort(run.begin(), run.end(), tag_less);
            for (const TimeTag& r : run) process_tag(r);
        }
        i = j;
    }
    return out;
}

/// Chunked variant: the stream is split at quiet gaps wider than the window
/// (where the matcher state is empty by construction), chunks are processed
/// concurrently, and the concatenated result is identical to the sequential
/// pass.
inline std::vector<TripletEvent> find_triples_chunked(std::span<const TimeTag> stream,
                                                      std::uint64_t window_ticks,
                                                      unsigned n_chunks) {
    if (n_chunks <= 1 || stream.size() < 4096) return find_triples(stream, window_ticks);
    if (!is_tick_sorted(stream))
        throw std::invalid_argument("find_triples_chunked: stream is not tick-sorted");

    std::vector<std::size_t> cuts{0};
    const std::size_t target = stream.size() / n_chunks;
    for (unsigned k = 1; k < n_chunks; ++k) {
        std::size_t pos = std::max(cuts.back() + 1, static_cast<std::size_t>(k) * target);
        // slide forward to the next quiet gap
        while (pos < stream.size() &&
               stream[pos].tick - stream[pos - 1].tick <= window_ticks)
            ++pos;
        if (pos >= stream.size()) break;
        cuts.push_back(pos);
    }
    cuts.push_back(stream.size());

    std::vector<std::future<std::vector<TripletEvent>>> parts;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        auto sub = stream.subspan(cuts[k], cuts[k + 1] - cuts[k]);
        parts.push_back(std::async(std::launch::async,
                                   [sub, window_ticks] { return find_triples(sub, window_ticks); }));
    }
    std::vector<TripletEvent> out;
    for (auto& f : parts) {
        auto part = f.get();
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

/// Two-channel greedy matcher with the same semantics, for the raw-doubles
/// analysis; channel_a is the reference side of the difference tb - ta.
inline std::vector<PairEvent> find_doubles(std::span<const TimeTag> stream, int channel_a,
                                           int channel_b,
                                           std::uint64_t window_ticks = kDefaultWindowTicks) {
    if (window_ticks == 0) throw std::invalid_argument("find_doubles: window must be > 0");
    if (channel_a < 1 || channel_a > 3 || channel_b < 1 || channel_b > 3 || channel_a == channel_b)
        throw std::invalid_argument("find_doubles: channels must be distinct and in 1..3");

    detail::TagBuffer buf_a, buf_b;
    std::vector<PairEvent> out;
    std::uint64_t prev_tick = 0;

    std::vector<TimeTag> run;
    std::size_t i = 0;
    const std::size_t n = stream.size();

    auto process_tag = [&](const TimeTag& tag) {
        if (tag.channel != channel_a && tag.channel != channel_b) return;
        const bool is_a = tag.channel == channel_a;
        detail::TagBuffer& mine = is_a ? buf_a : buf_b;
        detail::TagBuffer& other = is_a ? buf_b : buf_a;
        mine.prune(tag.tick, window_ticks);
        other.prune(tag.tick, window_ticks);

        bool found = false;
        std::uint64_t best = 0;
        std::int64_t best_d = 0;
        for (std::uint64_t t : other.ticks) {
            const std::int64_t d = detail::absdiff(t, tag.tick);
            if (!found || d < best_d || (d == best_d && t < best)) {
                found = true;
                best = t;
                best_d = d;
            }
        }
        if (found) {
            auto it = std::find(other.ticks.begin(), other.ticks.end(), best);
            other.ticks.erase(it);
            out.push_back(is_a ? PairEvent{tag.tick, best} : PairEvent{best, tag.tick});
        } else {
            mine.ticks.push_back(tag.tick);
        }
    };

    while (i < n) {
        const TimeTag& t = stream[i];
        if (i > 0 && t.tick < prev_tick)
            throw std::invalid_argument("find_doubles: stream is not tick-sorted at index " +
                                        std::to_string(i));
        prev_tick = t.tick;
        std::size_t j = i + 1;
        while (j < n && stream[j].tick == t.tick) ++j;
        if (j == i + 1) {
            process_tag(t);
        } else {
            run.assign(stream.begin() + i, stream.begin() + j);
            std::sort(run.begin(), run.end(), tag_less);
            for (const TimeTag& r : run) process_tag(r);
        }
        i = j;
    }
    return out;
}

/// Dense 1D histogram over integer tick differences.
struct Histogram1D {
    std::int64_t lo = 0;  // first bin value
    std::vector<std::int64_t> counts;

    std::int64_t hi() const { return lo + static_cast<std::int64_t>(counts.size()) - 1; }
    std::int64_t total() const {
        std::int64_t s = 0;
        for (auto c : counts) s += c;
        return s;
    }
    std::int64_t count_at(std::int64_t bin) const {
        if (bin < lo || bin > hi()) return 0;
        return counts[static_cast<std::size_t>(bin - lo)];
    }
    void add(std::int64_t bin) {
        counts[static_cast<std::size_t>(bin - lo)] += 1;
    }
};

/// 2D histogram of (t2-t1, t3-t2) at one tick per bin. Bounds grow to cover
/// the data, so the total count always equals the number of triples.
struct Histogram2D {
    std::int64_t lo1 = 0, lo2 = 0;
    std::int64_t n1 = 0, n2 = 0;
    std::vector<std::int64_t> counts;

    std::int64_t hi1() const { return lo1 + n1 - 1; }
    std::int64_t hi2() const { return lo2 + n2 - 1; }
    std::int64_t count_at(std::int64_t b1, std::int64_t b2) const {
        if (b1 < lo1 || b1 > hi1() || b2 < lo2 || b2 > hi2()) return 0;
        return counts[static_cast<std::size_t>((b1 - lo1) * n2 + (b2 - lo2))];
    }
    std::int64_t total() const {
        std::int64_t s = 0;
        for (auto c : counts) s += c;
        return s;
    }
};

/// Bin triples into the 2D arrival-time histogram. min_halfwidth_ticks sets
/// the smallest extent on both axes; the bounds expand to the data.
inline Histogram2D histogram2d(std::span<const TripletEvent> triples,
                               std::int64_t min_halfwidth_ticks = kDefaultWindowTicks) {
    std::int64_t h1 = min_halfwidth_ticks, h2 = min_halfwidth_ticks;
    for (const auto& t : triples) {
        h1 = std::max(h1, std::abs(t.d21()));
        h2 = std::max(h2, std::abs(t.d32()));
    }
    Histogram2D h;
    h.lo1 = -h1;
    h.lo2 = -h2;
    h.n1 = 2 * h1 + 1;
    h.n2 = 2 * h2 + 1;
    h.counts.assign(static_cast<std::size_t>(h.n1 * h.n2), 0);
    for (const auto& t : triples)
        h.counts[static_cast<std::size_t>((t.d21() - h.lo1) * h.n2 + (t.d32() - h.lo2))] += 1;
    return h;
}

struct Marginals {
    Histogram1D d21, d32, d31;
};

/// Integrate out one axis at a time; the d31 marginal follows the diagonal
/// t3-t1 = (t2-t1) + (t3-t2). Counts are conserved by construction.
inline Marginals marginals(const Histogram2D& h) {
    Marginals m;
    m.d21.lo = h.lo1;
    m.d21.counts.assign(static_cast<std::size_t>(h.n1), 0);
    m.d32.lo = h.lo2;
    m.d32.counts.assign(static_cast<std::size_t>(h.n2), 0);
    m.d31.lo = h.lo1 + h.lo2;
    m.d31.counts.assign(static_cast<std::size_t>(h.n1 + h.n2 - 1), 0);
    for (std::int64_t b1 = h.lo1; b1 <= h.hi1(); ++b1)
        for (std::int64_t b2 = h.lo2; b2 <= h.hi2(); ++b2) {
            const std::int64_t c = h.count_at(b1, b2);
            if (c == 0) continue;
            m.d21.counts[static_cast<std::size_t>(b1 - m.d21.lo)] += c;
            m.d32.counts[static_cast<std::size_t>(b2 - m.d32.lo)] += c;
            m.d31.counts[static_cast<std::size_t>(b1 + b2 - m.d31.lo)] += c;
        }
    return m;
}

struct PeakStats {
    double mean_ns = 0.0;
    double std_ns = 0.0;
    double std_err_ns = 0.0;    // bootstrap
    double background_per_bin = 0.0;
    std::int64_t counts_used = 0;
};

struct PeakOptions {
    double sideband_reach_sigmas = 10.0;  // background sidebands start this far out
    int bootstrap_resamples = 200;
    std::uint64_t bootstrap_seed = 0x7261774261636bull;
};

namespace detail {

struct PeakEstimate {
    double mean_ticks, std_ticks, background;
    std::int64_t net_counts;
};

/// Background-subtracted peak moments: flat background estimated from the
/// sidebands outside +-reach sigma_initial of the peak (reach defaults to 10),
/// sigma_initial taken from the FWHM around the maximum bin.
inline PeakEstimate peak_moments(const std::vector<std::int64_t>& counts, std::int64_t lo,
                                 double reach_sigmas = 10.0) {
    const std::int64_t nbins = static_cast<std::int64_t>(counts.size());

    std::vector<std::int64_t> sorted = counts;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const double bg_guess = static_cast<double>(sorted[sorted.size() / 2]);

    std::int64_t mode = 0;
    for (std::int64_t b = 0; b < nbins; ++b)
        if (counts[b] > counts[mode]) mode = b;
    const double peak = static_cast<double>(counts[mode]);
    if (peak < bg_guess + 5.0 * std::sqrt(std::max(bg_guess, 1.0)))
        throw std::runtime_error("timing_stats: no peak above background");

    const double half = bg_guess + 0.5 * (peak - bg_guess);
    std::int64_t left = mode, right = mode;
    while (left > 0 && static_cast<double>(counts[left - 1]) >= half) --left;
    while (right + 1 < nbins && static_cast<double>(counts[right + 1]) >= half) ++right;
    const double sigma_init = std::max((right - left + 1) / 2.3548, 0.5);

    const std::int64_t reach = static_cast<std::int64_t>(std::ceil(reach_sigmas * sigma_init));
    const std::int64_t region_lo = std::max<std::int64_t>(0, mode - reach);
    const std::int64_t region_hi = std::min<std::int64_t>(nbins - 1, mode + reach);

    double bg_sum = 0.0;
    std::int64_t bg_bins = 0;
    for (std::int64_t b = 0; b < nbins; ++b) {
        if (b >= region_lo && b <= region_hi) continue;
        bg_sum += static_cast<double>(counts[b]);
        ++bg_bins;
    }
    const double bg = bg_bins > 0 ? bg_sum / static_cast<double>(bg_bins) : 0.0;

    // background-subtracted moments, iterated with the window clipped to
    // +-5 sigma of the running estimate so noisy far wings do not swamp the
    // second moment (the clip bias of a Gaussian at 5 sigma is negligible)
    std::int64_t win_lo = region_lo, win_hi = region_hi;
    double mean = 0.0, var = 0.0, w_sum = 0.0;
    for (int pass = 0; pass < 3; ++pass) {
        w_sum = 0.0;
        mean = 0.0;
        for (std::int64_t b = win_lo; b <= win_hi; ++b) {
            const double w = static_cast<double>(counts[b]) - bg;
            w_sum += w;
            mean += w * static_cast<double>(b + lo);
        }
        if (w_sum <= 0.0) throw std::runtime_error("timing_stats: no net counts above background");
        mean /= w_sum;
        var = 0.0;
        for (std::int64_t b = win_lo; b <= win_hi; ++b) {
            const double w = static_cast<double>(counts[b]) - bg;
            const double d = static_cast<double>(b + lo) - mean;
            var += w * d * d;
        }
        var = std::max(var / w_sum, 0.0);
        const double reach5 = std::max(5.0 * std::sqrt(var), 2.0);
        win_lo = std::max(region_lo, static_cast<std::int64_t>(std::floor(mean - lo - reach5)));
        win_hi = std::min(region_hi, static_cast<std::int64_t>(std::ceil(mean - lo + reach5)));
    }

    return {mean, std::sqrt(var), bg, static_cast<std::int64_t>(std::llround(w_sum))};
}

}  // namespace detail

/// Peak statistics of one marginal in ns, with a 200-resample Poissonized
/// bootstrap for the uncertainty of the width. Requires at least 30 counts.
inline PeakStats peak_stats(const Histogram1D& h, const PeakOptions& opts = {}) {
    const std::int64_t total = h.total();
    if (total < 30)
        throw std::runtime_error("timing_stats: insufficient statistics (" +
                                 std::to_string(total) + " counts, need >= 30)");

    const auto est = detail::peak_moments(h.counts, h.lo, opts.sideband_reach_sigmas);

    RandomStream rng(opts.bootstrap_seed, "bootstrap");
    std::vector<std::int64_t> resampled(h.counts.size());
    std::vector<double> widths;
    widths.reserve(static_cast<std::size_t>(opts.bootstrap_resamples));
    for (int r = 0; r < opts.bootstrap_resamples; ++r) {
        for (std::size_t b = 0; b < h.counts.size(); ++b)
            resampled[b] = static_cast<std::int64_t>(rng.poisson(static_cast<double>(h.counts[b])));
        try {
            widths.push_back(
                detail::peak_moments(resampled, h.lo, opts.sideband_reach_sigmas).std_ticks);
        } catch (const std::runtime_error&) {
            // a resample can lose the peak at very low counts; skip it
        }
    }
    double err_ticks = 0.0;
    if (widths.size() >= 2) {
        double m = 0.0;
        for (double w : widths) m += w;
        m /= static_cast<double>(widths.size());
        double v = 0.0;
        for (double w : widths) v += (w - m) * (w - m);
        err_ticks = std::sqrt(v / static_cast<double>(widths.size() - 1));
    }

    PeakStats out;
    out.mean_ns = est.mean_ticks * kTickNs;
    out.std_ns = est.std_ticks * kTickNs;
    out.std_err_ns = err_ticks * kTickNs;
    out.background_per_bin = est.background;
    out.counts_used = est.net_counts;
    return out;
}

/// The three pairwise timing spreads of a triple-coincidence histogram.
struct TimingStats {
    PeakStats dt21, dt32, dt31;
    std::int64_t triple_count = 0;
};

inline TimingStats timing_stats(const Histogram2D& h, const PeakOptions& opts = {}) {
    const Marginals m = marginals(h);
    TimingStats s;
    s.dt21 = peak_stats(m.d21, opts);
    s.dt32 = peak_stats(m.d32, opts);
    s.dt31 = peak_stats(m.d31, opts);
    s.triple_count = h.total();
    return s;
}

/// Histogram of pair differences tb - ta.
inline Histogram1D pair_histogram(std::span<const PairEvent> pairs,
                                  std::int64_t min_halfwidth_ticks = kDefaultWindowTicks) {
    std::int64_t hw = min_halfwidth_ticks;
    for (const auto& p : pairs) hw = std::max(hw, std::abs(p.diff()));
    Histogram1D h;
    h.lo = -hw;
    h.counts.assign(static_cast<std::size_t>(2 * hw + 1), 0);
    for (const auto& p : pairs) h.add(p.diff());
    return h;
}

}  // namespace triplet
