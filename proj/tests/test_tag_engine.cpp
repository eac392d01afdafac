#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "triplet/tag_engine.hpp"

using namespace triplet;

namespace {

std::vector<TimeTag> make_stream(std::initializer_list<std::pair<int, std::uint64_t>> tags) {
    std::vector<TimeTag> out;
    for (const auto& [ch, tick] : tags) out.push_back({tick, static_cast<std::uint8_t>(ch)});
    std::sort(out.begin(), out.end(), tag_less);
    return out;
}

std::vector<TimeTag> poisson_stream(double rate_hz, double duration_s, int channel,
                                    std::uint64_t seed) {
    RandomStream rng(seed, "test.poisson", static_cast<std::uint64_t>(channel));
    std::vector<TimeTag> out;
    const double rate_per_ps = rate_hz * 1e-12;
    const double end_ps = duration_s * 1e12;
    double t = 0.0;
    while (true) {
        t += rng.exponential(rate_per_ps);
        if (t >= end_ps) break;
        out.push_back({static_cast<std::uint64_t>(t) / kTickPs, static_cast<std::uint8_t>(channel)});
    }
    return out;
}

std::vector<TimeTag> merge_streams(std::vector<std::vector<TimeTag>> streams) {
    std::vector<TimeTag> out;
    for (auto& s : streams) out.insert(out.end(), s.begin(), s.end());
    std::sort(out.begin(), out.end(), tag_less);
    return out;
}

/// Synthetic triple-coincidence stream with Gaussian per-channel jitters;
/// events are microseconds apart so every triple is isolated.
std::vector<TimeTag> synthetic_triples(std::size_t n_events, double j1_ns, double j2_ns,
                                       double j3_ns, std::uint64_t seed) {
    RandomStream rng(seed, "test.synth");
    std::vector<TimeTag> out;
    double base_ns = 1000.0;
    for (std::size_t k = 0; k < n_events; ++k) {
        const double t1 = base_ns + 20.0 + rng.normal() * j1_ns;
        const double t2 = base_ns + 21.0 + rng.normal() * j2_ns;
        const double t3 = base_ns + 22.5 + rng.normal() * j3_ns;
        out.push_back({static_cast<std::uint64_t>(t1 / kTickNs), 1});
        out.push_back({static_cast<std::uint64_t>(t2 / kTickNs), 2});
        out.push_back({static_cast<std::uint64_t>(t3 / kTickNs), 3});
        base_ns += 1000.0;
    }
    std::sort(out.begin(), out.end(), tag_less);
    return out;
}

}  // namespace

TEST_CASE("a mutually close tag per channel forms one triple") {
    const auto stream = make_stream({{1, 1000}, {2, 1002}, {3, 1003}});
    const auto triples = find_triples(stream, 32);
    REQUIRE(triples.size() == 1);
    CHECK(triples[0] == TripletEvent{1000, 1002, 1003});

    CHECK(find_triples(stream, 1).empty());
}

TEST_CASE("the window is enforced mutually, not pairwise-chained") {
    // 1-2 and 2-3 are within 10, but 1-3 is not
    const auto stream = make_stream({{1, 1000}, {2, 1008}, {3, 1014}});
    CHECK(find_triples(stream, 10).empty());
    CHECK(find_triples(stream, 14).size() == 1);
}

TEST_CASE("each tag is consumed at most once") {
    const auto stream = make_stream({{1, 1000}, {2, 1001}, {3, 1002}, {3, 1003}});
    const auto triples = find_triples(stream, 32);
    REQUIRE(triples.size() == 1);
    CHECK(triples[0].t3 == 1002);  // earliest completion wins, second ch3 tag stays unmatched
}

TEST_CASE("completion ties pick the smallest |t2-t1|") {
    const auto stream = make_stream({{2, 1000}, {2, 1004}, {3, 1001}, {1, 1005}});
    const auto triples = find_triples(stream, 32);
    REQUIRE(triples.size() == 1);
    CHECK(triples[0] == TripletEvent{1005, 1004, 1001});
}

TEST_CASE("unsorted streams are rejected, not silently reordered") {
    std::vector<TimeTag> stream{{1000, 1}, {900, 2}};
    CHECK_THROWS_AS(find_triples(stream, 32), std::invalid_argument);
    CHECK_THROWS_AS(find_doubles(stream, 1, 2, 32), std::invalid_argument);
}

TEST_CASE("stream order independence under tick-only sorting") {
    auto stream = merge_streams({poisson_stream(2e5, 1.0, 1, 1), poisson_stream(2e5, 1.0, 2, 2),
                                 poisson_stream(2e5, 1.0, 3, 3)});
    const auto reference = find_triples(stream, 640);
    REQUIRE(reference.size() > 50);

    std::mt19937 shuffler(99);
    std::shuffle(stream.begin(), stream.end(), shuffler);
    std::stable_sort(stream.begin(), stream.end(),
                     [](const TimeTag& a, const TimeTag& b) { return a.tick < b.tick; });
    CHECK(find_triples(stream, 640) == reference);
}

TEST_CASE("chunked processing equals the sequential pass") {
    auto stream = merge_streams({poisson_stream(2e5, 2.0, 1, 11), poisson_stream(2e5, 2.0, 2, 12),
                                 poisson_stream(2e5, 2.0, 3, 13)});
    const auto seq = find_triples(stream, 640);
    REQUIRE(seq.size() > 100);
    for (unsigned chunks : {2u, 3u, 8u}) {
        const auto par = find_triples_chunked(stream, 640, chunks);
        CHECK(par == seq);
    }
}

TEST_CASE("accidental triple rate between independent streams follows 3 r^3 w^2 T") {
    const double rate = 1e5, duration = 10.0;
    const std::uint64_t window = 320;
    auto stream = merge_streams({poisson_stream(rate, duration, 1, 21),
                                 poisson_stream(rate, duration, 2, 22),
                                 poisson_stream(rate, duration, 3, 23)});
    const auto triples = find_triples(stream, window);
    const double w_s = static_cast<double>(window) * kTickNs * 1e-9;
    const double expected = 3.0 * rate * rate * rate * w_s * w_s * duration;
    const double sigma = std::sqrt(expected);
    CHECK(std::abs(static_cast<double>(triples.size()) - expected) < 3.0 * sigma);
}

TEST_CASE("dark-count streams at the reference rates give no accidental triples in an hour") {
    // rate product predicts 3 r1 r2 r3 w^2 T ~ 3e-7 accidentals
    auto stream = merge_streams({poisson_stream(200, 3600.0, 1, 81),
                                 poisson_stream(100, 3600.0, 2, 82),
                                 poisson_stream(50, 3600.0, 3, 83)});
    CHECK(find_triples(stream, 32).empty());
}

TEST_CASE("chunked processing falls back to one chunk when no quiet gap exists") {
    // every consecutive gap is within the window, so no split point exists
    std::vector<TimeTag> dense;
    for (std::uint64_t k = 0; k < 9000; ++k)
        dense.push_back({1000 + 2 * k, static_cast<std::uint8_t>(1 + k % 3)});
    const auto seq = find_triples(dense, 8);
    CHECK(find_triples_chunked(dense, 8, 4) == seq);
    CHECK(!seq.empty());
}

TEST_CASE("accidental double rate between independent streams follows 2 r^2 w T") {
    const double rate = 1e4, duration = 100.0;
    const std::uint64_t window = 32;
    auto stream = merge_streams({poisson_stream(rate, duration, 1, 31),
                                 poisson_stream(rate, duration, 2, 32)});
    const auto doubles = find_doubles(stream, 1, 2, window);
    const double w_s = static_cast<double>(window) * kTickNs * 1e-9;
    const double expected = 2.0 * rate * rate * w_s * duration;
    CHECK(std::abs(static_cast<double>(doubles.size()) - expected) < 3.0 * std::sqrt(expected));
}

TEST_CASE("disjoint-time streams give zero doubles") {
    auto a = poisson_stream(1000, 1.0, 1, 41);
    auto b = poisson_stream(1000, 1.0, 2, 42);
    for (auto& t : b) t.tick += 20'000'000'000ull;  // shift well past stream a
    const auto stream = merge_streams({a, b});
    CHECK(find_doubles(stream, 1, 2, 32).empty());
}

TEST_CASE("histogram counts are conserved through marginalization") {
    const auto stream = synthetic_triples(5000, 0.3, 0.15, 0.05, 5);
    const auto triples = find_triples(stream, 32);
    REQUIRE(triples.size() > 4900);  // a few tails fall outside the window

    const Histogram2D h = histogram2d(triples);
    CHECK(h.total() == static_cast<std::int64_t>(triples.size()));
    const Marginals m = marginals(h);
    CHECK(m.d21.total() == h.total());
    CHECK(m.d32.total() == h.total());
    CHECK(m.d31.total() == h.total());
    // the diagonal marginal really is t3 - t1
    std::int64_t direct = 0;
    for (const auto& t : triples) direct += t.d31();
    double mean31 = 0.0;
    for (std::int64_t b = m.d31.lo; b <= m.d31.hi(); ++b)
        mean31 += static_cast<double>(b) * static_cast<double>(m.d31.count_at(b));
    CHECK(mean31 == doctest::Approx(static_cast<double>(direct)));
}

TEST_CASE("single triple occupies one bin") {
    const Histogram2D h = histogram2d(std::vector<TripletEvent>{{1000, 1006, 1016}});
    CHECK(h.total() == 1);
    CHECK(h.count_at(6, 10) == 1);
    const Marginals m = marginals(h);
    CHECK(m.d21.total() == 1);
    CHECK(m.d31.count_at(16) == 1);
}

TEST_CASE("empty input gives empty histograms") {
    const Histogram2D h = histogram2d(std::vector<TripletEvent>{});
    CHECK(h.total() == 0);
    const Marginals m = marginals(h);
    CHECK(m.d21.total() == 0);
}

TEST_CASE("marginal widths match the jitter convolution oracle") {
    const double j1 = 0.30, j2 = 0.15, j3 = 0.05;
    const auto stream = synthetic_triples(10000, j1, j2, j3, 77);
    const auto triples = find_triples(stream, 32);
    REQUIRE(triples.size() > 9900);
    const TimingStats s = timing_stats(histogram2d(triples));

    const double q = kTickNs * kTickNs / 6.0;
    CHECK(s.dt21.std_ns == doctest::Approx(std::sqrt(j1 * j1 + j2 * j2 + q)).epsilon(0.03));
    CHECK(s.dt32.std_ns == doctest::Approx(std::sqrt(j2 * j2 + j3 * j3 + q)).epsilon(0.03));
    CHECK(s.dt31.std_ns == doctest::Approx(std::sqrt(j1 * j1 + j3 * j3 + q)).epsilon(0.03));
    CHECK(s.dt21.std_err_ns > 0.0);
    CHECK(s.dt21.std_err_ns < 0.02);
}

TEST_CASE("a delta peak is quantization limited") {
    std::vector<TripletEvent> triples(100, TripletEvent{1000, 1006, 1016});
    const TimingStats s = timing_stats(histogram2d(triples));
    const double bound = kTickNs / std::sqrt(12.0) + kTickNs;
    CHECK(s.dt21.std_ns <= bound);
    CHECK(s.dt32.std_ns <= bound);
}

TEST_CASE("flat background is subtracted from the peak statistics") {
    RandomStream rng(123, "test.bg");
    std::vector<TripletEvent> clean;
    for (int k = 0; k < 20000; ++k) {
        const auto d21 = static_cast<std::int64_t>(std::llround(rng.normal() * 2.0)) + 6;
        const auto d32 = static_cast<std::int64_t>(std::llround(rng.normal() * 1.5)) + 10;
        clean.push_back({1000, static_cast<std::uint64_t>(1000 + d21),
                         static_cast<std::uint64_t>(1000 + d21 + d32)});
    }
    std::vector<TripletEvent> with_bg = clean;
    for (int k = 0; k < 4000; ++k) {
        const auto d21 = static_cast<std::int64_t>(rng.uniform_below(65)) - 32;
        const auto d32 = static_cast<std::int64_t>(rng.uniform_below(65)) - 32;
        with_bg.push_back({1000, static_cast<std::uint64_t>(1000 + d21),
                           static_cast<std::uint64_t>(1000 + d21 + d32)});
    }
    const TimingStats a = timing_stats(histogram2d(clean));
    const TimingStats b = timing_stats(histogram2d(with_bg));
    CHECK(b.dt21.std_ns == doctest::Approx(a.dt21.std_ns).epsilon(0.05));
    CHECK(b.dt32.std_ns == doctest::Approx(a.dt32.std_ns).epsilon(0.05));
    CHECK(b.dt21.background_per_bin > 10.0);
}

TEST_CASE("insufficient statistics and missing peaks raise errors") {
    std::vector<TripletEvent> few(10, TripletEvent{1000, 1006, 1016});
    CHECK_THROWS_AS(timing_stats(histogram2d(few)), std::runtime_error);

    // pure flat background, no peak
    RandomStream rng(9, "test.flat");
    std::vector<TripletEvent> flat;
    for (int k = 0; k < 5000; ++k) {
        const auto d21 = static_cast<std::int64_t>(rng.uniform_below(65)) - 32;
        const auto d32 = static_cast<std::int64_t>(rng.uniform_below(65)) - 32;
        flat.push_back({1000, static_cast<std::uint64_t>(1000 + d21),
                        static_cast<std::uint64_t>(1000 + d21 + d32)});
    }
    CHECK_THROWS_AS(timing_stats(histogram2d(flat)), std::runtime_error);
}

TEST_CASE("doubles from a triple stream with heavy singles background") {
    // signal pairs at a fixed 1 ns offset under a large uncorrelated background
    RandomStream rng(55, "test.doubles");
    std::vector<TimeTag> stream;
    double base_ns = 1000.0;
    for (int k = 0; k < 2000; ++k) {
        const double t1 = base_ns + 20.0 + rng.normal() * 0.30;
        const double t2 = base_ns + 21.0 + rng.normal() * 0.15;
        stream.push_back({static_cast<std::uint64_t>(t1 / kTickNs), 1});
        stream.push_back({static_cast<std::uint64_t>(t2 / kTickNs), 2});
        base_ns += 5000.0;
    }
    // uncorrelated singles on both channels beat against each other and form
    // the flat accidental floor
    const double duration_s = base_ns * 1e-9;
    for (auto& extra : poisson_stream(1e7, duration_s, 1, 66)) stream.push_back(extra);
    for (auto& extra : poisson_stream(4e5, duration_s, 2, 67)) stream.push_back(extra);
    std::sort(stream.begin(), stream.end(), tag_less);

    const auto pairs = find_doubles(stream, 1, 2, 32);
    const Histogram1D h = pair_histogram(pairs);
    const PeakStats s = peak_stats(h);
    CHECK(s.std_ns == doctest::Approx(std::sqrt(0.09 + 0.0225 + kTickNs * kTickNs / 6.0))
                          .epsilon(0.15));
    CHECK(s.background_per_bin > 1.0);
}
