// Copyright 2026 The morphgen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "doctest.h"

#include "morphgen/error.hpp"
#include "morphgen/metrics.hpp"
#include "morphgen/oracles/metrics_oracles.hpp"
#include "morphgen/rng.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

using namespace morphgen;
using namespace morphgen::metrics;

namespace {

// Scores on a coarse grid so random draws contain ties.
std::vector<double> grid_scores(Rng& rng, std::size_t n, int levels)
{
    std::vector<double> out(n);
    for (double& s : out) {
        s = static_cast<double>(static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(levels))) / 8.0 - 2.0;
    }
    return out;
}

std::size_t draw_size(Rng& rng, std::size_t max)
{
    return 1 + static_cast<std::size_t>(rng.next_u64() % max);
}

double monotone(double x)
{
    return std::exp(x / 4.0) + x * x * x;
}

std::vector<double> transformed(std::vector<double> v)
{
    for (double& x : v) {
        x = monotone(x);
    }
    return v;
}

std::vector<MorphTrial> make_trials(const std::vector<double>& a, const std::vector<double>& b)
{
    std::vector<MorphTrial> out;
    for (std::size_t i = 0; i < a.size(); ++i) {
        out.push_back({"m" + std::to_string(i), a[i], b[i]});
    }
    return out;
}

void check_against_oracle(const std::vector<double>& morph, const std::vector<double>& bona)
{
    const DetMetrics got = det_metrics(morph, bona);
    const oracle::BruteDet want =
        oracle::brute_det(morph, bona, std::vector<double>(kBpcerTargets.begin(), kBpcerTargets.end()));
    REQUIRE(got.curve.size() == want.thresholds.size());
    for (std::size_t i = 0; i < got.curve.size(); ++i) {
        CHECK(got.curve[i].threshold == want.thresholds[i]);
        CHECK(got.curve[i].apcer == want.apcer[i]);
        CHECK(got.curve[i].bpcer == want.bpcer[i]);
    }
    CHECK(got.eer == want.eer);
    for (std::size_t k = 0; k < kBpcerTargets.size(); ++k) {
        CHECK(got.apcer_at_bpcer[k] == want.apcer_at_bpcer[k]);
    }
}

} // namespace

TEST_CASE("far_threshold examples")
{
    std::vector<double> ten;
    for (int i = 1; i <= 10; ++i) {
        ten.push_back(i / 10.0);
    }
    CHECK(far_threshold(ten, 0.1) == 1.0);
    CHECK(far_threshold(ten, 0.2) == 0.9);
    CHECK(far_threshold(ten, 0.3) == 0.8);
    CHECK(far_threshold(ten, 1e-3) == 1.0);
    CHECK(far_threshold(ten, 0.95) == 0.1);

    const std::vector<double> flat(7, 0.42);
    for (double far : {1e-3, 0.1, 0.5, 0.999}) {
        CHECK(far_threshold(flat, far) == 0.42);
    }

    const double all = far_threshold(ten, 1.0);
    CHECK(all < 0.1);
    CHECK(all == std::nextafter(0.1, -1.0));
    CHECK(mmpmr(make_trials(ten, ten), all) == 1.0);

    CHECK_THROWS_AS(far_threshold({}, 0.1), InputError);
    CHECK_THROWS_AS(far_threshold(ten, 0.0), InputError);
    CHECK_THROWS_AS(far_threshold(ten, 1.5), InputError);
    CHECK_THROWS_AS(far_threshold(ten, std::nan("")), InputError);
    CHECK_THROWS_AS(far_threshold({0.1, std::numeric_limits<double>::infinity()}, 0.1), InputError);
}

TEST_CASE("far_threshold matches the candidate scan")
{
    Rng rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        const std::vector<double> s = grid_scores(rng, draw_size(rng, 100), 1 + trial % 30);
        for (double far : {1e-3, 0.01, 0.05, 0.1, 0.25, 0.3, 0.5, 0.7, 0.99}) {
            const double tau = far_threshold(s, far);
            CHECK(tau == oracle::brute_far_threshold(s, far));
            std::size_t above = 0;
            for (const double x : s) {
                above += x > tau ? 1 : 0;
            }
            CHECK(static_cast<double>(above) <= far * static_cast<double>(s.size()));
        }
    }
}

TEST_CASE("mmpmr")
{
    const std::vector<MorphTrial> high = {{"a", 0.9, 0.8}, {"b", 0.95, 0.85}};
    CHECK(mmpmr(high, 0.5) == 1.0);
    const std::vector<MorphTrial> one_low = {{"a", 0.9, 0.1}, {"b", 0.2, 0.99}, {"c", 0.3, 0.3}};
    CHECK(mmpmr(one_low, 0.5) == 0.0);

    const std::vector<MorphTrial> five = {
        {"p1", 0.9, 0.8}, {"p2", 0.7, 0.95}, {"p3", 0.6, 0.4}, {"p4", 0.85, 0.85}, {"p5", 0.5, 0.99}};
    // Minimum scores: 0.8, 0.7, 0.4, 0.85, 0.5.
    CHECK(mmpmr(five, 0.75) == 0.4);
    CHECK(mmpmr(five, 0.8) == 0.2);
    CHECK(mmpmr(five, 0.3) == 1.0);
    CHECK(mmpmr(five, 0.85) == 0.0);

    CHECK_THROWS_AS(mmpmr({}, 0.5), InputError);
    CHECK_THROWS_AS(mmpmr({{"x", std::nan(""), 0.1}}, 0.5), InputError);

    Rng rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = draw_size(rng, 50);
        const std::vector<double> a = grid_scores(rng, n, 20);
        const std::vector<double> b = grid_scores(rng, n, 20);
        const std::vector<MorphTrial> t = make_trials(a, b);
        double previous = 1.0;
        for (double tau = -2.5; tau < 1.0; tau += 0.0625) {
            const double rate = mmpmr(t, tau);
            CHECK(rate == oracle::brute_mmpmr(a, b, tau));
            CHECK(rate <= previous);
            previous = rate;
        }
    }
}

TEST_CASE("det_metrics hand-built fixtures")
{
    SUBCASE("perfect separation")
    {
        const DetMetrics d = det_metrics({0.0, 1.0}, {2.0, 3.0});
        CHECK(d.eer == 0.0);
        for (const double a : d.apcer_at_bpcer) {
            CHECK(a == 0.0);
        }
    }
    SUBCASE("identical distributions")
    {
        const std::vector<double> s = {1.0, 2.0, 3.0};
        CHECK(det_metrics(s, s).eer == 0.5);
        const std::vector<double> four = {0.1, 0.4, 0.4, 0.9};
        CHECK(det_metrics(four, four).eer == 0.5);
    }
    SUBCASE("four against four")
    {
        const DetMetrics d = det_metrics({1.0, 2.0, 3.0, 5.0}, {4.0, 6.0, 7.0, 8.0});
        const std::vector<double> apcer = {1.0, 0.75, 0.5, 0.25, 0.25, 0.0, 0.0, 0.0, 0.0};
        const std::vector<double> bpcer = {0.0, 0.0, 0.0, 0.0, 0.25, 0.25, 0.5, 0.75, 1.0};
        REQUIRE(d.curve.size() == apcer.size());
        CHECK(d.curve[0].threshold == -std::numeric_limits<double>::infinity());
        for (std::size_t i = 0; i < apcer.size(); ++i) {
            CHECK(d.curve[i].apcer == apcer[i]);
            CHECK(d.curve[i].bpcer == bpcer[i]);
        }
        CHECK(d.eer == 0.25);
        CHECK(d.apcer_at_bpcer[0] == 0.25);
        CHECK(d.apcer_at_bpcer[2] == 0.25);
        CHECK(apcer_at(d.curve, 0.5) == 0.0);
    }
    SUBCASE("interpolated crossing")
    {
        // APCER - BPCER jumps from 1/12 to -1/6 at threshold 2.5.
        const DetMetrics d = det_metrics({1.0, 2.0, 3.0}, {1.5, 2.5, 3.5, 4.5});
        CHECK(d.eer == 1.0 / 3.0);
        const DetMetrics e = det_metrics({1.0, 2.0}, {1.5, 3.0, 4.0});
        // Between 1.5 (1/2, 1/3) and 2 (0, 1/3): t = 1/3.
        CHECK(e.eer == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    }
    CHECK_THROWS_AS(det_metrics({}, {1.0}), InputError);
    CHECK_THROWS_AS(det_metrics({1.0}, {}), InputError);
    CHECK_THROWS_AS(det_metrics({1.0}, {std::nan("")}), InputError);
}

TEST_CASE("det_metrics matches exhaustive enumeration")
{
    Rng rng(13);
    for (int trial = 0; trial < 300; ++trial) {
        const int levels = 1 + trial % 40;
        const std::vector<double> morph = grid_scores(rng, draw_size(rng, 50), levels);
        const std::vector<double> bona = grid_scores(rng, draw_size(rng, 50), levels);
        check_against_oracle(morph, bona);

        const DetMetrics d = det_metrics(morph, bona);
        for (std::size_t i = 1; i < d.curve.size(); ++i) {
            CHECK(d.curve[i].threshold > d.curve[i - 1].threshold);
            CHECK(d.curve[i].apcer <= d.curve[i - 1].apcer);
            CHECK(d.curve[i].bpcer >= d.curve[i - 1].bpcer);
        }
        CHECK(d.eer >= 0.0);
        CHECK(d.eer <= 1.0);
    }
}

TEST_CASE("metrics are rank statistics")
{
    Rng rng(14);
    for (int trial = 0; trial < 200; ++trial) {
        const std::vector<double> morph = grid_scores(rng, draw_size(rng, 50), 33);
        const std::vector<double> bona = grid_scores(rng, draw_size(rng, 50), 33);
        const DetMetrics d = det_metrics(morph, bona);
        const DetMetrics t = det_metrics(transformed(morph), transformed(bona));
        CHECK(d.eer == t.eer);
        CHECK(d.apcer_at_bpcer == t.apcer_at_bpcer);
        REQUIRE(d.curve.size() == t.curve.size());
        for (std::size_t i = 0; i < d.curve.size(); ++i) {
            CHECK(d.curve[i].apcer == t.curve[i].apcer);
            CHECK(d.curve[i].bpcer == t.curve[i].bpcer);
        }

        const std::vector<double> imp = grid_scores(rng, draw_size(rng, 100), 33);
        const std::vector<double> a = grid_scores(rng, morph.size(), 33);
        const std::vector<double> b = grid_scores(rng, morph.size(), 33);
        for (double far : {1e-3, 0.1, 0.4}) {
            const double tau = far_threshold(imp, far);
            const double tau_t = far_threshold(transformed(imp), far);
            CHECK(tau_t == monotone(tau));
            CHECK(mmpmr(make_trials(a, b), tau) == mmpmr(make_trials(transformed(a), transformed(b)), tau_t));
        }
    }
}

TEST_CASE("score files")
{
    const auto dir = std::filesystem::temp_directory_path() / "morphgen_test_metrics";
    std::filesystem::create_directories(dir);

    const ScoreSet s{{0.1, -3.25, 1e-300}, {0.7, 0.123456789012345678}};
    write_scores_csv(dir / "scores.csv", s);
    const ScoreSet back = read_scores_csv(dir / "scores.csv");
    CHECK(back.morph == s.morph);
    CHECK(back.bona_fide == s.bona_fide);

    const std::vector<MorphTrial> trials = {{"pair_0", 0.5, 0.25}, {"pair_1", -1.0, 2.0}};
    write_trials_csv(dir / "trials.csv", trials);
    const std::vector<MorphTrial> tb = read_trials_csv(dir / "trials.csv");
    REQUIRE(tb.size() == 2);
    CHECK(tb[1].id == "pair_1");
    CHECK(tb[1].score_b == 2.0);

    write_det_curve_csv(dir / "det.csv", det_metrics(s).curve);
    std::ifstream det(dir / "det.csv");
    std::string header;
    std::string first;
    std::getline(det, header);
    std::getline(det, first);
    CHECK(header == "threshold,apcer,bpcer");
    CHECK(first == "-inf,1,0");

    const auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream(dir / name) << text;
        return dir / name;
    };
    CHECK_THROWS_AS(read_scores_csv(write("h.csv", "score,label\nmorph,1\n")), InputError);
    CHECK_THROWS_AS(read_scores_csv(write("l.csv", "label,score\nattack,1\nbona_fide,2\n")), InputError);
    CHECK_THROWS_AS(read_scores_csv(write("n.csv", "label,score\nmorph,nan\nbona_fide,2\n")), InputError);
    CHECK_THROWS_AS(read_scores_csv(write("o.csv", "label,score\nmorph,1\n")), InputError);
    CHECK_THROWS_AS(read_scores_csv(write("x.csv", "label,score\nmorph,1x\nbona_fide,2\n")), InputError);
    CHECK_THROWS_AS(read_trials_csv(write("t.csv", "morph_id,score_a,score_b\n")), InputError);
    CHECK_THROWS_AS(read_trials_csv(write("u.csv", "morph_id,score_a,score_b\np,1\n")), InputError);
    CHECK_NOTHROW(read_scores_csv(write("crlf.csv", "label,score\r\nmorph,1\r\nbona_fide,2\r\n")));
    CHECK_THROWS_AS(read_scores_csv(dir / "missing.csv"), InputError);
}
