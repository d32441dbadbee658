#include <catch2/catch_amalgamated.hpp>

#include "dynmap/evaluation.hpp"
#include "helpers.hpp"

using namespace dynmap;

TEST_CASE("topk_accuracy basics") {
    std::vector<std::vector<double>> target = {{0.7, 0.2, 0.1}};
    CHECK(topk_accuracy(target, target, 1) == 1.0);

    SECTION("uniform predictions admit the lowest-index classes only") {
        std::vector<std::vector<double>> pred = {std::vector<double>(10, 0.1)};
        for (size_t truth = 0; truth < 10; ++truth) {
            std::vector<double> t(10, 0.0);
            t[truth] = 1.0;
            const double hit = topk_accuracy(pred, {t}, 5);
            CHECK(hit == (truth < 5 ? 1.0 : 0.0));
        }
    }
    SECTION("monotone in k and total at k = P") {
        Rng rng(4);
        std::vector<std::vector<double>> preds, targets;
        for (int i = 0; i < 40; ++i) {
            preds.push_back(testutil::random_distribution(8, rng));
            targets.push_back(testutil::random_distribution(8, rng));
        }
        double prev = 0.0;
        for (size_t k = 1; k <= 8; ++k) {
            const double acc = topk_accuracy(preds, targets, k);
            CHECK(acc >= prev);
            prev = acc;
        }
        CHECK(topk_accuracy(preds, targets, 8) == 1.0);
    }
    SECTION("length mismatch throws") {
        CHECK_THROWS_AS(topk_accuracy(target, {}, 1), DimensionError);
    }
}

TEST_CASE("within_threshold") {
    std::vector<std::vector<double>> t = {{0.5, 0.5}};
    CHECK(within_threshold(t, t, 0.1) == 1.0);

    SECTION("boundary is closed") {
        std::vector<std::vector<double>> pred = {{0.6}};
        std::vector<std::vector<double>> target = {{0.5}};
        CHECK(within_threshold(pred, target, 0.1) == 1.0);
        CHECK(within_threshold(pred, target, 0.0999) == 0.0);
    }
    SECTION("monotone in tau") {
        Rng rng(6);
        std::vector<std::vector<double>> preds, targets;
        for (int i = 0; i < 30; ++i) {
            preds.push_back(testutil::random_vec(5, rng, 0.0, 1.0));
            targets.push_back(testutil::random_vec(5, rng, 0.0, 1.0));
        }
        double prev = 0.0;
        for (double tau : {0.05, 0.1, 0.2, 0.5, 1.0}) {
            const double w = within_threshold(preds, targets, tau);
            CHECK(w >= prev);
            prev = w;
        }
        CHECK(prev == 1.0);
    }
}

TEST_CASE("attribute_distance") {
    AttributeTargets q;
    q.places = {0.3, 0.7};
    q.transient = {0.5, 0.5};

    SECTION("zero at an identical candidate") {
        auto [kl, l2] = attribute_distance(q, q.places, q.transient);
        CHECK(kl == Catch::Approx(0.0).margin(1e-6));
        CHECK(l2 == 0.0);
    }
    SECTION("transient off by 0.1 in each of 40 entries") {
        AttributeTargets q40;
        q40.places = {1.0, 0.0};
        q40.transient.assign(40, 0.5);
        std::vector<double> cand(40, 0.6);
        auto [kl, l2] = attribute_distance(q40, q40.places, cand);
        CHECK(l2 == Catch::Approx(0.1 * std::sqrt(40.0)).epsilon(1e-9));
    }
    SECTION("KL closed form") {
        AttributeTargets q2;
        q2.places = {1.0, 0.0};
        q2.transient = {};
        auto [kl, l2] = attribute_distance(q2, {0.5, 0.5}, {});
        CHECK(kl == Catch::Approx(std::log(2.0)).margin(1e-5));
    }
}

TEST_CASE("combine_distances endpoints preserve raw rankings") {
    Rng rng(8);
    std::vector<std::pair<double, double>> profiles;
    for (int i = 0; i < 20; ++i) profiles.push_back({rng.uniform(0, 5), rng.uniform(0, 2)});

    auto argsort_first = [&](bool use_kl) {
        std::vector<double> raw;
        for (auto& [kl, l2] : profiles) raw.push_back(use_kl ? kl : l2);
        return rank_candidates(raw);
    };
    CHECK(rank_candidates(combine_distances(profiles, {1.0})) == argsort_first(true));
    CHECK(rank_candidates(combine_distances(profiles, {0.0})) == argsort_first(false));
}

TEST_CASE("combine_distances weighted extremes") {
    // candidate 0 is best on Places and worst on Transient, candidate 1 the reverse
    std::vector<std::pair<double, double>> profiles = {{0.0, 1.0}, {1.0, 0.0}};
    auto scores = combine_distances(profiles, {0.58});
    CHECK(scores[0] == Catch::Approx(0.42));
    CHECK(scores[1] == Catch::Approx(0.58));
    CHECK(rank_candidates(scores)[0] == 0);  // the Places-strong candidate wins
}

TEST_CASE("combine_distances constant column maps to zeros") {
    std::vector<std::pair<double, double>> profiles = {{3.0, 0.1}, {3.0, 0.9}};
    auto scores = combine_distances(profiles, {0.5});
    CHECK(scores[0] == Catch::Approx(0.0));
    CHECK(scores[1] == Catch::Approx(0.5));
    CHECK_THROWS_AS(combine_distances({}, {0.5}), ValidationError);
}

TEST_CASE("rank_candidates") {
    CHECK(rank_candidates({3.0, 1.0, 2.0}) == std::vector<size_t>{1, 2, 0});
    CHECK(rank_candidates({5.0, 5.0, 5.0}) == std::vector<size_t>{0, 1, 2});

    SECTION("minimum ranks first on random scores") {
        Rng rng(12);
        std::vector<double> scores;
        for (int i = 0; i < 1000; ++i) scores.push_back(rng.uniform());
        auto perm = rank_candidates(scores);
        size_t arg_min = 0;
        for (size_t i = 1; i < scores.size(); ++i)
            if (scores[i] < scores[arg_min]) arg_min = i;
        CHECK(perm[0] == arg_min);
        std::vector<bool> seen(scores.size(), false);
        for (size_t p : perm) seen[p] = true;
        CHECK(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }));
    }
    SECTION("stability on duplicated keys") {
        std::vector<double> scores = {1.0, 0.5, 1.0, 0.5, 0.1};
        CHECK(rank_candidates(scores) == std::vector<size_t>{4, 1, 3, 0, 2});
    }
    SECTION("NaN rejected") {
        CHECK_THROWS_AS(rank_candidates({1.0, std::nan("")}), ValidationError);
    }
}

TEST_CASE("topk_percent_hit budgets") {
    // n=1000, k=1% -> budget 10, hit iff rank <= 9
    CHECK(topk_percent_hit(9, 1000, 1.0));
    CHECK_FALSE(topk_percent_hit(10, 1000, 1.0));
    // 288-cell verification grid: ceil(2.88) = 3, ceil(14.4) = 15
    CHECK(topk_percent_hit(2, 288, 1.0));
    CHECK_FALSE(topk_percent_hit(3, 288, 1.0));
    CHECK(topk_percent_hit(14, 288, 5.0));
    CHECK_FALSE(topk_percent_hit(15, 288, 5.0));
}
