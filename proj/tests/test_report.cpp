#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "crowdval/report.hpp"

using namespace crowdval;

namespace {

/// O(n^2) pair-counting oracle for tau-b.
double tau_b_oracle(const std::vector<double>& a, const std::vector<double>& b) {
    std::int64_t concordant = 0;
    std::int64_t discordant = 0;
    std::int64_t tied_a_only = 0;
    std::int64_t tied_b_only = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = i + 1; j < a.size(); ++j) {
            const double da = a[i] - a[j];
            const double db = b[i] - b[j];
            if (da == 0.0 && db == 0.0) {
                continue;
            }
            if (da == 0.0) {
                ++tied_a_only;
            } else if (db == 0.0) {
                ++tied_b_only;
            } else if (da * db > 0.0) {
                ++concordant;
            } else {
                ++discordant;
            }
        }
    }
    const double denom =
        std::sqrt(static_cast<double>(concordant + discordant + tied_a_only)) *
        std::sqrt(static_cast<double>(concordant + discordant + tied_b_only));
    return static_cast<double>(concordant - discordant) / denom;
}

}  // namespace

TEST_CASE("loss_reduction") {
    const auto r = loss_reduction(0.30, 0.25);
    CHECK(r.absolute_pp == Catch::Approx(5.0).epsilon(1e-12));
    CHECK(r.relative_pct == Catch::Approx(16.6667).margin(1e-3));

    const auto zero = loss_reduction(0.4, 0.4);
    CHECK(zero.absolute_pp == 0.0);
    CHECK(zero.relative_pct == 0.0);

    CHECK_THROWS_AS(loss_reduction(0.0, 0.1), InvalidInputError);

    SECTION("a published pair of reductions is internally consistent") {
        // absolute +5.15pp and relative +17.60% imply a baseline near 29.3%
        const double baseline = 5.15 / 17.60;
        const double loss = baseline - 0.0515;
        const auto consistent = loss_reduction(baseline, loss);
        CHECK(consistent.absolute_pp == Catch::Approx(5.15).margin(1e-9));
        CHECK(consistent.relative_pct == Catch::Approx(17.60).margin(1e-2));
    }
    SECTION("round trip") {
        Rng rng(3);
        for (int trial = 0; trial < 100; ++trial) {
            const double baseline = 0.05 + rng.next_double();
            const double loss = rng.next_double();
            const auto reduction = loss_reduction(baseline, loss);
            CHECK(baseline * (1.0 - reduction.relative_pct / 100.0) ==
                  Catch::Approx(loss).margin(1e-12));
        }
    }
}

TEST_CASE("kendall_tau_b fixed cases") {
    CHECK(kendall_tau_b({1, 2, 3, 4}, {10, 20, 30, 40}) == Catch::Approx(1.0).margin(1e-12));
    CHECK(kendall_tau_b({1, 2, 3, 4}, {4, 3, 2, 1}) == Catch::Approx(-1.0).margin(1e-12));
    CHECK(kendall_tau_b({1, 2, 3, 4}, {2, 1, 3, 4}) ==
          Catch::Approx(4.0 / 6.0).margin(1e-12));
    CHECK_THROWS_AS(kendall_tau_b({1, 1, 1}, {1, 2, 3}), UndefinedCorrelationError);
    CHECK_THROWS_AS(kendall_tau_b({1}, {1}), InvalidInputError);
    CHECK_THROWS_AS(kendall_tau_b({1, 2}, {1, 2, 3}), InvalidInputError);
}

TEST_CASE("kendall_tau_b matches the pair-counting oracle on tied inputs") {
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.next_below(40);
        std::vector<double> a(n);
        std::vector<double> b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = static_cast<double>(rng.next_below(6));  // heavy ties
            b[i] = static_cast<double>(rng.next_below(6));
        }
        bool a_tied = true;
        bool b_tied = true;
        for (std::size_t i = 1; i < n; ++i) {
            a_tied = a_tied && a[i] == a[0];
            b_tied = b_tied && b[i] == b[0];
        }
        if (a_tied || b_tied) {
            CHECK_THROWS_AS(kendall_tau_b(a, b), UndefinedCorrelationError);
            continue;
        }
        REQUIRE(kendall_tau_b(a, b) == Catch::Approx(tau_b_oracle(a, b)).margin(1e-12));
    }
}

TEST_CASE("kendall_tau_b symmetry properties") {
    Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 3 + rng.next_below(20);
        std::vector<double> a(n);
        std::vector<double> b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = rng.next_double();
            b[i] = rng.next_double();
        }
        CHECK(kendall_tau_b(a, a) == Catch::Approx(1.0).margin(1e-12));
        std::vector<double> negated(b);
        for (double& v : negated) {
            v = -v;
        }
        CHECK(kendall_tau_b(a, negated) == Catch::Approx(-kendall_tau_b(a, b)).margin(1e-12));
    }
}

TEST_CASE("win_rate_matrix") {
    SECTION("strict dominance") {
        const auto wins = win_rate_matrix({{0.1, 0.1}, {0.5, 0.5}});
        CHECK(wins[0][1] == 100.0);
        CHECK(wins[1][0] == 0.0);
        CHECK(std::isnan(wins[0][0]));
    }
    SECTION("identical rows tie in both directions") {
        const auto wins = win_rate_matrix({{0.3, 0.4}, {0.3, 0.4}});
        CHECK(wins[0][1] == 0.0);
        CHECK(wins[1][0] == 0.0);
    }
    SECTION("split experiments") {
        const auto wins = win_rate_matrix({{0.1, 0.3}, {0.2, 0.2}});
        CHECK(wins[0][1] == 50.0);
        CHECK(wins[1][0] == 50.0);
    }
    SECTION("cells plus transposes never exceed 100") {
        Rng rng(13);
        std::vector<std::vector<double>> losses(5, std::vector<double>(12));
        for (auto& row : losses) {
            for (double& v : row) {
                v = static_cast<double>(rng.next_below(4)) / 4.0;
            }
        }
        const auto wins = win_rate_matrix(losses);
        for (std::size_t i = 0; i < losses.size(); ++i) {
            for (std::size_t j = i + 1; j < losses.size(); ++j) {
                CHECK(wins[i][j] + wins[j][i] <= 100.0 + 1e-12);
            }
        }
    }
    CHECK_THROWS_AS(win_rate_matrix({}), InvalidInputError);
}

TEST_CASE("mean_rank") {
    SECTION("an entity that always wins ranks 1.0") {
        const auto ranks = mean_rank({{0.1, 0.2}, {0.5, 0.6}, {0.7, 0.9}});
        CHECK(ranks[0].mean == 1.0);
        CHECK(ranks[1].mean == 2.0);
        CHECK(ranks[2].mean == 3.0);
        CHECK(ranks[0].standard_error == 0.0);
    }
    SECTION("entities tied at the top share rank 1") {
        const auto ranks = mean_rank({{0.1, 0.2}, {0.1, 0.2}, {0.9, 0.9}});
        CHECK(ranks[0].mean == 1.0);
        CHECK(ranks[1].mean == 1.0);
        CHECK(ranks[2].mean == 3.0);
    }
    SECTION("standard error shrinks with agreement") {
        const auto ranks = mean_rank({{0.1, 0.9}, {0.9, 0.1}});
        CHECK(ranks[0].mean == 1.5);
        CHECK(ranks[0].standard_error == Catch::Approx(0.5));
    }
}
