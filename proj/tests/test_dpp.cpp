#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "posebank/dpp.hpp"

using namespace posebank;

namespace {

std::vector<Eigen::Index> sorted(std::vector<Eigen::Index> v) {
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace

TEST_CASE("greedy MAP picks the dominant diagonal pair", "[dpp]") {
    const KernelMatrix k = testutil::diagonal_kernel({9, 4, 1});
    const SubsetSelection sel = greedy_map_kdpp(k, 2);
    CHECK(sorted(sel.indices) == std::vector<Eigen::Index>{0, 1});
    CHECK(sel.log_det == Catch::Approx(std::log(36.0)));

    // enumeration oracle: {0,1} must dominate the other two pairs
    double best = -1.0;
    std::vector<Eigen::Index> best_pair;
    testutil::for_each_subset(3, 2, [&](const std::vector<Eigen::Index>& s) {
        const double det = testutil::submatrix_det(k.data, s);
        if (det > best) {
            best = det;
            best_pair = s;
        }
    });
    CHECK(best == Catch::Approx(36.0));
    CHECK(best_pair == sorted(sel.indices));
}

TEST_CASE("greedy MAP breaks ties toward the lowest index", "[dpp]") {
    const KernelMatrix k = testutil::diagonal_kernel({1, 1, 1});
    const SubsetSelection sel = greedy_map_kdpp(k, 2);
    CHECK(sel.indices == std::vector<Eigen::Index>{0, 1});
    CHECK(sel.log_det == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("greedy MAP with k = N returns everything", "[dpp]") {
    Rng rng(7);
    const KernelMatrix k = testutil::random_psd_kernel(rng, 6);
    const SubsetSelection sel = greedy_map_kdpp(k, 6);
    CHECK(sorted(sel.indices) == std::vector<Eigen::Index>{0, 1, 2, 3, 4, 5});
}

TEST_CASE("greedy MAP parameter and rank errors", "[dpp]") {
    const KernelMatrix k = testutil::diagonal_kernel({2, 1, 0});
    CHECK_THROWS_AS(greedy_map_kdpp(k, 0), ParameterError);
    CHECK_THROWS_AS(greedy_map_kdpp(k, 4), ParameterError);
    CHECK_THROWS_AS(greedy_map_kdpp(k, 3), RankError);  // rank is 2
}

TEST_CASE("greedy gains are non-increasing and match naive recomputation", "[dpp]") {
    Rng rng(19);
    for (int trial = 0; trial < 12; ++trial) {
        const int n = 5 + static_cast<int>(rng.uniform_index(8));
        const KernelMatrix k = testutil::random_psd_kernel(rng, n);
        std::vector<double> gains;
        const SubsetSelection sel = greedy_map_kdpp(k, static_cast<std::size_t>(n) / 2 + 1, &gains);
        REQUIRE(gains.size() == sel.indices.size());

        double prev = std::numeric_limits<double>::infinity();
        double naive_prev_logdet = 0.0;
        std::vector<Eigen::Index> prefix;
        for (std::size_t t = 0; t < sel.indices.size(); ++t) {
            CHECK(gains[t] <= prev + 1e-9);
            prev = gains[t];
            prefix.push_back(sel.indices[t]);
            const double logdet = std::log(testutil::submatrix_det(k.data, prefix));
            CHECK(gains[t] == Catch::Approx(logdet - naive_prev_logdet).margin(1e-8));
            naive_prev_logdet = logdet;
        }
        CHECK(sel.log_det == Catch::Approx(naive_prev_logdet).margin(1e-8));
    }
}

TEST_CASE("greedy selection is invariant to kernel scaling", "[dpp]") {
    Rng rng(31);
    for (double scale : {0.25, 3.0, 40.0}) {
        const KernelMatrix k = testutil::random_psd_kernel(rng, 10);
        KernelMatrix scaled = k;
        scaled.data *= scale;
        const SubsetSelection a = greedy_map_kdpp(k, 4);
        const SubsetSelection b = greedy_map_kdpp(scaled, 4);
        CHECK(a.indices == b.indices);
    }
}

TEST_CASE("greedy equals brute force on diagonal kernels", "[dpp]") {
    Rng rng(37);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 3 + static_cast<int>(rng.uniform_index(8));
        std::vector<double> diag;
        for (int i = 0; i < n; ++i) diag.push_back(rng.uniform(0.5, 10.0));
        const KernelMatrix k = testutil::diagonal_kernel(diag);
        const std::size_t kk = 1 + rng.uniform_index(static_cast<std::size_t>(n));
        CHECK(sorted(greedy_map_kdpp(k, kk).indices) == brute_force_map(k, kk).indices);
    }
}

TEST_CASE("brute force prefers the non-duplicate pair", "[dpp]") {
    KernelMatrix k;
    k.data.resize(3, 3);
    k.data << 1.0, 0.99, 0.1,   //
        0.99, 1.0, 0.1,         //
        0.1, 0.1, 1.0;
    const SubsetSelection sel = brute_force_map(k, 2);
    CHECK(sel.indices == std::vector<Eigen::Index>{0, 2});

    // oracle: the near-duplicate pair {0,1} has nearly zero determinant
    CHECK(testutil::submatrix_det(k.data, {0, 1}) < 0.02);
    CHECK(testutil::submatrix_det(k.data, {0, 2}) == Catch::Approx(0.99));
}

TEST_CASE("brute force diagonal case and empty selection", "[dpp]") {
    const KernelMatrix k = testutil::diagonal_kernel({9, 4, 1});
    CHECK(brute_force_map(k, 2).indices == std::vector<Eigen::Index>{0, 1});

    const SubsetSelection empty = brute_force_map(k, 0);
    CHECK(empty.indices.empty());
    CHECK(empty.log_det == 0.0);
}

TEST_CASE("brute force guards against oversized instances", "[dpp]") {
    Rng rng(41);
    const KernelMatrix k = testutil::random_psd_kernel(rng, 60);
    CHECK_THROWS_AS(brute_force_map(k, 20), ParameterError);
}

TEST_CASE("elementary symmetric polynomial values", "[dpp]") {
    CHECK(elementary_symmetric({1, 1, 1}, 2) == Catch::Approx(3.0));
    CHECK(elementary_symmetric({1, 2, 3}, 2) == Catch::Approx(11.0));
    CHECK(elementary_symmetric({9, 4, 1}, 2) == Catch::Approx(49.0));
    CHECK(elementary_symmetric({1, 2, 3}, 0) == 1.0);
    CHECK(elementary_symmetric({1, 2}, 3) == 0.0);
}

TEST_CASE("elementary symmetric matches exhaustive products", "[dpp]") {
    Rng rng(43);
    for (int n = 1; n <= 8; ++n) {
        std::vector<double> vals;
        for (int i = 0; i < n; ++i) vals.push_back(rng.uniform(0.1, 4.0));
        for (std::size_t k = 0; k <= static_cast<std::size_t>(n); ++k) {
            double total = 0.0;
            testutil::for_each_subset(static_cast<std::size_t>(n), k,
                                      [&](const std::vector<Eigen::Index>& s) {
                                          double prod = 1.0;
                                          for (auto idx : s) prod *= vals[static_cast<std::size_t>(idx)];
                                          total += prod;
                                      });
            CHECK(elementary_symmetric(vals, k) ==
                  Catch::Approx(total).epsilon(1e-9).margin(1e-12));
        }
    }
}

TEST_CASE("kdpp_log_prob on hand-checked kernels", "[dpp]") {
    SECTION("identity: all pairs equally likely") {
        const KernelMatrix k = testutil::diagonal_kernel({1, 1, 1});
        SubsetSelection s;
        s.indices = {0, 2};
        CHECK(kdpp_log_prob(k, s) == Catch::Approx(std::log(1.0 / 3.0)));
    }
    SECTION("diag(9,4,1) arithmetic") {
        const KernelMatrix k = testutil::diagonal_kernel({9, 4, 1});
        SubsetSelection a;
        a.indices = {0, 1};
        CHECK(kdpp_log_prob(k, a) == Catch::Approx(std::log(36.0 / 49.0)));
        SubsetSelection b;
        b.indices = {1, 2};
        CHECK(kdpp_log_prob(k, b) == Catch::Approx(std::log(4.0 / 49.0)));
    }
}

TEST_CASE("kdpp probabilities normalize over all size-k subsets", "[dpp]") {
    Rng rng(47);
    for (int trial = 0; trial < 5; ++trial) {
        const int n = 6 + static_cast<int>(rng.uniform_index(3));
        const KernelMatrix k = testutil::random_psd_kernel(rng, n);
        for (std::size_t card = 1; card <= static_cast<std::size_t>(n); ++card) {
            double total = 0.0;
            testutil::for_each_subset(static_cast<std::size_t>(n), card,
                                      [&](const std::vector<Eigen::Index>& s) {
                                          SubsetSelection sel;
                                          sel.indices = s;
                                          total += std::exp(kdpp_log_prob(k, sel));
                                      });
            CHECK(total == Catch::Approx(1.0).margin(1e-8));
        }
    }
}

TEST_CASE("unconstrained dpp log-prob basics", "[dpp]") {
    const KernelMatrix k = testutil::diagonal_kernel({1, 1});
    SubsetSelection single;
    single.indices = {0};
    CHECK(unconstrained_dpp_log_prob(k, single) == Catch::Approx(std::log(0.25)));
    SubsetSelection empty;
    CHECK(unconstrained_dpp_log_prob(k, empty) == Catch::Approx(std::log(0.25)));
}

TEST_CASE("unconstrained dpp normalizes over the power set", "[dpp]") {
    Rng rng(53);
    const int n = 6;
    const KernelMatrix k = testutil::random_psd_kernel(rng, n);
    double total = 0.0;
    for (std::size_t card = 0; card <= static_cast<std::size_t>(n); ++card) {
        testutil::for_each_subset(static_cast<std::size_t>(n), card,
                                  [&](const std::vector<Eigen::Index>& s) {
                                      SubsetSelection sel;
                                      sel.indices = s;
                                      total += std::exp(unconstrained_dpp_log_prob(k, sel));
                                  });
    }
    CHECK(total == Catch::Approx(1.0).margin(1e-8));
}

TEST_CASE("singular selections are flagged with negative infinity", "[dpp]") {
    KernelMatrix k;
    k.data.resize(3, 3);
    k.data << 1, 1, 0,  // rows 0 and 1 duplicate each other; overall rank 2
        1, 1, 0,        //
        0, 0, 1;
    SubsetSelection s;
    s.indices = {0, 1};
    CHECK(std::isinf(kdpp_log_prob(k, s)));
    CHECK(kdpp_log_prob(k, s) < 0.0);

    // requesting more than the rank is an error rather than a silent -inf
    SubsetSelection all;
    all.indices = {0, 1, 2};
    CHECK_THROWS_AS(kdpp_log_prob(k, all), RankError);
}
