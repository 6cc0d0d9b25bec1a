#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include <npfocus/quantile_grid.hpp>

using namespace npfocus;

TEST(GeometricProbabilities, ThreeLevelsOnHundredPoints) {
    const auto p = geometric_probabilities(3, 100);
    ASSERT_EQ(p.size(), 3u);
    // 1 / (1 + 199^(2/3)) evaluated by hand.
    EXPECT_NEAR(p[0], 0.0285018634, 1e-9);
    EXPECT_NEAR(p[1], 0.5, 1e-15);
    EXPECT_NEAR(p[2], 1.0 - 0.0285018634, 1e-9);
}

TEST(GeometricProbabilities, SymmetricAndIncreasing) {
    for (std::size_t m : {1u, 2u, 3u, 15u, 25u, 40u}) {
        for (std::size_t n : {1u, 10u, 100u, 5000u}) {
            const auto p = geometric_probabilities(m, n);
            for (std::size_t i = 0; i < m; ++i) {
                EXPECT_NEAR(p[i] + p[m - 1 - i], 1.0, 1e-12);
                EXPECT_GT(p[i], 0.0);
                EXPECT_LT(p[i], 1.0);
                if (i > 0 && n > 1) {
                    EXPECT_GT(p[i], p[i - 1]);
                }
            }
        }
    }
}

TEST(GeometricProbabilities, SingleTrainingPointCollapsesToMedian) {
    for (double v : geometric_probabilities(5, 1)) {
        EXPECT_EQ(v, 0.5);
    }
}

TEST(GeometricProbabilities, RejectsZeroSizes) {
    EXPECT_THROW(geometric_probabilities(0, 10), invalid_input);
    EXPECT_THROW(geometric_probabilities(3, 0), invalid_input);
}

TEST(FitQuantiles, NearestRank) {
    std::vector<double> training(100);
    std::iota(training.begin(), training.end(), 1.0);
    std::reverse(training.begin(), training.end());
    const std::vector<double> probs{0.001, 0.25, 0.5, 0.501, 0.999};
    const auto g = fit_quantiles(training, probs);
    EXPECT_EQ(g.values, (std::vector<double>{1, 25, 50, 51, 100}));
    EXPECT_EQ(g.training_n, 100u);
    EXPECT_EQ(g.probs, probs);
}

TEST(FitQuantiles, Errors) {
    const std::vector<double> empty;
    const std::vector<double> probs{0.5};
    EXPECT_THROW(fit_quantiles(empty, probs), invalid_input);
    const std::vector<double> with_nan{1.0, std::nan("")};
    EXPECT_THROW(fit_quantiles(with_nan, probs), invalid_input);
    const std::vector<double> data{1.0, 2.0};
    const std::vector<double> bad_probs{0.0};
    EXPECT_THROW(fit_quantiles(data, bad_probs), invalid_input);
    const std::vector<double> unsorted{0.7, 0.3};
    EXPECT_THROW(fit_quantiles(data, unsorted), invalid_input);
}

TEST(FitGrid, ValuesAreSortedAndFromTheTrainingSet) {
    std::vector<double> training;
    for (int i = 0; i < 100; ++i) {
        training.push_back(std::sin(i * 1.7) * 10.0);
    }
    const auto g = fit_grid(training, 15);
    ASSERT_EQ(g.size(), 15u);
    for (std::size_t i = 0; i < g.size(); ++i) {
        EXPECT_NE(std::find(training.begin(), training.end(), g.values[i]), training.end());
        if (i > 0) {
            EXPECT_LE(g.values[i - 1], g.values[i]);
        }
    }
}

TEST(GridJson, RoundTrip) {
    const std::vector<double> training{3.0, 1.0, 2.0, 5.0, 4.0};
    const auto g = fit_grid(training, 3);
    const nlohmann::json j = g;
    EXPECT_EQ(j.at("schema_version"), kGridSchemaVersion);
    EXPECT_EQ(j.get<QuantileGrid>(), g);
}

TEST(GridJson, RejectsWrongSchemaOrShape) {
    nlohmann::json j = fit_grid(std::vector<double>{1, 2, 3, 4}, 2);
    auto wrong_version = j;
    wrong_version["schema_version"] = 99;
    EXPECT_THROW(wrong_version.get<QuantileGrid>(), invalid_input);
    auto mismatched = j;
    mismatched["values"] = nlohmann::json::array({1.0});
    EXPECT_THROW(mismatched.get<QuantileGrid>(), invalid_input);
    auto missing = j;
    missing.erase("probs");
    EXPECT_THROW(missing.get<QuantileGrid>(), invalid_input);
}
