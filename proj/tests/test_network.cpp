#include <gtest/gtest.h>

#include "bn2o/network.hpp"

using namespace bn2o;

TEST(Network, AccessorsFollowFindingMajorLayout) {
    Bn2oNetwork net({0.1, 0.2, 0.3}, {0.01, 0.02}, {{0.5, 0.0, 1.0}, {0.25, 0.75, 0.0}});
    EXPECT_EQ(net.n_diseases(), 3u);
    EXPECT_EQ(net.n_findings(), 2u);
    EXPECT_DOUBLE_EQ(net.coeff(0, 2), 1.0);
    EXPECT_DOUBLE_EQ(net.coeff(1, 1), 0.75);
    EXPECT_DOUBLE_EQ(net.leak(1), 0.02);
    EXPECT_EQ(net.coeff_matrix()[1], (std::vector<double>{0.25, 0.75, 0.0}));
}

TEST(Network, RejectsOutOfRangeValues) {
    EXPECT_THROW(Bn2oNetwork({1.1}, {0.0}, {{0.5}}), ValidationError);
    EXPECT_THROW(Bn2oNetwork({0.1}, {-0.1}, {{0.5}}), ValidationError);
    EXPECT_THROW(Bn2oNetwork({0.1}, {0.0}, {{1.5}}), ValidationError);
}

TEST(Network, RejectsShapeMismatch) {
    EXPECT_THROW(Bn2oNetwork({}, {0.1}, {{}}), ValidationError);
    EXPECT_THROW(Bn2oNetwork({0.1}, {}, {}), ValidationError);
    EXPECT_THROW(Bn2oNetwork({0.1, 0.2}, {0.1}, {{0.5}}), ValidationError);
    EXPECT_THROW(Bn2oNetwork({0.1}, {0.1, 0.2}, {{0.5}}), ValidationError);
    Bn2oNetwork net({0.1}, {0.1}, {{0.5}});
    EXPECT_THROW(net.coeff_row(1), ValidationError);
}

TEST(DiseaseState, BitstringPutsDiseaseZeroLeftmost) {
    const auto s = DiseaseState::from_bitstring("001011");
    EXPECT_EQ(s.mask(), StateMask{4 + 16 + 32});
    EXPECT_EQ(s.count(), 3u);
    EXPECT_EQ(s.to_bitstring(), "001011");
    EXPECT_EQ(DiseaseState::from_mask(6, 52), s);
    EXPECT_THROW(DiseaseState::from_bitstring("01a"), ValidationError);
    EXPECT_THROW(DiseaseState::from_mask(3, 8), ValidationError);
}

TEST(Evidence, NormalizesAndRejectsOverlap) {
    Evidence ev({3, 1, 3}, {0});
    EXPECT_EQ(ev.positive(), (std::vector<std::size_t>{1, 3}));
    EXPECT_EQ(ev.positive_mask(), StateMask{0b1010});
    EXPECT_EQ(Evidence::from_masks(0b1010, 0b1), ev);
    EXPECT_THROW(Evidence({1, 2}, {2}), ValidationError);
    EXPECT_THROW(ev.validate(3), ValidationError);
    EXPECT_NO_THROW(ev.validate(4));
}
