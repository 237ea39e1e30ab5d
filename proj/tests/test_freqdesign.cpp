#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "hmpc/errors.hpp"
#include "hmpc/freqdesign.hpp"

using namespace hmpc;

namespace {

/// x+ = a x + u with z = (x, u), bounds |x| <= x_bound, |u| <= u_bound.
struct FirstOrder {
    LtiModel model;
    ConstraintSet constraints;
};

FirstOrder first_order(double a, double x_bound, double u_bound)
{
    Matrix C(2, 1);
    C << 1, 0;
    Matrix D(2, 1);
    D << 0, 1;
    Vector hi(2);
    hi << x_bound, u_bound;
    return {LtiModel(Matrix::Constant(1, 1, a), Matrix::Ones(1, 1), C, D),
            ConstraintSet(-hi, hi, Vector::Constant(2, 1e-4))};
}

} // namespace

TEST(FreqDesign, StaticSystemHasUnitGain)
{
    const FirstOrder s = first_order(0.0, 1.0, 1.0);
    for (double w : {0.01, 0.5, 1.0, 3.0, std::numbers::pi}) {
        EXPECT_NEAR(gain_at(s.model, w, 0, 0), 1.0, 1e-14);
        EXPECT_NEAR(gain_at(s.model, w, 1, 0), 1.0, 1e-14);
    }
}

TEST(FreqDesign, IntegratorAtNyquist)
{
    const FirstOrder s = first_order(1.0, 1.0, 1.0);
    EXPECT_NEAR(gain_at(s.model, std::numbers::pi, 0, 0), 0.5, 1e-14);
}

TEST(FreqDesign, Preconditions)
{
    const FirstOrder s = first_order(-1.0, 1.0, 1.0);
    EXPECT_THROW(gain_at(s.model, std::numbers::pi, 0, 0), PoleOnGrid);
    EXPECT_THROW(gain_at(s.model, 0.0, 0, 0), InvalidParameter);
    EXPECT_THROW(gain_at(s.model, 3.5, 0, 0), InvalidParameter);
    EXPECT_THROW(gain_at(s.model, 1.0, 5, 0), DimensionError);
    EXPECT_THROW(frequency_response(s.model, {0.2, 0.1}), InvalidParameter);
}

TEST(FreqDesign, FirstOrderCrossingMatchesClosedForm)
{
    // |e^{jw} - 0.5| = 1 / ratio gives cos w = (1.25 - 1/ratio^2) / 1.
    const FirstOrder s = first_order(0.5, 1.5, 1.0);
    const SuggestedFrequency r = suggest_w(s.model, s.constraints, 0, 0);
    EXPECT_EQ(r.status, SuggestedFrequency::Status::Crossing);
    EXPECT_DOUBLE_EQ(r.ratio, 1.5);
    const double expected = std::acos(1.25 - 1.0 / (1.5 * 1.5));
    EXPECT_NEAR(r.w, expected, 2e-6);
}

TEST(FreqDesign, UnitGainChannelHasNoCrossing)
{
    const FirstOrder s = first_order(0.0, 1.0, 1.0);
    const SuggestedFrequency r = suggest_w(s.model, s.constraints, 0, 0);
    EXPECT_EQ(r.status, SuggestedFrequency::Status::NoCrossing);
    EXPECT_DOUBLE_EQ(r.w, std::numbers::pi / 2);
    EXPECT_FALSE(r.note.empty());
}

TEST(FreqDesign, RatioAboveDcGain)
{
    const FirstOrder s = first_order(0.5, 5.0, 1.0);
    const SuggestedFrequency r = suggest_w(s.model, s.constraints, 0, 0);
    EXPECT_EQ(r.status, SuggestedFrequency::Status::BelowAtGridStart);
    EXPECT_NEAR(r.w, 1e-3, 1e-12);
    EXPECT_FALSE(r.note.empty());
}

TEST(FreqDesign, BallPlateChannel)
{
    const LtiModel model = ball_plate_model();
    const SuggestedFrequency r = suggest_w(model, ball_plate_constraints(), 0, 0);
    EXPECT_EQ(r.status, SuggestedFrequency::Status::Crossing);
    EXPECT_DOUBLE_EQ(r.ratio, 0.5 / 0.4);
    EXPECT_LE(r.w, std::numbers::pi / 2);
    EXPECT_LE(std::abs(r.w - 0.3254) / 0.3254, 0.15);
    EXPECT_NEAR(gain_at(model, r.w, 0, 0), r.ratio, 1e-4);
    // Gain decreases through the crossing.
    EXPECT_GT(gain_at(model, 0.9 * r.w, 0, 0), r.ratio);
    EXPECT_LT(gain_at(model, 1.1 * r.w, 0, 0), r.ratio);
}

TEST(FreqDesign, SuggestionNeverExceedsQuarterTurn)
{
    for (double a : {0.0, 0.3, 0.9, -0.5}) {
        for (double ratio : {0.2, 0.9, 1.0, 1.5, 10.0}) {
            const FirstOrder s = first_order(a, ratio, 1.0);
            EXPECT_LE(suggest_w(s.model, s.constraints, 0, 0).w, std::numbers::pi / 2);
        }
    }
}

TEST(FreqDesign, LogGridAndCsv)
{
    const std::vector<double> g = log_grid(1e-2, 1.0, 3);
    ASSERT_EQ(g.size(), 3u);
    EXPECT_DOUBLE_EQ(g[0], 1e-2);
    EXPECT_NEAR(g[1], 1e-1, 1e-15);
    EXPECT_EQ(g[2], 1.0);
    EXPECT_THROW(log_grid(0.0, 1.0, 3), InvalidParameter);

    const FirstOrder s = first_order(0.0, 1.0, 1.0);
    std::ostringstream out;
    write_gain_csv(out, frequency_response(s.model, g), 0, 0);
    EXPECT_EQ(out.str().substr(0, 7), "w,gain\n");
    EXPECT_EQ(input_bound_row(s.model, 0), 1);
}
