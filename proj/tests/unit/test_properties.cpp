#include <doctest.h>

#include "properties.hpp"

using namespace mknock;

// Reduced case counts; the acceptance binary runs the full sizes.

TEST_CASE("property: sequential step equals a brute-force scan") {
    const auto o = props::seqstep_matches_scan(101, 300);
    INFO(o.detail);
    CHECK(o.ok);
    CHECK(o.cases == 300);
}

TEST_CASE("property: one copy equals the knockoff filter") {
    const auto o = props::single_copy_matches_knockoff_filter(102, 5);
    INFO(o.detail);
    CHECK(o.ok);
}

TEST_CASE("property: knockoff joint covariance") {
    const auto o = props::knockoff_joint_covariance(103, 40000, 6, 0.05);
    INFO(o.detail);
    CHECK(o.ok);
}

TEST_CASE("property: orthonormal lasso is soft thresholding") {
    const auto o = props::lasso_orthonormal_soft_threshold(104, 10);
    INFO(o.detail);
    CHECK(o.ok);
}

TEST_CASE("property: GMUS with zero delta is the Dantzig selector") {
    const auto o = props::gmus_zero_delta_is_gds(105, 2);
    INFO(o.detail);
    CHECK(o.ok);
}

TEST_CASE("property: corrected loss gradient") {
    const auto o = props::corrected_gradient_finite_difference(106, 20);
    INFO(o.detail);
    CHECK(o.ok);
}

TEST_CASE("property: imputation keeps observed cells") {
    const auto o = props::imputation_preserves_observed(107, 1);
    INFO(o.detail);
    CHECK(o.ok);
}
