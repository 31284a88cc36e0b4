#include <doctest.h>

#include "properties.hpp"

// A lighter pass over the randomized properties; the acceptance runner
// repeats them across 200 instances.

TEST_CASE("calibration properties hold on random instances") {
  CHECK_NOTHROW(dfprops::check_calibration_properties(0xC0FFEE, 48));
}

TEST_CASE("jackknife closed-form identities hold on random instances") {
  CHECK_NOTHROW(dfprops::check_jackknife_properties(0xC0FFEE, 24));
}

TEST_CASE("weighted totals are linear in the variable") {
  CHECK_NOTHROW(dfprops::check_weighted_total_linearity(0xC0FFEE, 24));
}
