#include <gtest/gtest.h>

#include <set>

#include "pion/selftest.hpp"

TEST(Selftest, EverySuitePassesOnPristineKernels) {
  const auto results = pion::run_selftest();
  EXPECT_GE(results.size(), 20u);
  std::set<std::string> names;
  for (const auto& r : results) {
    EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
    EXPECT_TRUE(names.insert(r.name).second) << "duplicate suite " << r.name;
    EXPECT_FALSE(r.detail.empty()) << r.name;
  }
}

TEST(Selftest, CorruptedE2KernelIsDetected) {
  pion::SelftestKernels k;
  k.exp_e2 = pion::corrupted_exp_e2;
  std::set<std::string> failed;
  for (const auto& r : pion::run_selftest(k)) {
    if (!r.passed) failed.insert(r.name);
  }
  EXPECT_TRUE(failed.count("linalg.e2_orthogonality"));
  // Suites that never touch the kernel are unaffected.
  EXPECT_FALSE(failed.count("manifold.lie_skew"));
  EXPECT_FALSE(failed.count("linalg.cayley_orthogonality"));
}
