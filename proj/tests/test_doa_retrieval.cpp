#include <gtest/gtest.h>

#include <random>

#include "focanm/anm_solver.hpp"
#include "focanm/doa_retrieval.hpp"

using namespace focanm;

namespace {

CMatrix atoms_toeplitz(int n_aperture, const std::vector<double>& th, const std::vector<double>& power) {
  const int dim = 4 * n_aperture - 3;
  CMatrix t = CMatrix::Zero(dim, dim);
  for (std::size_t p = 0; p < th.size(); ++p) {
    const CVector d = virtual_steering(n_aperture, th[p]);
    t += power[p] * d * d.adjoint();
  }
  return t;
}

}  // namespace

TEST(ModelOrder, RankTwoPopulation) {
  EXPECT_EQ(model_order(atoms_toeplitz(4, {-23.0, 17.0}, {4.0, 4.0})), 2);
}

TEST(ModelOrder, IdentityAndZero) {
  EXPECT_EQ(model_order(CMatrix::Identity(13, 13)), 12);
  EXPECT_EQ(model_order(CMatrix::Zero(13, 13)), 0);
  EXPECT_THROW(model_order(CMatrix::Zero(3, 2)), std::invalid_argument);
}

TEST(Esprit, TwoAtoms) {
  const auto est = esprit(atoms_toeplitz(4, {-23.0, 17.0}, {4.0, 4.0}), 2);
  ASSERT_EQ(est.p(), 2);
  EXPECT_NEAR(est.thetas_deg[0], -23.0, 0.01);
  EXPECT_NEAR(est.thetas_deg[1], 17.0, 0.01);
}

TEST(Esprit, SingleBroadsideAtom) {
  const auto est = esprit(atoms_toeplitz(3, {0.0}, {1.0}), 1);
  ASSERT_EQ(est.p(), 1);
  EXPECT_NEAR(est.thetas_deg[0], 0.0, 1e-8);
}

TEST(Esprit, SortedRegardlessOfPower) {
  // the strongest atom sits at the largest angle here
  const auto est = esprit(atoms_toeplitz(4, {50.0, -10.0, 20.0}, {1.0, 2.0, 9.0}), 3);
  EXPECT_TRUE(std::is_sorted(est.thetas_deg.begin(), est.thetas_deg.end()));
  EXPECT_NEAR(est.thetas_deg[0], -10.0, 1e-6);
  EXPECT_NEAR(est.thetas_deg[2], 50.0, 1e-6);
}

TEST(Esprit, RecoversUpToFourNMinusFourAngles) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> ang(-70.0, 70.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 3;
    const int p = 1 + trial % (4 * n - 4);
    std::vector<double> th;
    while (static_cast<int>(th.size()) < p) {
      const double a = ang(rng);
      bool ok = true;
      for (double b : th) ok = ok && std::abs(std::sin(deg_to_rad(a)) - std::sin(deg_to_rad(b))) > 0.05;
      if (ok) th.push_back(a);
    }
    const auto est = esprit(atoms_toeplitz(n, th, std::vector<double>(th.size(), 1.0)), p);
    std::sort(th.begin(), th.end());
    for (int i = 0; i < p; ++i) EXPECT_NEAR(est.thetas_deg[static_cast<std::size_t>(i)], th[static_cast<std::size_t>(i)], 1e-6);
  }
}

TEST(Esprit, ScaleInvariant) {
  const CMatrix t = atoms_toeplitz(4, {-23.0, 17.0}, {4.0, 1.0}) + 0.01 * CMatrix::Identity(13, 13);
  const auto a = esprit(t, 2);
  const auto b = esprit(1e4 * t, 2);
  EXPECT_NEAR(a.thetas_deg[0], b.thetas_deg[0], 1e-9);
  EXPECT_NEAR(a.thetas_deg[1], b.thetas_deg[1], 1e-9);
}

TEST(Esprit, RejectsBadOrder) {
  EXPECT_THROW(esprit(CMatrix::Identity(5, 5), 0), std::invalid_argument);
  EXPECT_THROW(esprit(CMatrix::Identity(5, 5), 5), std::invalid_argument);
}

TEST(FocMusic, PopulationPeaks) {
  const auto ops = reduction_operators(4);
  const RcFocMatrix r4 = rc_foc(population_c4(manifold(make_ula(4), {-23.0, 17.0}), RVector::Constant(2, 4.0)), ops);
  const auto res = foc_music(r4, 2, 0.01);
  ASSERT_FALSE(res.shortfall);
  ASSERT_EQ(res.estimates.p(), 2);
  EXPECT_NEAR(res.estimates.thetas_deg[0], -23.0, 0.01);
  EXPECT_NEAR(res.estimates.thetas_deg[1], 17.0, 0.01);
}

TEST(FocMusic, PoleOnExactGridPoint) {
  // grid step 1 contains 17 and -23 exactly
  const auto ops = reduction_operators(4);
  const RcFocMatrix r4 = rc_foc(population_c4(manifold(make_ula(4), {-23.0, 17.0}), RVector::Constant(2, 4.0)), ops);
  const auto res = foc_music(r4, 2, 1.0);
  for (std::size_t i = 0; i < res.grid_deg.size(); ++i) {
    if (res.grid_deg[i] == 17.0 || res.grid_deg[i] == -23.0) EXPECT_GT(res.spectrum[i], 1e10) << res.grid_deg[i];
  }
}

TEST(FocMusic, ZeroSourcesStillReturnsSpectrum) {
  const auto ops = reduction_operators(3);
  const RcFocMatrix r4 = rc_foc(population_c4(manifold(make_ula(3), {5.0}), RVector::Ones(1)), ops);
  const auto res = foc_music(r4, 0, 0.5);
  EXPECT_TRUE(res.estimates.thetas_deg.empty());
  EXPECT_EQ(res.spectrum.size(), 359u);
  EXPECT_THROW(foc_music(r4, 5, 0.5), std::invalid_argument);
  EXPECT_THROW(foc_music(r4, 1, 0.0), std::invalid_argument);
}

TEST(MatchedErrors, SortedPairing) {
  const auto e = matched_errors({17.0, -23.0}, {-22.5, 18.0});
  ASSERT_EQ(e.size(), 2u);
  EXPECT_DOUBLE_EQ(e[0], 0.5);
  EXPECT_DOUBLE_EQ(e[1], 1.0);
  EXPECT_TRUE(matched_errors({1.0}, {1.0, 2.0}).empty());
}
