#include <gtest/gtest.h>

#include "focanm/cumulants.hpp"
#include "focanm/signal_sim.hpp"

using namespace focanm;

namespace {

struct StreamMoments {
  cdouble mean = 0.0;
  double m2 = 0.0;
  double m4 = 0.0;
  double m8 = 0.0;
  cdouble pseudo = 0.0;  // E s^2
};

StreamMoments moments(const CMatrix& s, Eigen::Index row) {
  StreamMoments out;
  const double j = static_cast<double>(s.cols());
  for (Eigen::Index t = 0; t < s.cols(); ++t) {
    const cdouble v = s(row, t);
    const double p = std::norm(v);
    out.mean += v;
    out.m2 += p;
    out.m4 += p * p;
    out.m8 += p * p * p * p;
    out.pseudo += v * v;
  }
  out.mean /= j;
  out.m2 /= j;
  out.m4 /= j;
  out.m8 /= j;
  out.pseudo /= j;
  return out;
}

}  // namespace

TEST(GenSources, MeanAndPower) {
  const CMatrix s = gen_sources(SourceConfig{{-23.0, 17.0}, 2.0}, 100000, 3);
  ASSERT_EQ(s.rows(), 2);
  for (Eigen::Index p = 0; p < 2; ++p) {
    const auto m = moments(s, p);
    EXPECT_LT(std::abs(m.mean), 0.05 * std::sqrt(2.0));
    EXPECT_NEAR(m.m2, 2.0, 0.05 * 2.0);
  }
}

TEST(GenSources, FourthOrderCumulantIsFourSigmaToTheFourth) {
  const double sigma2 = 1.5;
  const CMatrix s = gen_sources(SourceConfig{{0.0}, sigma2}, 1000000, 17);
  const auto m = moments(s, 0);
  const double gamma = m.m4 - 2.0 * m.m2 * m.m2 - std::norm(m.pseudo);
  EXPECT_NEAR(gamma, 4.0 * sigma2 * sigma2, 0.03 * 4.0 * sigma2 * sigma2);
}

TEST(GenSources, KurtosisFarFromGaussian) {
  const CMatrix s = gen_sources(SourceConfig{{0.0, 30.0}}, 100000, 8);
  for (Eigen::Index p = 0; p < 2; ++p) {
    const auto m = moments(s, p);
    const double kurt = m.m4 / (m.m2 * m.m2);
    // delta-method standard error of m4 dominates that of m2^2 here
    const double se = std::sqrt((m.m8 - m.m4 * m.m4) / static_cast<double>(s.cols())) / (m.m2 * m.m2);
    EXPECT_GT(std::abs(kurt - 2.0), 10.0 * se) << "kurtosis " << kurt << " se " << se;
  }
}

TEST(GenSources, Deterministic) {
  const SourceConfig cfg{{-23.0, 17.0}};
  EXPECT_EQ(gen_sources(cfg, 500, 42), gen_sources(cfg, 500, 42));
  EXPECT_NE(gen_sources(cfg, 500, 42), gen_sources(cfg, 500, 43));
  EXPECT_THROW(gen_sources(SourceConfig{{}}, 10, 1), std::invalid_argument);
}

TEST(GenColoredNoise, WhiteFilterGivesScaledIdentity) {
  NoiseConfig cfg;
  cfg.ar_coeffs = {1.0};
  cfg.sigma_n2 = 0.7;
  const CMatrix n = gen_colored_noise(make_ula(4), 100000, cfg, 5);
  const CMatrix r = n * n.adjoint() / static_cast<double>(n.cols());
  EXPECT_LT((r - 0.7 * CMatrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 0.05 * 0.7);
}

TEST(GenColoredNoise, Ar2LagOneCorrelation) {
  // Yule-Walker for n_k = n_{k-1} - 0.8 n_{k-2} + w_k: rho_1 = 1 / 1.8
  NoiseConfig cfg;
  const CMatrix n = gen_colored_noise(make_ula(6), 100000, cfg, 9);
  const CMatrix r = n * n.adjoint() / static_cast<double>(n.cols());
  double lag0 = 0.0;
  cdouble lag1 = 0.0;
  for (int i = 0; i < 6; ++i) lag0 += r(i, i).real() / 6.0;
  for (int i = 0; i + 1 < 6; ++i) lag1 += r(i + 1, i) / 5.0;
  EXPECT_NEAR(lag0, 1.0, 0.05);
  EXPECT_NEAR(lag1.real() / lag0, 1.0 / 1.8, 0.01);
  EXPECT_NEAR(lag1.imag() / lag0, 0.0, 0.01);
}

TEST(GenColoredNoise, PowerGainOfAr2) {
  // gamma_0 = (1 - phi2) / ((1 + phi2)((1 - phi2)^2 - phi1^2)) with phi1 = 1, phi2 = -0.8
  const double phi1 = 1.0, phi2 = -0.8;
  const double g0 = (1 - phi2) / ((1 + phi2) * ((1 - phi2) * (1 - phi2) - phi1 * phi1));
  EXPECT_NEAR(ar_power_gain({1.0, -1.0, 0.8}), g0, 1e-9);
  EXPECT_DOUBLE_EQ(ar_power_gain({1.0}), 1.0);
}

TEST(GenColoredNoise, RejectsUnstableOrMalformedFilters) {
  NoiseConfig cfg;
  cfg.ar_coeffs = {1.0, -2.0, 1.5};
  EXPECT_THROW(gen_colored_noise(make_ula(4), 10, cfg, 1), std::invalid_argument);
  cfg.ar_coeffs = {2.0, 0.5};
  EXPECT_THROW(gen_colored_noise(make_ula(4), 10, cfg, 1), std::invalid_argument);
  cfg.ar_coeffs = {1.0};
  cfg.sigma_n2 = -1.0;
  EXPECT_THROW(gen_colored_noise(make_ula(4), 10, cfg, 1), std::invalid_argument);
}

TEST(GenColoredNoise, FourthOrderCumulantVanishes) {
  NoiseConfig cfg;
  auto mean_norm = [&](long j) {
    double s = 0.0;
    for (int t = 0; t < 10; ++t) s += sample_c4(gen_colored_noise(make_ula(3), j, cfg, derive_seed(77, j + t))).data.norm();
    return s / 10.0;
  };
  const double ratio = mean_norm(1000) / mean_norm(10000);
  EXPECT_GT(ratio, 2.0);
  EXPECT_LT(ratio, 5.0);
}

TEST(GenSnapshots, NoiselessBroadsideSource) {
  NoiseConfig noise;
  noise.sigma_n2 = 0.0;
  const auto y = gen_snapshots(make_ula(4), SourceConfig{{0.0}}, noise, 50, 21);
  const CMatrix s = gen_sources(SourceConfig{{0.0}}, 50, derive_seed(21, 1));
  for (Eigen::Index t = 0; t < 50; ++t) EXPECT_LT((y.data.col(t) - CVector::Constant(4, s(0, t))).norm(), 1e-14);
}

TEST(GenSnapshots, TwoSourceCovarianceRank) {
  NoiseConfig noise;
  noise.sigma_n2 = 0.0;
  const auto y = gen_snapshots(make_ula(4), SourceConfig{{-23.0, 17.0}}, noise, 300, 4);
  const CMatrix r = y.data * y.data.adjoint() / 300.0;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(r, Eigen::EigenvaluesOnly);
  const RVector ev = es.eigenvalues();
  int rank = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) rank += ev(i) > 1e-10 * ev.maxCoeff();
  EXPECT_GE(rank, 2);
}

TEST(GenSnapshots, ZeroDbMeansEqualPowers) {
  NoiseConfig noise;
  noise.sigma_n2 = noise_power_from_snr(0.0);
  const std::uint64_t seed = 31;
  const long j = 100000;
  const auto geom = make_ula(4);
  const auto y = gen_snapshots(geom, SourceConfig{{10.0}}, noise, j, seed);
  const CMatrix signal = manifold(geom, {10.0}) * gen_sources(SourceConfig{{10.0}}, j, derive_seed(seed, 1));
  const double ps = signal.squaredNorm() / static_cast<double>(j * 4);
  const double pn = (y.data - signal).squaredNorm() / static_cast<double>(j * 4);
  EXPECT_NEAR(ps / pn, 1.0, 0.05);
}

TEST(GenSnapshots, SlaIsRestrictionOfFullAperture) {
  NoiseConfig noise;
  noise.sigma_n2 = 0.3;
  const SourceConfig src{{-23.0, 17.0}};
  const auto sla = make_geometry({1, 2, 5, 7});
  const auto full = gen_snapshots(make_ula(7), src, noise, 200, 12);
  const auto part = gen_snapshots(sla, src, noise, 200, 12);
  const CMatrix restricted = selection_matrix(sla).cast<cdouble>() * full.data;
  EXPECT_LT((restricted - part.data).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(GenSnapshots, DeterministicAndValidated) {
  NoiseConfig noise;
  const SourceConfig src{{-23.0, 17.0}};
  EXPECT_EQ(gen_snapshots(make_ula(4), src, noise, 100, 3).data, gen_snapshots(make_ula(4), src, noise, 100, 3).data);
  EXPECT_THROW(gen_snapshots(make_ula(4), SourceConfig{{10.0, 10.0}}, noise, 10, 1), std::invalid_argument);
  EXPECT_THROW(gen_snapshots(make_ula(4), SourceConfig{{95.0}}, noise, 10, 1), std::invalid_argument);
}

TEST(NoisePower, FromSnr) {
  EXPECT_DOUBLE_EQ(noise_power_from_snr(0.0), 1.0);
  EXPECT_NEAR(noise_power_from_snr(10.0), 0.1, 1e-15);
  EXPECT_NEAR(noise_power_from_snr(-6.0, 2.0), 2.0 * std::pow(10.0, 0.6), 1e-12);
}
