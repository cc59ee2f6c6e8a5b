#include <gtest/gtest.h>

#include <random>

#include "focanm/anm_solver.hpp"
#include "focanm/doa_retrieval.hpp"

using namespace focanm;

namespace {

CMatrix random_hermitian(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  CMatrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = cdouble(nd(rng), nd(rng));
  return (a + a.adjoint()) * 0.5;
}

CVector random_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  CVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = cdouble(nd(rng), nd(rng));
  return v;
}

AnmProblem noiseless_problem() {
  return AnmProblem{population_smv(4, {-23.0, 17.0}, RVector::Constant(2, 4.0)), identity_whitening(13, 1e-10)};
}

}  // namespace

TEST(Toeplitz, HermitianWithGivenFirstColumn) {
  CVector mu(3);
  mu << 2.0, cdouble(1, 1), cdouble(0, -0.5);
  const CMatrix t = toeplitz(mu);
  EXPECT_EQ(t(2, 0), mu(2));
  EXPECT_EQ(t(0, 2), std::conj(mu(2)));
  EXPECT_EQ(t(2, 1), mu(1));
  EXPECT_LT((t - t.adjoint()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(PsdProject, FixedPointsAndClosedForm) {
  std::mt19937_64 rng(1);
  const CMatrix a = random_hermitian(5, rng);
  const CMatrix psd = a * a + CMatrix::Identity(5, 5);
  EXPECT_LT((psd_project(psd) - psd).cwiseAbs().maxCoeff(), 1e-12 * psd.norm());
  CMatrix d = CMatrix::Zero(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = -1.0;
  CMatrix expected = CMatrix::Zero(2, 2);
  expected(0, 0) = 1.0;
  EXPECT_LT((psd_project(d) - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(PsdProject, DistanceIsNegativeSpectrum) {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 10; ++k) {
    const CMatrix m = random_hermitian(6, rng);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(m, Eigen::EigenvaluesOnly);
    const double neg = es.eigenvalues().cwiseMin(0.0).norm();
    EXPECT_NEAR((psd_project(m) - m).norm(), neg, 1e-12 * std::max(1.0, neg));
  }
}

TEST(EllipsoidProject, FeasiblePointUnchanged) {
  std::mt19937_64 rng(3);
  const CVector z = random_vector(4, rng);
  const CVector v = z + 0.01 * random_vector(4, rng);
  const auto wm = identity_whitening(4, 1.0);
  EXPECT_EQ(ellipsoid_project(v, z, wm, 1.0), v);
}

TEST(EllipsoidProject, UnitBall) {
  CVector v = CVector::Zero(5);
  v(0) = 2.0;
  CVector expected = CVector::Zero(5);
  expected(0) = 1.0;
  EXPECT_LT((ellipsoid_project(v, CVector::Zero(5), identity_whitening(5, 1.0), 1.0) - expected).norm(), 1e-12);
}

TEST(EllipsoidProject, KktConditions) {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 20; ++k) {
    const Eigen::Index n = 3 + k % 5;
    const CMatrix a = random_hermitian(n, rng);
    const CMatrix sigma = a * a + 0.05 * CMatrix::Identity(n, n);
    const WhiteningModel wm = whitener(sigma, 0.0);
    const CVector z = random_vector(n, rng);
    const CVector v = z + 3.0 * random_vector(n, rng);
    const double eta = 0.5;
    const CVector x = ellipsoid_project(v, z, wm, eta);
    const double c = wm.mahalanobis2(x - z);
    if (c < eta * (1 - 1e-9)) {
      EXPECT_EQ(x, v);
      continue;
    }
    EXPECT_NEAR(c, eta, 1e-9 * eta);
    const CMatrix metric = wm.eigvecs * wm.metric_eigs.cast<cdouble>().asDiagonal() * wm.eigvecs.adjoint();
    const CVector grad = metric * (x - z);
    const CVector r = v - x;
    // parallel and pointing outward: r = nu * grad with nu > 0
    const cdouble nu = grad.dot(r) / grad.squaredNorm();
    EXPECT_GT(nu.real(), 0.0);
    EXPECT_LT((r - nu * grad).norm(), 1e-6 * r.norm());
  }
}

TEST(SolveEtAnm, NoiselessExactRecovery) {
  const AnmProblem problem = noiseless_problem();
  const ToeplitzSolution sol = solve_et_anm(problem);
  ASSERT_TRUE(sol.converged());
  // the ellipsoid itself allows ||x - z|| up to sqrt(eta) = 1e-5
  EXPECT_LT((sol.x_hat - problem.z).norm() / problem.z.norm(), 1e-6);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(sol.t(), Eigen::EigenvaluesOnly);
  const RVector ev = es.eigenvalues().reverse();
  EXPECT_GT(ev(1) / std::max(std::abs(ev(2)), 1e-300), 1e6);
  const auto est = esprit(sol.t(), 2);
  EXPECT_NEAR(est.thetas_deg[0], -23.0, 0.01);
  EXPECT_NEAR(est.thetas_deg[1], 17.0, 0.01);
}

TEST(SolveEtAnm, ZeroMeasurement) {
  const ToeplitzSolution sol = solve_et_anm(AnmProblem{CVector::Zero(7), identity_whitening(7, 2.0)});
  EXPECT_TRUE(sol.converged());
  EXPECT_EQ(sol.x_hat, CVector::Zero(7));
  EXPECT_EQ(sol.mu, CVector::Zero(7));
  EXPECT_EQ(sol.q_hat, 0.0);
  EXPECT_EQ(sol.objective(), 0.0);
}

TEST(SolveEtAnm, HugeToleranceGivesZero) {
  std::mt19937_64 rng(5);
  const CVector z = random_vector(9, rng);
  const ToeplitzSolution sol = solve_et_anm(AnmProblem{z, identity_whitening(9, 2.0 * z.squaredNorm())});
  EXPECT_TRUE(sol.converged());
  EXPECT_LT(sol.x_hat.norm(), 1e-5 * z.norm());
  EXPECT_LT(sol.objective(), 1e-5 * z.norm());
}

TEST(SolveEtAnm, AtomicNormOfSingleAtom) {
  for (double gamma : {0.3, 4.0, 25.0}) {
    const CVector z = gamma * virtual_steering(3, 31.0);
    const ToeplitzSolution sol = solve_et_anm(AnmProblem{z, identity_whitening(z.size(), 1e-12)});
    EXPECT_TRUE(sol.converged());
    EXPECT_NEAR(sol.objective(), gamma, 1e-4 * gamma);
  }
}

TEST(SolveEtAnm, ResidualsShrinkOverDecades) {
  SolverParams params;
  params.record_history = true;
  const ToeplitzSolution sol = solve_et_anm(noiseless_problem(), params);
  ASSERT_TRUE(sol.converged());
  const auto& h = sol.residual_history;
  ASSERT_EQ(static_cast<int>(h.size()), sol.iterations);
  for (std::size_t k = 1; 10 * k <= h.size(); k *= 10) EXPECT_LE(h[10 * k - 1], 0.9 * h[k - 1]) << k;
}

TEST(SolveEtAnm, ValidatesInputs) {
  const AnmProblem problem = noiseless_problem();
  SolverParams bad;
  bad.rho = 0.0;
  EXPECT_THROW(solve_et_anm(problem, bad), std::invalid_argument);
  EXPECT_THROW(solve_et_anm(AnmProblem{CVector::Ones(5), identity_whitening(4, 1.0)}), std::invalid_argument);
  EXPECT_THROW(solve_et_anm(AnmProblem{CVector(), identity_whitening(0, 1.0)}), std::invalid_argument);
}

TEST(SolveEtAnm, BudgetExhaustionIsReported) {
  SolverParams params;
  params.max_iters = 5;
  const ToeplitzSolution sol = solve_et_anm(noiseless_problem(), params);
  EXPECT_EQ(sol.status, SolverStatus::max_iters);
  EXPECT_EQ(sol.iterations, 5);
}

TEST(VerifySolution, NoiselessMargins) {
  const AnmProblem problem = noiseless_problem();
  const ToeplitzSolution sol = solve_et_anm(problem);
  const auto rep = verify_solution(sol, problem);
  EXPECT_GE(rep.min_block_eigenvalue, -1e-7);
  EXPECT_GE(rep.slack, -1e-6 * problem.eta());
  EXPECT_TRUE(rep.feasible());
}

TEST(VerifySolution, FlagsNegatedToeplitz) {
  const AnmProblem problem = noiseless_problem();
  ToeplitzSolution sol = solve_et_anm(problem);
  sol.mu = -sol.mu;
  const auto rep = verify_solution(sol, problem);
  EXPECT_FALSE(rep.psd_ok);
  EXPECT_FALSE(rep.feasible());
}

TEST(VerifySolution, NoWorseThanHandBuiltFeasiblePoint) {
  // x = z, T = ||z|| I, q = ||z|| is feasible with objective ||z||.
  std::mt19937_64 rng(6);
  for (int k = 0; k < 5; ++k) {
    const CVector z = random_vector(7, rng);
    const CMatrix a = random_hermitian(7, rng);
    WhiteningModel wm = whitener(a * a + 0.1 * CMatrix::Identity(7, 7), 0.0);
    wm.eta = 0.3 * wm.mahalanobis2(z);
    const AnmProblem problem{z, wm};
    const ToeplitzSolution sol = solve_et_anm(problem);
    const auto rep = verify_solution(sol, problem, z.norm());
    EXPECT_TRUE(rep.feasible());
    EXPECT_LE(*rep.objective_gap, 1e-4);
  }
}
