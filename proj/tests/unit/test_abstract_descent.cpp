#include <gtest/gtest.h>

#include <chrono>
#include <random>

#include "lsqctrl/abstract_descent.hpp"
#include "lsqctrl/oracles/random_lsq.hpp"
#include "support.hpp"

using namespace lsqctrl;
using namespace testing_support;
using abstract::LsqProblem;
using Eigen::MatrixXd;

namespace {

double h_norm(const LsqProblem& p, const VectorXd& c) { return std::sqrt(c.dot(p.h_gram() * c)); }

DescentConfig tight() {
  DescentConfig cfg;
  cfg.max_iter = 5000;
  cfg.tol_grad = 1e-13;
  return cfg;
}

}  // namespace

TEST(AbstractDescent, SeededInstancesMatchOracle) {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 shapes(2024);
  int with_kernel = 0;
  for (int seed = 0; seed < 120; ++seed) {
    const auto shape = oracles::random_shape(shapes);
    const LsqProblem p = oracles::random_lsq(1000 + seed, shape);
    const VectorXd ubar = abstract::oracle_minimizer(p);
    const MatrixXd kb = abstract::kernel_basis(p);
    const MatrixXd gh = p.h_gram();
    if (kb.cols() > 0) ++with_kernel;
    EXPECT_EQ(kb.cols(), shape.h_dim - shape.rank) << "seed " << seed;

    double prev_e = std::numeric_limits<double>::infinity(), prev_d = prev_e, g0 = -1;
    const auto report = steepest_descent(
        abstract::DenseDescentProblem(p), VectorXd::Zero(p.h_dim()), tight(),
        [&](const VectorXd& u, const IterationRecord& rec) {
          EXPECT_LE(rec.energy, prev_e * (1 + 1e-14) + 1e-300) << "seed " << seed;
          const double d = h_norm(p, u - ubar);
          EXPECT_LE(d, prev_d * (1 + 1e-12) + 1e-11 * std::max(1.0, h_norm(p, ubar))) << "seed " << seed;
          prev_e = rec.energy;
          prev_d = d;
          const VectorXd g = abstract::gradient(p, u);
          // Orthogonality is measured against the gradient scale of the problem;
          // near convergence |g_k| itself is at roundoff.
          if (g0 < 0) g0 = h_norm(p, g);
          const double scale = std::max(h_norm(p, g), g0);
          for (Eigen::Index j = 0; j < kb.cols(); ++j)
            EXPECT_LE(std::abs(kb.col(j).dot(gh * g)), 1e-10 * scale * h_norm(p, kb.col(j)))
                << "seed " << seed;
        });
    EXPECT_TRUE(report.converged) << "seed " << seed;
    EXPECT_LE(h_norm(p, report.final_u - ubar), 1e-8 * std::max(1.0, h_norm(p, ubar))) << "seed " << seed;
  }
  EXPECT_GT(with_kernel, 20);
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 5.0);
}

TEST(AbstractDescent, MinimizerLiesInComplementOfKernel) {
  for (int seed = 0; seed < 20; ++seed) {
    const LsqProblem p = oracles::random_lsq(seed, {12, 9, 10, 6});
    const auto proj = abstract::kernel_projector(p);
    EXPECT_EQ(proj.kernel_dim, 4);
    const VectorXd ubar = abstract::oracle_minimizer(p);
    EXPECT_LE((proj.onto_kernel * ubar).norm(), 1e-10 * ubar.norm());
  }
}

TEST(AbstractDescent, ProjectorIsOrthogonalInMetric) {
  const LsqProblem p = oracles::random_lsq(7, {15, 10, 12, 7});
  const auto proj = abstract::kernel_projector(p);
  const MatrixXd gh = p.h_gram();
  const MatrixXd& pa = proj.onto_kernel;
  EXPECT_LE((pa * pa - pa).norm(), 1e-10);
  EXPECT_LE((gh * pa - (gh * pa).transpose()).norm(), 1e-10 * gh.norm());
  EXPECT_LE((p.t_on_h() * pa).norm(), 1e-10 * p.t_on_h().norm());
  EXPECT_LE((pa + proj.onto_complement - MatrixXd::Identity(12, 12)).norm(), 1e-14);
}

TEST(AbstractDescent, KernelShiftLeavesEnergyUnchanged) {
  std::mt19937_64 rng(3);
  const LsqProblem p = oracles::random_lsq(8, {20, 15, 14, 9});
  const MatrixXd kb = abstract::kernel_basis(p);
  ASSERT_EQ(kb.cols(), 5);
  for (int t = 0; t < 10; ++t) {
    const VectorXd u = random_vector(rng, p.h_dim()), a = kb * random_vector(rng, kb.cols());
    EXPECT_LE(rel(abstract::energy(p, u + a), abstract::energy(p, u)), 1e-12);
  }
}

TEST(AbstractDescent, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  const LsqProblem p = oracles::random_lsq(9, {10, 8, 7, 5});
  const VectorXd u = random_vector(rng, p.h_dim()), d = random_vector(rng, p.h_dim());
  const double h = 1e-5;
  const double fd = (abstract::energy(p, u + h * d) - abstract::energy(p, u - h * d)) / (2 * h);
  const double claimed = abstract::gradient(p, u).dot(p.h_gram() * d);
  EXPECT_LE(rel(fd, claimed), 1e-8);
}

TEST(AbstractDescent, StopReasons) {
  const LsqProblem p = oracles::random_lsq(10, {8, 6, 6, 6});
  DescentConfig cfg;
  cfg.max_iter = 3;
  auto r = abstract::descend(p, VectorXd::Zero(6), cfg);
  EXPECT_EQ(r.reason, StopReason::max_iter);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterates_count, 3);
  EXPECT_EQ(r.energies.size(), 4u);

  cfg.max_iter = 10000;
  cfg.tol_energy = 0.5 * r.energies.back();
  r = abstract::descend(p, VectorXd::Zero(6), cfg);
  EXPECT_EQ(r.reason, StopReason::energy_tol);
  EXPECT_LE(r.energies.back(), cfg.tol_energy);

  cfg.tol_energy = 0;
  cfg.tol_grad = 1e-3;
  r = abstract::descend(p, VectorXd::Zero(6), cfg);
  EXPECT_EQ(r.reason, StopReason::grad_tol);
  EXPECT_LE(r.grad_norms.back(), 1e-3 * r.grad_norms.front());

  // The whitened singular values are at most 1, so |T g| / |g| <= 1 always.
  cfg.tol_grad = 0;
  cfg.tol_kernel = 1.01;
  r = abstract::descend(p, VectorXd::Zero(6), cfg);
  EXPECT_EQ(r.reason, StopReason::kernel_stall);
  EXPECT_EQ(r.iterates_count, 0);
  EXPECT_LE(r.trace.front().kernel_ratio, 1.0 + 1e-12);
  EXPECT_GE(r.trace.front().kernel_ratio, 0.3 - 1e-12);
}

TEST(AbstractDescent, StartingAtMinimizerStopsImmediately) {
  // T is onto Y here, so the minimum is zero.
  const LsqProblem p = oracles::random_lsq(11, {9, 9, 9, 9});
  const VectorXd ubar = abstract::oracle_minimizer(p);
  EXPECT_LE(abstract::energy(p, ubar), 1e-24);
  DescentConfig cfg;
  cfg.tol_energy = 1e-20;
  const auto r = abstract::descend(p, ubar, cfg);
  EXPECT_EQ(r.iterates_count, 0);
  EXPECT_EQ(r.reason, StopReason::energy_tol);
}

TEST(AbstractDescent, FixedStepRule) {
  const LsqProblem p = oracles::random_lsq(12, {10, 8, 8, 6});
  DescentConfig cfg;
  cfg.step_rule = StepRule::fixed;
  cfg.fixed_step = 0.2;
  cfg.max_iter = 50;
  const auto r = abstract::descend(p, VectorXd::Zero(8), cfg);
  for (std::size_t k = 1; k < r.energies.size(); ++k) EXPECT_LE(r.energies[k], r.energies[k - 1]);
  for (const auto& rec : r.trace) {
    if (rec.iter < r.iterates_count) {
      EXPECT_EQ(rec.step, 0.2);
    }
  }
}

TEST(AbstractDescent, ZeroOperatorIsAlreadyOptimal) {
  LsqProblem p = oracles::random_lsq(13, {6, 4, 4, 0});
  p.t_map.setZero();
  const auto r = abstract::descend(p, VectorXd::Zero(4), DescentConfig{});
  EXPECT_EQ(r.iterates_count, 0);
  EXPECT_EQ(r.reason, StopReason::energy_tol);
}

TEST(AbstractDescent, RejectsMalformedInput) {
  const LsqProblem p = oracles::random_lsq(14, {6, 4, 4, 2});
  EXPECT_THROW(abstract::energy(p, VectorXd::Zero(5)), InputError);
  EXPECT_THROW(abstract::descend(p, VectorXd::Zero(3), DescentConfig{}), InputError);
  DescentConfig bad;
  bad.max_iter = -1;
  EXPECT_THROW(abstract::descend(p, VectorXd::Zero(4), bad), InputError);
  LsqProblem q = p;
  q.h_basis.col(1) = q.h_basis.col(0);
  EXPECT_THROW(q.validate(), InputError);
  EXPECT_THROW(abstract::InnerProductSpace(-MatrixXd::Identity(3, 3)), InputError);
  MatrixXd asym = MatrixXd::Identity(3, 3);
  asym(0, 1) = 0.5;
  EXPECT_THROW(abstract::InnerProductSpace{asym}, InputError);
}
