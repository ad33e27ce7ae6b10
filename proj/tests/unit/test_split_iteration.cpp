#include <gtest/gtest.h>

#include "lsqctrl/initial_data.hpp"
#include "lsqctrl/split_iteration.hpp"
#include "stokes_fixture.hpp"

using namespace lsqctrl;
using namespace testing_support;

namespace {

ControlProblem bump_problem(int nx, int ny, int nt) {
  const SpaceTimeGrid st(nx, ny, nt);
  return ControlProblem{st, 1.0, polynomial_bump_velocity(st.space()), SupportMask{0, 0.4, 0, 1, std::nullopt},
                        Mode::null_control, 0.0, Metric::a0_exact, {}};
}

VectorXd masked(const ControlProblem& p, const VectorXd& f) { return f.cwiseProduct(p.mask.weights(p.grid)); }

}  // namespace

TEST(PressureFunctional, ForwardSolveHasZeroResidual) {
  std::mt19937_64 rng(41);
  ControlProblem p = bump_problem(6, 5, 7);
  p.forcing = random_vector(rng, p.grid.interval_velocity_size());
  const PressureFunctional gf(p);
  const VectorXd pi = random_vector(rng, p.grid.interval_cell_size());
  const VectorXd f = masked(p, random_vector(rng, p.grid.interval_velocity_size()));
  const VectorXd y = gf.forward(pi, f);
  StokesLeastSquares ls(p);
  const VectorXd r = ls.residual(Triplet{y, pi, f});
  EXPECT_LE(r.norm(), 1e-10 * (p.forcing.norm() + f.norm()));
  EXPECT_EQ((slice(y, 0, p.grid.space().n_vel()) - p.y0).norm(), 0.0);
}

TEST(PressureFunctional, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(42);
  for (int variant = 0; variant < 2; ++variant) {
    ControlProblem p = bump_problem(7, 6, 8);
    if (variant == 1) p.forcing = random_vector(rng, p.grid.interval_velocity_size());
    const PressureFunctional gf(p);
    const VectorXd f = masked(p, random_vector(rng, p.grid.interval_velocity_size()));
    const VectorXd pi = random_vector(rng, p.grid.interval_cell_size());
    const auto gr = gf.gradient(pi, f);
    EXPECT_LE(rel(gr.value, gf.value(pi, f)), 1e-14);
    for (int t = 0; t < 4; ++t) {
      const VectorXd d = random_vector(rng, pi.size());
      const double h = 1e-4;
      const double fd = (gf.value(pi + h * d, f) - gf.value(pi - h * d, f)) / (2 * h);
      EXPECT_LE(rel(fd, gf.inner(gr.pi, d)), 1e-5) << "variant " << variant;
    }
  }
}

TEST(PressureFunctional, GradientHasZeroMeanPerInterval) {
  std::mt19937_64 rng(43);
  const ControlProblem p = bump_problem(5, 6, 4);
  const PressureFunctional gf(p);
  const auto gr = gf.gradient(random_vector(rng, p.grid.interval_cell_size()), VectorXd::Zero(p.grid.interval_velocity_size()));
  const int nc = p.grid.space().n_cell();
  for (int k = 0; k < p.grid.nt(); ++k) EXPECT_LE(std::abs(slice(gr.pi, k, nc).mean()), 1e-12 * gr.pi.norm());
}

TEST(SplitIteration, OuterStepsNeverIncreaseG) {
  const ControlProblem p = bump_problem(8, 8, 8);
  SplitConfig cfg;
  cfg.max_outer = 8;
  cfg.inner.max_iter = 40;
  const auto r = split_iteration(p, cfg);
  ASSERT_EQ(r.outer.size(), 9u);
  int steps = 0;
  for (const auto& rec : r.outer) {
    EXPECT_LE(rec.g_after, rec.g_before) << "outer " << rec.outer;
    if (rec.step > 0) ++steps;
  }
  EXPECT_EQ(steps, 8);
  EXPECT_LT(r.outer[0].g_after, r.outer[0].g_before);
  StokesLeastSquares ls(p);
  const auto d = ls.diagnostics(r.state);
  EXPECT_EQ(d.initial_trace_error, 0.0);
  EXPECT_EQ(d.final_trace_norm, 0.0);
  EXPECT_LE(d.max_pressure_mean, 1e-12);
}

TEST(SplitIteration, ZeroDataTerminatesImmediately) {
  ControlProblem p = bump_problem(6, 6, 6);
  p.y0.setZero();
  const auto r = split_iteration(p, SplitConfig{});
  ASSERT_EQ(r.outer.size(), 1u);
  EXPECT_EQ(r.reason, SplitStop::g_tol);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.outer[0].inner_iterations, 0);
  EXPECT_EQ(r.state.y.norm() + r.state.pi.norm() + r.state.f.norm(), 0.0);
}

TEST(SplitIteration, JointDescentPressureIsStationary) {
  // With omega = Omega the curl bump is steered to rest exactly, the joint descent
  // drives E to zero, and div y = 0 makes G' vanish with it.
  ControlProblem p = small_null_problem(6, 6, 6);
  p.mask = SupportMask::whole(p.grid.space());
  StokesLeastSquares ls(p);
  DescentConfig cfg;
  cfg.max_iter = 6000;
  const auto joint = descend(ls, cfg);
  const PressureFunctional gf(p);
  const auto at_joint = gf.gradient(joint.state.pi, joint.state.f);
  const auto at_zero = gf.gradient(VectorXd::Zero(joint.state.pi.size()), joint.state.f);
  const double ratio = std::sqrt(gf.inner(at_joint.pi, at_joint.pi) / gf.inner(at_zero.pi, at_zero.pi));
  EXPECT_LE(ratio, 1e-3);

  SplitConfig sc;
  sc.max_outer = 3;
  sc.inner.max_iter = 20;
  const auto r = split_iteration(p, sc, joint.state);
  const double moved = std::sqrt(gf.inner(r.state.pi - joint.state.pi, r.state.pi - joint.state.pi));
  const double scale = std::sqrt(gf.inner(joint.state.pi, joint.state.pi));
  EXPECT_LE(moved, 1e-3 * scale);
  EXPECT_LE(r.outer.back().g_after, at_joint.value);
}

TEST(SplitIteration, RejectsDirectMode) {
  ControlProblem p = bump_problem(4, 4, 4);
  p.mode = Mode::direct;
  EXPECT_THROW(split_iteration(p, SplitConfig{}), InputError);
}
