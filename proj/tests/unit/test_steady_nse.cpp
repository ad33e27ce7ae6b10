#include <gtest/gtest.h>

#include <random>

#include "lsqctrl/oracles/fd_check.hpp"
#include "lsqctrl/oracles/manufactured.hpp"
#include "lsqctrl/oracles/newton_nse.hpp"
#include "lsqctrl/steady_nse.hpp"
#include "support.hpp"

using namespace lsqctrl;
using namespace testing_support;

namespace {

SteadyState random_state(const Grid2& g, std::mt19937_64& rng, double scale = 1.0) {
  SteadyState s{scale * random_vector(rng, g.n_vel()), scale * random_vector(rng, g.n_cell())};
  stencil::remove_mean(s.pi);
  return s;
}

SteadyProblem random_problem(const Grid2& g, std::mt19937_64& rng, double eps = 0.0) {
  return SteadyProblem{g, 0.7, random_vector(rng, g.n_vel()), eps};
}

// Max over faces at least `ring` cells away from the wall.
double interior_max(const Grid2& g, const VectorXd& w, int ring) {
  const Layout lu = g.layout(Stagger::face_x), lv = g.layout(Stagger::face_y);
  double m = 0;
  for (int j = ring; j < lu.cols - ring; ++j)
    for (int i = ring; i < lu.rows - ring; ++i) m = std::max(m, std::abs(w(lu.index(i, j))));
  for (int j = ring; j < lv.cols - ring; ++j)
    for (int i = ring; i < lv.rows - ring; ++i) m = std::max(m, std::abs(w(g.n_u() + lv.index(i, j))));
  return m;
}

double h1l2_distance(const SteadyLeastSquares& ls, const SteadyState& a, const SteadyState& b) {
  return std::sqrt(ls.norm_sq(a - b));
}

}  // namespace

TEST(Convection, ZeroAdvectingFieldGivesZero) {
  std::mt19937_64 rng(51);
  const Grid2 g(6, 5);
  EXPECT_EQ(stencil::convection(g, random_vector(rng, g.n_vel()), VectorXd::Zero(g.n_vel())).norm(), 0.0);
}

TEST(Convection, ConstantFieldsGiveZeroAwayFromWalls) {
  const Grid2 g(9, 8);
  const VectorXd y = stencil::sample_velocity(g, [](double, double) { return 0.7; }, [](double, double) { return -0.3; });
  const VectorXd z = stencil::sample_velocity(g, [](double, double) { return 1.1; }, [](double, double) { return 0.4; });
  EXPECT_LE(interior_max(g, stencil::convection(g, y, z), 2), 1e-12);
}

TEST(Convection, ProductRuleIdentityConvergesAtSecondOrder) {
  auto fields = [](const Grid2& g) {
    const VectorXd y = stencil::sample_velocity(
        g, [](double x, double y) { return std::sin(2 * x + 1) * std::cos(y); },
        [](double x, double y) { return std::exp(0.5 * x) * std::sin(3 * y); });
    const VectorXd z = stencil::sample_velocity(
        g, [](double x, double y) { return std::cos(x - y); }, [](double x, double y) { return x * x + std::sin(y); });
    return std::pair{y, z};
  };
  std::vector<double> err;
  for (int n : {15, 31, 63}) {
    const Grid2 g(n, n);
    const auto [y, z] = fields(g);
    err.push_back(interior_max(g, stencil::convection(g, y, z) - stencil::convection_nonconservative(g, y, z), 2));
  }
  EXPECT_GE(std::log2(err[0] / err[1]), 1.8);
  EXPECT_GE(std::log2(err[1] / err[2]), 1.8);
}

TEST(Convection, SummationByPartsIsExact) {
  std::mt19937_64 rng(52);
  const Grid2 g(7, 6, 1.2, 0.9);
  for (int t = 0; t < 5; ++t) {
    const VectorXd y = random_vector(rng, g.n_vel()), z = random_vector(rng, g.n_vel()), p = random_vector(rng, g.n_vel());
    const double lhs = stencil::inner(g, stencil::convection(g, y, z) + stencil::convection(g, z, y), p);
    const double rhs = -(stencil::tensor_contraction(g, y, z, p) + stencil::tensor_contraction(g, z, y, p));
    EXPECT_LE(std::abs(lhs - rhs), 1e-10 * std::abs(lhs));
  }
}

TEST(Convection, AdjointIsTransposeOfLinearization) {
  std::mt19937_64 rng(53);
  const Grid2 g(6, 7);
  const VectorXd y = random_vector(rng, g.n_vel()), p = random_vector(rng, g.n_vel());
  const VectorXd w = stencil::convection_adjoint(g, y, p);
  for (int t = 0; t < 5; ++t) {
    const VectorXd d = random_vector(rng, g.n_vel());
    const double lhs = stencil::inner(g, w, d);
    const double rhs = stencil::inner(g, stencil::convection(g, y, d) + stencil::convection(g, d, y), p);
    EXPECT_LE(std::abs(lhs - rhs), 1e-12 * (std::abs(lhs) + 1));
  }
}

TEST(Convection, DenseAssemblyAgrees) {
  std::mt19937_64 rng(54);
  const Grid2 g(6, 5, 1.3, 0.8);
  const oracles::DenseNse dn(random_problem(g, rng));
  const VectorXd y = random_vector(rng, g.n_vel()), d = random_vector(rng, g.n_vel());
  const VectorXd c = stencil::convection(g, y, y);
  EXPECT_LE((dn.convection(y) - c).norm(), 1e-12 * c.norm());
  const VectorXd lin = stencil::convection(g, y, d) + stencil::convection(g, d, y);
  EXPECT_LE((dn.convection_jacobian(y) * d - lin).norm(), 1e-12 * lin.norm());
}

TEST(SteadyCorrector, ZeroStateAndDataGiveZero) {
  const Grid2 g(5, 6);
  SteadyLeastSquares ls(SteadyProblem{g, 1.0, VectorXd::Zero(g.n_vel()), 0.0});
  const auto c = ls.corrector(SteadyState::zeros(g));
  EXPECT_EQ(c.v.norm(), 0.0);
  EXPECT_EQ(ls.energy(SteadyState::zeros(g)), 0.0);
}

TEST(SteadyCorrector, MatchesDenseSolve) {
  std::mt19937_64 rng(55);
  const Grid2 g(6, 6);
  const SteadyProblem p = random_problem(g, rng);
  SteadyLeastSquares ls(p);
  const oracles::DenseNse dn(p);
  for (int t = 0; t < 3; ++t) {
    const SteadyState s = random_state(g, rng);
    const auto c = ls.corrector(s);
    const VectorXd vd = dn.corrector(s);
    EXPECT_LE((c.v - vd).norm(), 1e-10 * vd.norm());
    EXPECT_LE(c.weak_residual_norm, 1e-10);
    EXPECT_LE(c.bound_ratio, std::sqrt(2.0) + 1e-12);
    EXPECT_LE(rel(ls.energy(s), dn.energy(s)), 1e-10);
  }
}

TEST(SteadyCorrector, ManufacturedSolutionIsSecondOrder) {
  std::vector<double> h1, en;
  for (int n : {7, 15, 31}) {
    const Grid2 g(n, n);
    const auto c = oracles::ManufacturedCase::steady();
    const auto ms = oracles::manufactured_steady(c, g, 1.0);
    SteadyLeastSquares ls(oracles::manufactured_steady_problem(c, g, 1.0));
    const VectorXd v = ls.corrector(ms.exact).v;
    h1.push_back(std::sqrt(stencil::stiffness(g, v)));
    en.push_back(ls.energy(ms.exact));
  }
  for (int k = 0; k < 2; ++k) {
    EXPECT_GE(std::log2(h1[k] / h1[k + 1]), 1.8) << k;
    EXPECT_GE(std::log2(en[k] / en[k + 1]), 3.6) << k;
  }
}

TEST(SteadyEnergy, EpsilonTermCancelsAgainstPressure) {
  std::mt19937_64 rng(56);
  const Grid2 g(6, 7);
  const double eps = 0.05;
  SteadyState s{random_vector(rng, g.n_vel()), VectorXd()};
  s.pi = -stencil::divergence(g, s.y) / eps;
  SteadyProblem p{g, 1.0, VectorXd::Zero(g.n_vel()), eps};
  p.f = SteadyLeastSquares(p).residual(s, false);
  SteadyLeastSquares ls(p);
  EXPECT_LE(std::abs(s.pi.mean()), 1e-12);
  EXPECT_LE(ls.divergence_term(s).norm(), 1e-12 * s.pi.norm() * eps);
  EXPECT_LE(ls.energy(s), 1e-20 * stencil::stiffness(g, s.y));
}

TEST(SteadyGradient, RieszProperty) {
  std::mt19937_64 rng(57);
  for (double eps : {0.0, 0.02}) {
    const Grid2 g(7, 6, 1.1, 0.9);
    SteadyLeastSquares ls(random_problem(g, rng, eps));
    const SteadyState s = random_state(g, rng);
    const SteadyState grad = ls.gradient(s);
    for (int t = 0; t < 5; ++t) {
      const SteadyState d = random_state(g, rng);
      EXPECT_LE(rel(ls.inner(grad, d), ls.first_variation(s, d)), 1e-8) << eps;
    }
  }
}

TEST(SteadyGradient, FiniteDifferenceLadder) {
  std::mt19937_64 rng(58);
  for (double eps : {0.0, 0.01}) {
    const Grid2 g(8, 8);
    SteadyLeastSquares ls(random_problem(g, rng, eps));
    const SteadyState s = random_state(g, rng, 0.5), d = random_state(g, rng);
    const double claimed = ls.inner(ls.gradient(s), d);
    const auto fd = oracles::fd_check([&](double t) { return ls.energy(s + d * t); }, claimed, {1e-4, 1e-5, 1e-6});
    EXPECT_LE(fd.best_rel_error, 1e-5) << eps;
  }
}

TEST(SteadyGradient, MatchesDenseGradient) {
  std::mt19937_64 rng(59);
  for (double eps : {0.0, 0.03}) {
    const Grid2 g(6, 6);
    const SteadyProblem p = random_problem(g, rng, eps);
    SteadyLeastSquares ls(p);
    const oracles::DenseNse dn(p);
    const SteadyState s = random_state(g, rng);
    const SteadyState a = ls.gradient(s), b = dn.gradient(s);
    EXPECT_LE(h1l2_distance(ls, a, b), 1e-8 * std::sqrt(ls.norm_sq(b))) << eps;
  }
}

TEST(SteadyGradient, VanishesAtDiscreteSolution) {
  const Grid2 g(8, 8);
  const SteadyProblem p = oracles::manufactured_steady_problem(oracles::ManufacturedCase::steady(1, 1, 0.2), g, 1.0);
  const SteadyState s = oracles::newton_nse(p);
  SteadyLeastSquares ls(p);
  const SteadyState far = SteadyState::zeros(g);
  EXPECT_LE(std::sqrt(ls.norm_sq(ls.gradient(s))), 1e-9 * std::sqrt(ls.norm_sq(ls.gradient(far))));
}

TEST(NewtonOracle, ZeroDataGivesZero) {
  const Grid2 g(5, 5);
  const auto r = oracles::DenseNse(SteadyProblem{g, 1.0, VectorXd::Zero(g.n_vel()), 0.0}).newton(SteadyState::zeros(g));
  EXPECT_EQ(r.iterations, 0);
  EXPECT_EQ(r.state.y.norm() + r.state.pi.norm(), 0.0);
}

TEST(NewtonOracle, StokesLimitTakesOneStep) {
  std::mt19937_64 rng(60);
  const Grid2 g(6, 5);
  const auto r = oracles::DenseNse(random_problem(g, rng)).newton(SteadyState::zeros(g), false);
  EXPECT_EQ(r.iterations, 1);
}

TEST(NewtonOracle, ManufacturedSolutionIsSecondOrder) {
  std::vector<double> err;
  const auto c = oracles::ManufacturedCase::steady();
  for (int n : {7, 15, 31}) {
    const Grid2 g(n, n);
    const auto ms = oracles::manufactured_steady(c, g, 1.0);
    const SteadyState s = oracles::newton_nse(oracles::manufactured_steady_problem(c, g, 1.0));
    err.push_back(std::sqrt(g.cell_area()) * (s.y - ms.exact.y).norm());
  }
  EXPECT_GE(std::log2(err[0] / err[1]), 1.8);
  EXPECT_GE(std::log2(err[1] / err[2]), 1.8);
}

TEST(SteadyDescent, ZeroDataConvergesAtIterationZero) {
  const Grid2 g(6, 6);
  SteadyLeastSquares ls(SteadyProblem{g, 1.0, VectorXd::Zero(g.n_vel()), 0.0});
  const auto r = descend_steady(ls, SteadyConfig{});
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterates_count, 0);
  EXPECT_EQ(r.reason, SteadyStop::energy_tol);
}

TEST(SteadyDescent, EnergyStrictlyDecreasesAndMatchesNewton) {
  for (double eps : {0.0, 1e-2}) {
    const Grid2 g(12, 12);
    const SteadyProblem p =
        oracles::manufactured_steady_problem(oracles::ManufacturedCase::steady(1, 1, 0.05), g, 1.0, eps);
    SteadyLeastSquares ls(p);
    SteadyConfig cfg;
    cfg.max_iter = 5000;
    cfg.tol_energy = 1e-26;
    double worst_mean = 0;
    const auto r = descend_steady(ls, cfg, SteadyState::zeros(g), [&](const SteadyState& s, const SteadyRecord&) {
      worst_mean = std::max(worst_mean, std::abs(s.pi.mean()));
    });
    EXPECT_TRUE(r.converged) << eps;
    EXPECT_FALSE(r.small_data_warning) << eps;
    for (std::size_t k = 1; k < r.energies.size(); ++k) EXPECT_LT(r.energies[k], r.energies[k - 1]) << eps;
    EXPECT_LE(worst_mean, 1e-12) << eps;
    const SteadyState ref = oracles::newton_nse(p);
    EXPECT_LE(h1l2_distance(ls, r.state, ref), 1e-6 * std::sqrt(ls.norm_sq(ref))) << eps;
  }
}

TEST(SteadyDescent, ResidualIsBoundedByEnergy) {
  // m |R|^2 <= mu_max |grad v|^2 <= 2 mu_max E on the discrete level.
  const Grid2 g(10, 10);
  SteadyLeastSquares ls(oracles::manufactured_steady_problem(oracles::ManufacturedCase::steady(), g, 1.0));
  const double c = std::sqrt(2 * ModalTransform::velocity(g).mu().maxCoeff());
  SteadyConfig cfg;
  cfg.max_iter = 200;
  double worst = 0;
  descend_steady(ls, cfg, SteadyState::zeros(g), [&](const SteadyState&, const SteadyRecord& rec) {
    worst = std::max(worst, rec.residual_norm / std::sqrt(rec.energy));
  });
  EXPECT_LE(worst, c * (1 + 1e-12));
  std::cout << "residual / sqrt(E): max " << worst << ", bound " << c << "\n";
}

TEST(SteadyDescent, LargeDataRaisesWarning) {
  const Grid2 g(6, 6);
  SteadyLeastSquares ls(oracles::manufactured_steady_problem(oracles::ManufacturedCase::steady(1, 1, 5.0), g, 0.5));
  SteadyConfig cfg;
  cfg.max_iter = 1;
  const auto r = descend_steady(ls, cfg);
  EXPECT_TRUE(r.small_data_warning);
  EXPECT_GT(r.small_data_indicator, 1.0);
}

TEST(SteadyDescent, StagnationIsReportedNotThrown) {
  const Grid2 g(6, 6);
  SteadyLeastSquares ls(oracles::manufactured_steady_problem(oracles::ManufacturedCase::steady(), g, 1.0));
  SteadyConfig cfg;
  cfg.max_iter = 100000;
  cfg.min_step = 1e3;  // every trial step is below the threshold
  const auto r = descend_steady(ls, cfg);
  EXPECT_EQ(r.reason, SteadyStop::stagnation);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterates_count, 0);
}
