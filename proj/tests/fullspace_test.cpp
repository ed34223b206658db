#include "test_util.hpp"

using namespace hdp;
using namespace hdp::testing;

namespace {

double max_pairing(const ForceSpace& f, const std::vector<TQVector>& gens) {
  double m = 0.0;
  for (const TQVector& g : gens) {
    if (f.dim() > 0) m = std::max(m, (f.covectors.transpose() * g.vec()).cwiseAbs().maxCoeff());
  }
  return m;
}

LyapunovSpec kinetic_only(double rate) {
  LyapunovSpec l;
  l.phi = [](const BasePoint&) { return Mat9::Identity().eval(); };
  l.v = [](const BasePoint&) { return 0.0; };
  l.dv = [](const BasePoint&) { return BaseCovector{}; };
  l.mu_rate = [rate](const FullState&) { return rate; };
  return l;
}

}  // namespace

TEST(AnnihilatorBasis, WholeSpaceGivesNoForces) {
  std::vector<TQVector> gens;
  const auto B = tq_basis(kUp);
  for (int j = 0; j < 8; ++j) gens.push_back(TQVector::from(B.col(j)));
  EXPECT_EQ(annihilator_basis(kUp, gens).dim(), 0);
}

TEST(AnnihilatorBasis, NoGeneratorsGivesAllCovectors) {
  const ForceSpace f = annihilator_basis(kUp, {});
  EXPECT_EQ(f.dim(), 8);
  EXPECT_LE(max_abs(f.covectors.transpose() * f.covectors - Eigen::MatrixXd::Identity(8, 8)), 1e-15);
}

TEST(AnnihilatorBasis, BallHocsAtTop) {
  const BallParams p;
  const auto gens = detail::hocs_generators(p, kUp);
  const ForceSpace f = annihilator_basis(kUp, gens);
  EXPECT_EQ(f.dim(), 5);
  EXPECT_LE(max_pairing(f, gens), 1e-12);
  // SVD null-space oracle on the ambient pairing
  Eigen::MatrixXd G(9, 3);
  for (int j = 0; j < 3; ++j) G.col(j) = gens[static_cast<std::size_t>(j)].vec();
  Eigen::MatrixXd M(11, 9);
  M << G.transpose(), Eigen::RowVectorXd::Zero(9), Eigen::RowVectorXd::Zero(9);
  M(3, 5) = 1.0;  // sphere normal
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i) rank += svd.singularValues()(i) > 1e-10;
  EXPECT_EQ(9 - rank, f.dim());
}

TEST(AnnihilatorBasis, PairingVanishesAtRandomStates) {
  const BallParams p;
  std::mt19937_64 rng(61);
  for (int i = 0; i < 50; ++i) {
    const Vec3 e = unit3(rng);
    for (const auto& gens : {detail::hocs_generators(p, e), detail::rolling_generators(p, e)}) {
      const ForceSpace f = annihilator_basis(e, gens);
      EXPECT_EQ(f.dim(), 8 - linalg::rank(detail::columns_of(gens)));
      EXPECT_LE(max_pairing(f, gens), 1e-10);
      EXPECT_LE((e.transpose() * f.covectors.middleRows<3>(3)).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(FullVectorField, FreeMotionWithoutGravity) {
  BallParams p;
  p.g = 0.0;
  const Scenario sc = free_system(p);
  for (int seed = 1; seed <= 10; ++seed) {
    const FullState s = random_state(sc, static_cast<std::uint64_t>(seed));
    const auto [rate, lambda] = full_vector_field(sc.full, s);
    EXPECT_EQ(lambda.size(), 0);
    EXPECT_LE(rate.pi_dot.norm(), 1e-14);
    EXPECT_LE(rate.gamma_dot.norm(), 1e-14);
    EXPECT_LE(project_sphere_tangent(s.e, rate.sigma_dot).norm(), 1e-14);
    EXPECT_LE(std::abs(s.sigma.dot(rate.sigma_dot)), 1e-14);
    EXPECT_LE((rate.eta - s.pi / p.I1).norm(), 1e-15);
    EXPECT_LE((rate.e_dot - s.sigma / p.m2).norm(), 1e-15);
    EXPECT_LE((rate.xi - s.gamma / p.I2).norm(), 1e-15);
  }
}

TEST(FullVectorField, AnisotropicFreeRotationIsEuler) {
  const Vec3 inertia(0.1, 0.2, 0.3);
  const Scenario sc = free_system(BallParams{}, inertia);
  const FullState s = random_state(sc, 3);
  const FullRate r = full_vector_field(sc.full, s).first;
  const Vec3 w = s.gamma.cwiseQuotient(inertia);
  EXPECT_LE((r.xi - w).norm(), 1e-14);
  EXPECT_LE((r.gamma_dot - w.cross(s.gamma)).norm(), 1e-12);
}

TEST(FullVectorField, EquilibriumIsStationary) {
  for (ScenarioId id : {ScenarioId::ball_hocs, ScenarioId::ball_dalembert}) {
    const Scenario sc = make_scenario(id, BallParams{});
    EXPECT_LE(full_vector_field(sc.full, FullState{}).first.vec().norm(), 1e-14);
  }
}

TEST(FullVectorField, RollingConstraintForcesAreWorkless) {
  const Scenario sc = ball_gnhs_dalembert(BallParams{});
  for (int seed = 1; seed <= 20; ++seed) {
    const FullState s = random_state(sc, static_cast<std::uint64_t>(seed));
    const FullStep st = full_vector_field_detailed(sc.full, s);
    EXPECT_LE(st.solve_residual, 1e-10);
    const TQVector fh = sc.full.H.fiber_derivative(s);
    EXPECT_LE(std::abs(st.force.dot(fh.vec())), 1e-10);
    const TQCovector bh = sc.full.H.base_derivative(s);
    const double power = bh.vec().dot((Vec9() << st.rate.eta, st.rate.e_dot, st.rate.xi).finished()) +
                         fh.vec().dot((Vec9() << st.rate.pi_dot, st.rate.sigma_dot, st.rate.gamma_dot).finished());
    EXPECT_LE(std::abs(power), 1e-10);
    EXPECT_LE(rolling_residual(s, sc.params).norm(), 1e-14);
  }
}

TEST(FullVectorField, HocsForcesSplitIntoRollingAndTorque) {
  const BallParams p;
  const Scenario sc = ball_hocs(p);
  for (int seed = 1; seed <= 10; ++seed) {
    const FullState s = random_state(sc, static_cast<std::uint64_t>(seed), default_spread(sc.id));
    const FullStep st = full_vector_field_detailed(sc.full, s);
    EXPECT_EQ(st.forces.dim(), 5);
    EXPECT_EQ(st.multipliers.size(), 5);
    EXPECT_LE((st.forces.covectors * st.multipliers - st.force).norm(), 1e-10);
    const ForceSpace rolling = annihilator_basis(s.e, detail::rolling_generators(p, s.e));
    Eigen::MatrixXd span(9, rolling.dim() + 3);
    span << rolling.covectors, Eigen::MatrixXd::Identity(9, 3);
    const Eigen::VectorXd c = span.colPivHouseholderQr().solve(st.force);
    EXPECT_LE((span * c - st.force).norm(), 1e-10);
    EXPECT_LE(std::abs(lyapunov_residual(*sc.lyapunov, s, st.rate)), 1e-8);
  }
}

TEST(FullVectorField, FiberAndBaseDerivativesMatchFiniteDifferences) {
  const Scenario sc = free_system(BallParams{}, Vec3(0.1, 0.2, 0.3));
  for (int i = 0; i < 50; ++i) {
    const FullState s = random_state(sc, 500 + static_cast<std::uint64_t>(i));
    const Vec9 a = sc.full.H.fiber(s).vec(), b = sc.full.H.fd_fiber(s).vec();
    EXPECT_LE((a - b).cwiseAbs().maxCoeff() / std::max(1.0, a.cwiseAbs().maxCoeff()), 1e-5);
    const Vec9 c = sc.full.H.base(s).vec(), d = sc.full.H.fd_base(s).vec();
    EXPECT_LE((c - d).cwiseAbs().maxCoeff() / std::max(1.0, c.cwiseAbs().maxCoeff()), 1e-5);
  }
}

TEST(LyapunovResidual, ZeroRateAndZeroDecay) {
  std::mt19937_64 rng(62);
  FullState s;
  s.pi = gaussian3(rng);
  s.gamma = gaussian3(rng);
  EXPECT_EQ(lyapunov_residual(kinetic_only(0.0), s, FullRate{}), 0.0);
}

TEST(LyapunovResidual, QuadraticFormDerivative) {
  std::mt19937_64 rng(63);
  for (int i = 0; i < 20; ++i) {
    FullState s;
    s.e = unit3(rng);
    s.pi = gaussian3(rng);
    s.sigma = project_sphere_tangent(s.e, gaussian3(rng));
    s.gamma = gaussian3(rng);
    FullRate r;
    r.eta = gaussian3(rng);
    r.pi_dot = gaussian3(rng);
    r.sigma_dot = gaussian3(rng);
    r.gamma_dot = gaussian3(rng);
    const double expected = s.pi.dot(r.pi_dot) + s.sigma.dot(r.sigma_dot) + s.gamma.dot(r.gamma_dot) + 0.25;
    EXPECT_NEAR(lyapunov_residual(kinetic_only(0.25), s, r), expected, 1e-12);
  }
}

TEST(LyapunovResidual, DefaultPotentialTerm) {
  const BallParams p;
  FullState s;
  s.e = Vec3(1, 0, 0);
  FullRate r;
  r.e_dot = Vec3(0, 0, 1);
  EXPECT_NEAR(lyapunov_residual(default_lyapunov(p, 0.0), s, r), -p.m2 * p.g, 1e-12);
}

TEST(RollingResidual, Examples) {
  BallParams p;
  EXPECT_EQ(rolling_residual(Vec3::Zero(), kUp, Vec3::Zero(), Vec3::Zero(), p), Vec3::Zero());
  EXPECT_EQ(rolling_residual(Vec3::Zero(), kUp, Vec3(1, 2, 0), Vec3::Zero(), p), Vec3(1, 2, 0) / p.m2);
  p.r1 = 2.0;
  p.r2 = 1.0;
  p.m2 = 1.0;
  const Vec3 pi(p.I1, 0, 0);
  // brute-force evaluation of σ/m2 = (1/(r1+r2))((r1/I1)π + (r2/I2)γ) × e with γ = 0
  const Vec3 w(p.r1 * pi.x() / p.I1, 0, 0);
  const Vec3 sigma = p.m2 * Vec3(w.y() * kUp.z() - w.z() * kUp.y(), w.z() * kUp.x() - w.x() * kUp.z(),
                                 w.x() * kUp.y() - w.y() * kUp.x()) / (p.r1 + p.r2);
  EXPECT_LE((sigma - Vec3(0, -2.0 / 3.0, 0)).norm(), 1e-15);
  EXPECT_LE(rolling_residual(pi, kUp, sigma, Vec3::Zero(), p).norm(), 1e-15);
}
