#include "test_util.hpp"

using namespace hdp;
using namespace hdp::testing;

namespace {

// A non-flat test form: 𝒜(R, e)(η, δe) = M R^T η + e × δe.
ConnectionForm curved_form() {
  Mat3 M;
  M << 1, 2, 0, 0, -1, 3, 0.5, 0, 1;
  return ConnectionForm(
      [M](const ReducedState& z) {
        Mat36 m;
        m.leftCols<3>() = M * z.x.R.transpose();
        m.rightCols<3>() = hat(z.x.e);
        return m;
      },
      "curved");
}

BasePoint surface(const BasePoint& x, const BaseTangent& u, const BaseTangent& v, double s, double t) {
  return {exp_so3(s * u.eta + t * v.eta) * x.R, (x.e + s * u.de + t * v.de).normalized()};
}

// d𝒜(u, v) = ∂s[𝒜(F)·∂tF] − ∂t[𝒜(F)·∂sF] on the coordinate surface F(s, t),
// with both tangent fields obtained by differencing F.
Vec3 exterior_oracle(const ConnectionForm& conn, const BasePoint& x, const BaseTangent& u, const BaseTangent& v) {
  const double h = 1e-4, k = 1e-5;
  auto tangent = [&](double s, double t, bool along_t) {
    const double ds = along_t ? 0.0 : k, dt = along_t ? k : 0.0;
    const BasePoint p = surface(x, u, v, s + ds, t + dt), m = surface(x, u, v, s - ds, t - dt);
    const BasePoint c = surface(x, u, v, s, t);
    const Mat3 rd = (p.R - m.R) / (2 * k);
    return BaseTangent{vee(rd * c.R.transpose(), 1e-6), (p.e - m.e) / (2 * k)};
  };
  auto pairing = [&](double s, double t, bool along_t) { return conn(surface(x, u, v, s, t), tangent(s, t, along_t)); };
  const Vec3 ds = (pairing(h, 0, true) - pairing(-h, 0, true)) / (2 * h);
  const Vec3 dt = (pairing(0, h, false) - pairing(0, -h, false)) / (2 * h);
  return ds - dt;
}

BasePoint random_point(std::mt19937_64& rng) { return {exp_so3(gaussian3(rng)), unit3(rng)}; }

BaseTangent random_tangent(std::mt19937_64& rng, const BasePoint& x) {
  return {gaussian3(rng), project_sphere_tangent(x.e, gaussian3(rng))};
}

ReducedState at(const BasePoint& x) {
  ReducedState z;
  z.x = x;
  return z;
}

KineticMetric euclidean() {
  return [](const ReducedState&) { return Mat9::Identity().eval(); };
}

VariationalDistribution fixed(std::vector<TQVector> gens, std::string name) {
  return {[gens](const ReducedState&) { return gens; }, std::move(name), false};
}

}  // namespace

TEST(ReducedCurvature, TrivialConnectionVanishes) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 50; ++i) {
    const BasePoint x = random_point(rng);
    EXPECT_EQ(reduced_curvature(ConnectionForm::trivial(), x, random_tangent(rng, x), random_tangent(rng, x)),
              Vec3::Zero());
  }
}

TEST(ReducedCurvature, ZeroFormThroughGenericPath) {
  const ConnectionForm zero([](const ReducedState&) { return Mat36::Zero(); }, "zero");
  std::mt19937_64 rng(32);
  for (int i = 0; i < 20; ++i) {
    const BasePoint x = random_point(rng);
    EXPECT_LE(reduced_curvature(zero, x, random_tangent(rng, x), random_tangent(rng, x)).norm(), 1e-12);
  }
}

TEST(ReducedCurvature, EqualArgumentsVanish) {
  std::mt19937_64 rng(33);
  const ConnectionForm conn = curved_form();
  for (int i = 0; i < 20; ++i) {
    const BasePoint x = random_point(rng);
    const BaseTangent u = random_tangent(rng, x);
    EXPECT_LE(reduced_curvature(conn, x, u, u).norm(), 1e-9);
  }
}

TEST(ReducedCurvature, Antisymmetric) {
  std::mt19937_64 rng(34);
  const ConnectionForm conn = curved_form();
  for (int i = 0; i < 20; ++i) {
    const BasePoint x = random_point(rng);
    const BaseTangent u = random_tangent(rng, x), v = random_tangent(rng, x);
    EXPECT_LE((reduced_curvature(conn, x, u, v) + reduced_curvature(conn, x, v, u)).norm(), 1e-9);
  }
}

TEST(ReducedCurvature, ExteriorDerivativeMatchesSurfaceOracle) {
  std::mt19937_64 rng(35);
  const ConnectionForm conn = curved_form();
  for (int i = 0; i < 20; ++i) {
    const BasePoint x = random_point(rng);
    const BaseTangent u = random_tangent(rng, x), v = random_tangent(rng, x);
    const Vec3 expected = exterior_oracle(conn, x, u, v);
    EXPECT_LE((exterior_derivative(conn, x, u, v) - expected).norm(), 1e-5 * std::max(1.0, expected.norm()));
  }
}

TEST(ReducedCurvature, BallGncClosedForm) {
  const BallParams p;
  const double r = p.r12();
  std::mt19937_64 rng(36);
  for (const ConnectionForm& conn : {ball_hocs_gnc_closed_form(p), ball_hocs(p).reduced.A_gnc}) {
    for (int i = 0; i < 10; ++i) {
      const BasePoint x = random_point(rng);
      const BaseTangent u{Vec3::Zero(), project_sphere_tangent(x.e, gaussian3(rng))};
      const BaseTangent v{Vec3::Zero(), project_sphere_tangent(x.e, gaussian3(rng))};
      const Vec3 expected = -(2.0 / r + 1.0 / (r * r)) * u.de.cross(v.de);
      EXPECT_LE((reduced_curvature(conn, x, u, v) - expected).norm(), 1e-6 * std::max(1.0, expected.norm()));
    }
  }
}

TEST(BuildGnc, BallHocsInvariantsAndDimensions) {
  const Scenario sc = ball_hocs(BallParams{});
  std::mt19937_64 rng(37);
  for (int i = 0; i < 20; ++i) {
    const ReducedState z = at(random_point(rng));
    const auto [d, conn] = build_gnc(sc.reduced.dist, sc.reduced.metric, z);
    EXPECT_LE(d.invariant_violation(), 1e-10);
    EXPECT_EQ(d.CV.cols(), 3);
    EXPECT_EQ(d.S.cols(), 1);
    EXPECT_EQ(d.H.cols() + d.V.cols(), 8);
    EXPECT_EQ(d.dropped_generators, 0);
    const ReducedVariations vars = decompose_reduced_variations(d);
    EXPECT_EQ(vars.hor.cols(), 2);
    ASSERT_EQ(vars.ver.cols(), 1);
    EXPECT_NEAR(std::abs(vars.ver.col(0).dot(z.x.e)), 1.0, 1e-12);
  }
}

TEST(BuildGnc, MatchesClosedForms) {
  const BallParams p;
  std::mt19937_64 rng(38);
  const Scenario hocs = ball_hocs(p), roll = ball_gnhs_dalembert(p);
  for (int i = 0; i < 20; ++i) {
    const BasePoint x = random_point(rng);
    const BaseTangent v = random_tangent(rng, x);
    EXPECT_LE((hocs.reduced.A_gnc(x, v) - ball_hocs_gnc_closed_form(p)(x, v)).norm(), 1e-12);
    EXPECT_LE((roll.reduced.A_gnc(x, v) - ball_dalembert_gnc_closed_form(p)(x, v)).norm(), 1e-12);
  }
}

TEST(BuildGnc, WholeTangentSpaceGivesMechanicalSplit) {
  std::vector<TQVector> gens;
  const auto B = tq_basis(kUp);
  for (int j = 0; j < 8; ++j) gens.push_back(TQVector::from(B.col(j)));
  const auto [d, conn] = build_gnc(fixed(gens, "all"), euclidean(), at(BasePoint{}));
  EXPECT_EQ(d.R.cols(), 0);
  EXPECT_EQ(d.S.cols(), 3);
  EXPECT_EQ(d.T.cols(), 5);
  EXPECT_LE(max_abs(conn.matrix(BasePoint{})), 1e-14);
  const ReducedVariations vars = decompose_reduced_variations(d);
  EXPECT_EQ(vars.hor.cols(), 5);
  EXPECT_EQ(vars.ver.cols(), 3);
}

TEST(BuildGnc, VerticalOnlyDistribution) {
  std::vector<TQVector> gens;
  for (int i = 0; i < 3; ++i) gens.push_back({Vec3::Zero(), Vec3::Zero(), Vec3::Unit(i)});
  const auto [d, conn] = build_gnc(fixed(gens, "vertical"), euclidean(), at(BasePoint{}));
  EXPECT_EQ(d.T.cols(), 0);
  EXPECT_EQ(d.R.cols(), 5);
  EXPECT_LE(d.invariant_violation(), 1e-12);
  const ReducedVariations vars = decompose_reduced_variations(d);
  EXPECT_EQ(vars.hor.cols(), 0);
  EXPECT_EQ(vars.ver.cols(), 3);
}

TEST(BuildGnc, TransversalLineHasNoVerticalPart) {
  std::mt19937_64 rng(39);
  const TQVector w{gaussian3(rng), project_sphere_tangent(kUp, gaussian3(rng)), gaussian3(rng)};
  const auto [d, conn] = build_gnc(fixed({w}, "line"), euclidean(), at(BasePoint{}));
  EXPECT_LE(d.invariant_violation(), 1e-12);
  const ReducedVariations vars = decompose_reduced_variations(d);
  EXPECT_EQ(vars.hor.cols(), 1);
  EXPECT_EQ(vars.ver.cols(), 0);
  // w is horizontal for the resulting connection
  EXPECT_LE((conn(BasePoint{}, w.base()) + w.xi).norm(), 1e-12);
}

TEST(BuildGnc, DependentGeneratorsAreDropped) {
  const BallParams p;
  auto gens = detail::hocs_generators(p, kUp);
  gens.push_back(TQVector::from(gens[0].vec() + 2.0 * gens[1].vec()));
  const auto [d, conn] = build_gnc(fixed(gens, "redundant"), ball_hocs(p).reduced.metric, at(BasePoint{}));
  EXPECT_EQ(d.CV.cols(), 3);
  EXPECT_EQ(d.dropped_generators, 1);
}

TEST(BuildGnc, HorizontalAndVerticalSplitSums) {
  const Scenario sc = ball_gnhs_dalembert(BallParams{});
  std::mt19937_64 rng(40);
  for (int i = 0; i < 20; ++i) {
    const ReducedState z = at(random_point(rng));
    const auto [d, conn] = build_gnc(sc.reduced.dist, sc.reduced.metric, z);
    Vec9 v = Vec9::Zero();
    v.head<6>() = random_tangent(rng, z.x).vec();
    v.tail<3>() = gaussian3(rng);
    const auto [hor, ver] = d.split(v);
    EXPECT_LE((hor + ver - v).norm(), 1e-12);
    EXPECT_LE(ver.head<6>().norm(), 1e-12);
    // the horizontal part is annihilated by the connection
    EXPECT_LE((conn(z, BaseTangent::from(hor.head<6>())) + hor.tail<3>()).norm(), 1e-10);
  }
}

TEST(ConnectionForm, LinearInTheTangentArgument) {
  std::mt19937_64 rng(41);
  const ConnectionForm conn = ball_dalembert_gnc_closed_form(BallParams{});
  for (int i = 0; i < 20; ++i) {
    const BasePoint x = random_point(rng);
    const BaseTangent u = random_tangent(rng, x), v = random_tangent(rng, x);
    const double a = 1.7, b = -0.3;
    const BaseTangent w = BaseTangent::from(a * u.vec() + b * v.vec());
    EXPECT_LE((conn(x, w) - a * conn(x, u) - b * conn(x, v)).norm(), 1e-13);
  }
}

TEST(PhiMap, VanishesForEqualConnections) {
  std::mt19937_64 rng(42);
  const ConnectionForm conn = ball_hocs(BallParams{}).reduced.A_gnc;
  for (int i = 0; i < 20; ++i) {
    const BasePoint x = random_point(rng);
    EXPECT_LE(phi_map(conn, conn, at(x), random_tangent(rng, x)).norm(), 1e-14);
  }
}

TEST(PhiMap, BallHocsExample) {
  BallParams p;
  const double r = p.r12();
  const Vec3 out = phi_map(ConnectionForm::trivial(), ball_hocs_gnc_closed_form(p), at(BasePoint{}),
                           BaseTangent{Vec3::Zero(), Vec3(1, 0, 0)});
  EXPECT_LE((out - Vec3(0, 1.0 / r, 0)).norm(), 1e-15);
}

TEST(PhiMap, BallHocsMatchesCrossProductForm) {
  const BallParams p;
  std::mt19937_64 rng(43);
  const ConnectionForm gnc = ball_hocs(p).reduced.A_gnc;
  for (int i = 0; i < 20; ++i) {
    const BasePoint x = random_point(rng);
    const BaseTangent v = random_tangent(rng, x);
    const Vec3 expected = x.e.cross(v.de) / p.r12();
    EXPECT_LE((phi_map(ConnectionForm::trivial(), gnc, at(x), v) - expected).norm(), 1e-12);
  }
}

TEST(PhiMap, VariationSplitsIntoPhiAndVerticalPart) {
  const Scenario sc = ball_hocs(BallParams{});
  std::mt19937_64 rng(44);
  for (int i = 0; i < 10; ++i) {
    const ReducedState z = at(random_point(rng));
    const auto [d, gnc] = build_gnc(sc.reduced.dist, sc.reduced.metric, z);
    const ReducedVariations vars = decompose_reduced_variations(d);
    for (const TQVector& w : sc.reduced.dist.generators(z)) {
      const Vec3 eta_bar = sc.reduced.A(z, w.base()) + w.xi;
      const Vec3 eta_gnc = gnc(z, w.base()) + w.xi;
      EXPECT_LE((eta_bar - phi_map(sc.reduced.A, gnc, z, w.base()) - eta_gnc).norm(), 1e-14);
      const Vec3 ver = vars.ver * (vars.ver.transpose() * eta_gnc);
      EXPECT_LE((ver - eta_gnc).norm(), 1e-10);
    }
  }
}
