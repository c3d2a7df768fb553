#include <random>

#include <gtest/gtest.h>

#include "subflow/error.hpp"
#include "subflow/model.hpp"

using namespace subflow;

TEST(Polynomial, ProductAndDerivative) {
  const Polynomial x = Polynomial::coordinate(0);
  const Polynomial y = Polynomial::coordinate(1);
  const Polynomial p = x * x * y + 3.0 * y;
  EXPECT_EQ(p.derivative(0), 2.0 * (x * y));
  EXPECT_EQ(p.derivative(1), x * x + Polynomial::constant(3.0));
  EXPECT_TRUE(p.derivative(2).is_zero());
  EXPECT_DOUBLE_EQ(p({2.0, 5.0, 7.0}), 35.0);
}

TEST(Polynomial, CancellationLeavesZero) {
  const Polynomial x = Polynomial::coordinate(0);
  EXPECT_TRUE((x - x).is_zero());
  EXPECT_TRUE(Polynomial::constant(4.0).is_constant());
  EXPECT_FALSE(x.is_constant());
}

TEST(Bracket, HeisenbergFrameClosesOnVertical) {
  const GroupModel h = GroupModel::heisenberg();
  const BracketTable table = frame_bracket_table(h);
  // [X1, X2] = ∂z = X3, everything else commutes.
  const VectorField &b12 = table.bracket(0, 1);
  EXPECT_TRUE(b12.coeff[0].is_zero());
  EXPECT_TRUE(b12.coeff[1].is_zero());
  EXPECT_EQ(b12.coeff[2], Polynomial::constant(1.0));
  EXPECT_EQ(table.bracket(1, 0), -b12);
  EXPECT_TRUE(table.bracket(0, 2).is_zero());
  EXPECT_TRUE(table.bracket(1, 2).is_zero());
  const Eigen::VectorXd c = table.frame_coefficients(0, 1, {0.3, 0.7, 0.1});
  EXPECT_NEAR(c[2], 1.0, 1e-15);
  EXPECT_NEAR(c[0], 0.0, 1e-15);
}

TEST(Bracket, OpaqueFieldIsUnsupported) {
  FrameField opaque("f", [](const Eigen::Vector3d &) { return Eigen::Vector3d(1, 0, 0); });
  VectorField dy{{Polynomial(), Polynomial::constant(1.0), Polynomial()}};
  VectorField dz{{Polynomial(), Polynomial(), Polynomial::constant(1.0)}};
  GroupModel m("opaque", {opaque, FrameField("dy", dy)}, {FrameField("dz", dz)}, VectorField{},
               0);
  EXPECT_THROW(frame_bracket_table(m), UnsupportedModel);
}

TEST(BracketGenerating, StepOfEachModel) {
  EXPECT_EQ(verify_bracket_generating(GroupModel::heisenberg()), 2);
  EXPECT_EQ(verify_bracket_generating(GroupModel::full_rank_torus()), 1);
  EXPECT_THROW(verify_bracket_generating(GroupModel::degenerate_torus()), NotBracketGenerating);
}

TEST(Eta, HeisenbergIsExactlyOne) {
  const GroupModel h = GroupModel::heisenberg();
  EXPECT_EQ(eta_min(h, Grid(4, 4, 8), 16), 1.0);
  Eigen::VectorXd v(1);
  v << -1.0;
  EXPECT_EQ(eta_at(h, v, {0.25, 0.5, 0.75}), 1.0);
}

TEST(Eta, DegenerateTorusIsZero) {
  EXPECT_EQ(eta_min(GroupModel::degenerate_torus(), Grid(4, 4, 4), 16), 0.0);
}

TEST(Eta, RejectsNonUnitVector) {
  Eigen::VectorXd v(1);
  v << 0.5;
  EXPECT_THROW(eta_at(GroupModel::heisenberg(), v, {0, 0, 0}), DomainError);
}

TEST(Grid, TwistedModelNeedsDivisibility) {
  const GroupModel h = GroupModel::heisenberg();
  EXPECT_NO_THROW(Grid(8, 8, 16).validate(h));
  EXPECT_THROW(Grid(8, 8, 12).validate(h), DomainError);
  EXPECT_NO_THROW(Grid(8, 8, 12).validate(GroupModel::degenerate_torus()));
  EXPECT_THROW(Grid(0, 4, 4).validate(h), DomainError);
}

TEST(Grid, NodeOrderIsZFastest) {
  const Grid g(3, 4, 8);
  EXPECT_EQ(g.index(0, 0, 1), 1u);
  EXPECT_EQ(g.index(0, 1, 0), 8u);
  EXPECT_EQ(g.index(1, 0, 0), 32u);
  for (std::size_t p = 0; p < g.size(); ++p) {
    const auto [i, j, k] = g.node(p);
    EXPECT_EQ(g.index(i, j, k), p);
  }
}

TEST(Lattice, ComposeIsAssociativeWithTwist) {
  const GroupModel h = GroupModel::heisenberg();
  std::mt19937 rng(3);
  std::uniform_int_distribution<long> d(-4, 4);
  for (int trial = 0; trial < 200; ++trial) {
    LatticeElement a{d(rng), d(rng), d(rng)}, b{d(rng), d(rng), d(rng)},
        c{d(rng), d(rng), d(rng)};
    EXPECT_EQ(h.compose(h.compose(a, b), c), h.compose(a, h.compose(b, c)));
  }
  EXPECT_EQ(h.compose({1, 0, 0}, {0, 1, 0}), (LatticeElement{1, 1, 1}));
  EXPECT_EQ(h.compose({0, 1, 0}, {1, 0, 0}), (LatticeElement{1, 1, 0}));
}

TEST(Lattice, ActionIsCompatibleWithComposition) {
  const GroupModel h = GroupModel::heisenberg();
  const Eigen::Vector3d p(0.3, 0.6, 0.2);
  const LatticeElement a{1, -2, 3}, b{-1, 1, 2};
  EXPECT_TRUE(h.act(h.compose(a, b), p).isApprox(h.act(a, h.act(b, p)), 1e-14));
}

// Every out-of-range index triple must resolve to a representative node and
// a lattice element carrying that node onto the requested position.
TEST(Lattice, WrapRecoversRequestedPosition) {
  const GroupModel h = GroupModel::heisenberg();
  const Grid g(4, 4, 8);
  std::mt19937 rng(11);
  std::uniform_int_distribution<long> d(-9, 12);
  for (int trial = 0; trial < 500; ++trial) {
    const long i = d(rng), j = d(rng), k = d(rng);
    const WrappedNode w = wrap(h, g, i, j, k);
    const Eigen::Vector3d want(i * g.hx(), j * g.hy(), k * g.hz());
    EXPECT_LT((h.act(w.gamma, g.coords(w.index)) - want).norm(), 1e-12)
        << i << ' ' << j << ' ' << k;
  }
}
