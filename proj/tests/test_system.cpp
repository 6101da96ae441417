#include <gtest/gtest.h>

#include <random>

#include "test_util.hpp"

using namespace horizon;
using horizon::testing::all_catalog;
using horizon::testing::central_jacobian;
using horizon::testing::random_point;

namespace {

Vec v3(double a, double b, double c) { return Vec{{a, b, c}}; }

}  // namespace

TEST(EvalField, HeisenbergAtOrigin) {
  const auto sys = catalog_load("heisenberg");
  EXPECT_TRUE(eval_field(sys, 1, v3(0, 0, 0)).isApprox(v3(1, 0, 0)));
  const Vec x2 = eval_field(sys, 2, v3(1, 0, 0));
  EXPECT_DOUBLE_EQ(x2[0], 0.0);
  EXPECT_DOUBLE_EQ(x2[1], 1.0);
  EXPECT_DOUBLE_EQ(x2[2], 0.5);
}

TEST(EvalField, AgrachevLeeDrift) {
  const auto sys = catalog_load("agrachev_lee(3)");
  const Vec v = eval_field(sys, 0, Vec{{2.0, 0.0}});
  EXPECT_DOUBLE_EQ(v[0], 0.0);
  EXPECT_DOUBLE_EQ(v[1], 4.0);
}

TEST(EvalField, IndexOutOfRange) {
  const auto sys = catalog_load("heisenberg");
  EXPECT_THROW(eval_field(sys, 3, v3(0, 0, 0)), InvalidArgument);
  EXPECT_THROW(eval_field(sys, -1, v3(0, 0, 0)), InvalidArgument);
}

TEST(Catalog, Shapes) {
  const auto h = catalog_load("heisenberg");
  EXPECT_EQ(h.n(), 3);
  EXPECT_EQ(h.d(), 2);
  EXPECT_TRUE(h.driftless());

  const auto al = catalog_load("agrachev_lee(3)");
  EXPECT_EQ(al.n(), 2);
  EXPECT_EQ(al.d(), 2);
  EXPECT_FALSE(al.driftless());
  const Vec x{{0.5, 7.0}};
  EXPECT_DOUBLE_EQ(al.field(2).value(x)[1], 0.125);
  EXPECT_DOUBLE_EQ(al.field(0).value(x)[1], 0.25);

  const auto uni = catalog_load("unicycle");
  EXPECT_EQ(uni.n(), 3);
  EXPECT_TRUE(uni.driftless());
  const Vec p = v3(0.3, -0.2, 0.7);
  EXPECT_TRUE(uni.field(1).value(p).isApprox(v3(std::cos(0.7), std::sin(0.7), 0.0)));
  EXPECT_TRUE(uni.field(2).value(p).isApprox(v3(0, 0, 1)));
  EXPECT_TRUE(uni.periodic()[2]);
}

TEST(Catalog, UnknownNames) {
  EXPECT_THROW(catalog_load("dubins"), UnknownSystem);
  EXPECT_THROW(catalog_load("agrachev_lee(2)"), UnknownSystem);
  EXPECT_THROW(catalog_load("heisenberg(2)"), UnknownSystem);
  EXPECT_THROW(catalog_load("trivial(x)"), UnknownSystem);
}

TEST(LieBracket, Heisenberg) {
  const auto sys = catalog_load("heisenberg");
  const auto b = lie_bracket(sys.field(1), sys.field(2));
  const std::size_t n = 3;
  EXPECT_EQ(b, VectorField({Polynomial(n), Polynomial(n), Polynomial::constant(n, 1.0)}));
  EXPECT_TRUE(lie_bracket(sys.field(1), sys.field(1)).is_zero());
}

TEST(LieBracket, Martinet) {
  const auto sys = catalog_load("martinet");
  const auto b = lie_bracket(sys.field(1), sys.field(2));
  const std::size_t n = 3;
  EXPECT_EQ(b, VectorField({Polynomial(n), Polynomial(n), 2.0 * Polynomial::variable(n, 0)}));
}

TEST(LieBracket, CallableFieldIsUnsupported) {
  const auto f = VectorField::from_callable(
      2, [](const Vec& x) { return Vec{{x[1], -x[0]}}; }, [](const Vec&) { return Mat{{0, 1}, {-1, 0}}; });
  EXPECT_THROW(lie_bracket(f, f), Unsupported);
  EXPECT_NO_THROW(f.value(Vec::Zero(2)));
}

TEST(BracketFrame, HeisenbergOrigin) {
  const auto sys = catalog_load("heisenberg");
  const auto frame = bracket_frame(sys, v3(0, 0, 0), 2);
  ASSERT_EQ(frame.words.size(), 3u);
  EXPECT_EQ(frame.words[0].to_string(), "[1]");
  EXPECT_EQ(frame.words[1].to_string(), "[2]");
  EXPECT_EQ(frame.words[2].to_string(), "[[1,2]]");
  EXPECT_EQ(frame.step, 2);
  EXPECT_GT(frame.singular_values.minCoeff(), 1e-8 * frame.singular_values.maxCoeff());
}

TEST(BracketFrame, TrivialSystemIsAlreadyAFrame) {
  const auto sys = catalog_load("trivial(4)");
  const auto frame = bracket_frame(sys, Vec::Zero(4), 3);
  ASSERT_EQ(frame.words.size(), 4u);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(frame.words[static_cast<std::size_t>(i)].to_string(), "[" + std::to_string(i + 1) + "]");
  EXPECT_EQ(frame.step, 1);
}

TEST(BracketFrame, MartinetNeedsStepThreeAtOrigin) {
  const auto sys = catalog_load("martinet");
  const auto frame = bracket_frame(sys, v3(0, 0, 0), 3);
  EXPECT_EQ(frame.step, 3);
  EXPECT_EQ(frame.words[2].to_string(), "[[1,[1,2]]]");
  EXPECT_TRUE(frame.fields[2].value(v3(0, 0, 0)).isApprox(v3(0, 0, 2)));
  try {
    bracket_frame(sys, v3(0, 0, 0), 2);
    FAIL() << "expected NotBracketGenerating";
  } catch (const NotBracketGenerating& e) {
    EXPECT_EQ(e.rank, 2);
  }
  // Away from x = 0 the first bracket already spans.
  EXPECT_EQ(bracket_frame(sys, v3(0.5, 0, 0), 3).step, 2);
}

TEST(BracketFrame, DriftWordsForAgrachevLee) {
  const auto sys = catalog_load("agrachev_lee(3)");
  const auto frame = bracket_frame(sys, Vec::Zero(2), 4);
  EXPECT_EQ(frame.step, 3);
  EXPECT_EQ(frame.words[1].to_string(), "[[1,[0,1]]]");
  EXPECT_EQ(bracket_frame(sys, Vec::Zero(2), 4, 1e-8, true).step, 4);
}

TEST(BracketFrame, Deterministic) {
  const auto sys = catalog_load("unicycle");
  const Vec p = v3(0.1, 0.2, 0.3);
  const auto a = bracket_frame(sys, p, 3);
  const auto b = bracket_frame(sys, p, 3);
  ASSERT_EQ(a.words.size(), b.words.size());
  for (std::size_t i = 0; i < a.words.size(); ++i) EXPECT_EQ(a.words[i], b.words[i]);
  EXPECT_EQ(a.matrix, b.matrix);
  EXPECT_EQ(a.step, 2);
}

TEST(FieldInvariants, JacobianMatchesCentralDifferences) {
  std::mt19937_64 rng(11);
  for (const auto& name : all_catalog()) {
    const auto sys = catalog_load(name);
    for (int idx = 0; idx <= sys.d(); ++idx) {
      const auto& f = sys.field(idx);
      for (int trial = 0; trial < 100; ++trial) {
        const Vec x = random_point(rng, sys.n());
        const Mat J = f.jacobian(x);
        const Mat Jfd = central_jacobian([&](const Vec& z) { return f.value(z); }, x, 1e-5);
        const double scale = std::max(1.0, J.norm());
        EXPECT_LE((J - Jfd).norm() / scale, 1e-7) << name << " field " << idx;
      }
    }
  }
}

TEST(FieldInvariants, SecondDerivativeSymmetricAndConsistent) {
  std::mt19937_64 rng(12);
  for (const auto& name : all_catalog()) {
    const auto sys = catalog_load(name);
    for (int idx = 0; idx <= sys.d(); ++idx) {
      const auto& f = sys.field(idx);
      const Vec x = random_point(rng, sys.n());
      const auto H = f.second_derivative(x);
      for (int i = 0; i < sys.n(); ++i) {
        EXPECT_LE((H[static_cast<std::size_t>(i)] - H[static_cast<std::size_t>(i)].transpose()).norm(), 1e-14);
        const Mat Hfd = central_jacobian(
            [&](const Vec& z) -> Vec { return f.jacobian(z).row(i).transpose(); }, x, 1e-5);
        EXPECT_LE((H[static_cast<std::size_t>(i)] - Hfd).norm(), 1e-7 * std::max(1.0, Hfd.norm())) << name;
      }
    }
  }
}

TEST(FieldInvariants, SymbolicBracketMatchesNumericCommutator) {
  std::mt19937_64 rng(13);
  for (const auto& name : all_catalog()) {
    const auto sys = catalog_load(name);
    for (int a = 0; a <= sys.d(); ++a)
      for (int b = 0; b <= sys.d(); ++b) {
        const auto br = lie_bracket(sys.field(a), sys.field(b));
        for (int trial = 0; trial < 20; ++trial) {
          const Vec x = random_point(rng, sys.n());
          const Vec num = sys.field(b).jacobian(x) * sys.field(a).value(x) - sys.field(a).jacobian(x) * sys.field(b).value(x);
          EXPECT_LE((br.value(x) - num).norm(), 1e-10) << name;
        }
      }
  }
}

// Flow commutator X1, X2, -X1, -X2 for time h displaces by h^2 [X1, X2] + O(h^3).
TEST(FieldInvariants, BracketIsTheFlowCommutator) {
  for (const std::string name : {"heisenberg", "martinet", "unicycle"}) {
    const auto sys = catalog_load(name);
    const Vec x = v3(0.3, -0.1, 0.2);
    const Vec expected = lie_bracket(sys.field(1), sys.field(2)).value(x);
    double prev = 0.0;
    for (double h : {0.1, 0.05, 0.025}) {
      Mat vals{{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
      const auto u = ControlSignal({0, h, 2 * h, 3 * h, 4 * h}, vals);
      const Vec y = endpoint(sys, x, u, {.substeps = 64});
      const double err = ((y - x) / (h * h) - expected).norm();
      if (prev > 1e-9) EXPECT_LT(err, 0.6 * prev) << name;  // heisenberg is exact
      prev = err;
    }
    EXPECT_LT(prev, 0.1);
  }
}

TEST(Polynomial, DerivativeAndArithmetic) {
  const std::size_t n = 2;
  const auto x = Polynomial::variable(n, 0), y = Polynomial::variable(n, 1);
  const auto p = x * x * y + 3.0 * y;
  EXPECT_EQ(p.derivative(0), 2.0 * x * y);
  EXPECT_EQ(p.derivative(1), x * x + Polynomial::constant(n, 3.0));
  EXPECT_TRUE((p - p).is_zero());
  const std::vector<double> pt{2.0, -1.0};
  EXPECT_DOUBLE_EQ(p(pt), -7.0);
  const auto c = Polynomial::cosine(n, 1);
  EXPECT_EQ(c.derivative(1), -1.0 * Polynomial::sine(n, 1));
}
