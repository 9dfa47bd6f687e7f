#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "wmtrack/qcore.hpp"

using namespace wmtrack;

namespace {

constexpr double kEps = 1e-12;

void expect_matrix_near(const Matrix2& a, const Matrix2& b, double tol = kEps) {
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      EXPECT_NEAR(a(i, j).real(), b(i, j).real(), tol) << "entry " << i << j;
      EXPECT_NEAR(a(i, j).imag(), b(i, j).imag(), tol) << "entry " << i << j;
    }
}

QubitState equal_superposition() { return {1.0, 1.0}; }

}  // namespace

TEST(Unitary, ZeroAngleIsIdentity) { expect_matrix_near(make_unitary(RotationAngle(0.0)), Matrix2::identity()); }

TEST(Unitary, HalfTurnIsMinusISigmaX) {
  const Complex mi(0.0, -1.0);
  expect_matrix_near(make_unitary(RotationAngle(std::numbers::pi)), Matrix2{{{{0.0, mi}, {mi, 0.0}}}});
}

TEST(Unitary, QuarterTurn) {
  const double r = 1.0 / std::sqrt(2.0);
  const Complex mi(0.0, -r);
  expect_matrix_near(make_unitary(RotationAngle(std::numbers::pi / 2)), Matrix2{{{{r, mi}, {mi, r}}}});
}

TEST(Unitary, UnitaryForRandomAngles) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, kTwoPi);
  for (int i = 0; i < 100; ++i) {
    const Matrix2 m = make_unitary(RotationAngle(u(rng)));
    expect_matrix_near(m * m.adjoint(), Matrix2::identity());
  }
}

TEST(RotationAngle, ReducedIntoPeriod) {
  EXPECT_NEAR(RotationAngle(kTwoPi + 0.25).radians(), 0.25, kEps);
  EXPECT_NEAR(RotationAngle(-0.25).radians(), kTwoPi - 0.25, kEps);
  EXPECT_NEAR(RotationAngle::from_sampling_ratio(1.0 / 16.0).radians(), kTwoPi / 16.0, kEps);
}

TEST(Evolve, Examples) {
  const QubitState s = QubitState::excited();
  EXPECT_NEAR(evolve(s, RotationAngle(0.0)).excited_population(), 1.0, kEps);

  const QubitState flipped = evolve(s, RotationAngle(std::numbers::pi));
  EXPECT_NEAR(flipped.c0().real(), 0.0, kEps);
  EXPECT_NEAR(flipped.c0().imag(), -1.0, kEps);
  EXPECT_NEAR(flipped.excited_population(), 0.0, kEps);

  const QubitState half = evolve(s, RotationAngle(std::numbers::pi / 2));
  EXPECT_NEAR(half.c0().imag(), -1.0 / std::sqrt(2.0), kEps);
  EXPECT_NEAR(half.c1().real(), 1.0 / std::sqrt(2.0), kEps);
  EXPECT_NEAR(half.excited_population(), 0.5, kEps);
}

TEST(Evolve, Composition) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, kTwoPi);
  for (int i = 0; i < 100; ++i) {
    const QubitState s = QubitState::from_bloch(u(rng) / 2, u(rng));
    const double a = u(rng), b = u(rng);
    const double two_step = evolve(evolve(s, RotationAngle(a)), RotationAngle(b)).excited_population();
    const double one_step = evolve(s, RotationAngle(a + b)).excited_population();
    EXPECT_NEAR(two_step, one_step, kEps);
  }
}

TEST(MeasurementModel, KrausExamples) {
  const auto model = MeasurementModel::from_mean_difference(0.5, 0.1);
  expect_matrix_near(kraus_of(model, Outcome::plus).matrix(), Matrix2::diagonal(std::sqrt(0.45), std::sqrt(0.55)));
  expect_matrix_near(kraus_of(model, Outcome::minus).matrix(), Matrix2::diagonal(std::sqrt(0.55), std::sqrt(0.45)));

  const auto blind = MeasurementModel::from_mean_difference(0.5, 0.0);
  const double r = 1.0 / std::sqrt(2.0);
  expect_matrix_near(kraus_of(blind, Outcome::plus).matrix(), Matrix2::diagonal(r, r));
  expect_matrix_near(kraus_of(blind, Outcome::minus).matrix(), Matrix2::diagonal(r, r));
}

TEST(MeasurementModel, RejectsBoundaryProbabilities) {
  EXPECT_THROW(MeasurementModel(0.0, 0.5), std::invalid_argument);
  EXPECT_THROW(MeasurementModel(0.5, 1.0), std::invalid_argument);
  EXPECT_THROW(MeasurementModel::from_mean_difference(0.5, 1.5), std::invalid_argument);
  try {
    MeasurementModel::from_mean_difference(0.5, 1.5);
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("in (0,1)"), std::string::npos);
  }
}

TEST(MeasurementModel, DerivedQuantities) {
  const MeasurementModel m(0.2, 0.7);
  EXPECT_DOUBLE_EQ(m.pbar(), 0.45);
  EXPECT_DOUBLE_EQ(m.dp(), 0.5);
  EXPECT_EQ(m.p0_plus() + m.p0_minus(), 1.0);
  EXPECT_EQ(m.p1_plus() + m.p1_minus(), 1.0);
}

TEST(MeasurementModel, EffectsSumToIdentity) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int i = 0; i < 100; ++i) {
    const MeasurementModel model(u(rng), u(rng));
    const Matrix2 sum = kraus_of(model, Outcome::plus).effect() + kraus_of(model, Outcome::minus).effect();
    expect_matrix_near(sum, Matrix2::identity(), 1e-15);
  }
}

TEST(MeasurementModel, KrausCommutesWithDiagonals) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto model = MeasurementModel::from_mean_difference(0.5, 0.1);
  for (int i = 0; i < 100; ++i) {
    const Matrix2 d = Matrix2::diagonal({u(rng), u(rng)}, {u(rng), u(rng)});
    for (Outcome m : {Outcome::plus, Outcome::minus}) {
      const Matrix2& n = kraus_of(model, m).matrix();
      EXPECT_LT((n * d - d * n).max_abs(), kEps);
    }
  }
}

TEST(KrausOperator, RejectsEffectAboveIdentity) {
  EXPECT_THROW(KrausOperator(Matrix2::diagonal(1.1, 0.5)), std::invalid_argument);
  EXPECT_THROW(KrausOperator(Matrix2::diagonal(std::nan(""), 0.5)), std::invalid_argument);
  EXPECT_NO_THROW(KrausOperator(Matrix2::diagonal(1.0, 0.0)));
}

TEST(KrausOperator, EffectIsPositive) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-0.7, 0.7);
  for (int i = 0; i < 100; ++i) {
    Matrix2 m;
    for (auto& row : m.m)
      for (auto& x : row) x = Complex(u(rng), u(rng)) * 0.5;
    const auto ev = hermitian_eigenvalues(m.adjoint() * m);
    EXPECT_GE(ev[0], -kEps);
  }
}

TEST(OutcomeProbability, Examples) {
  const auto model = MeasurementModel::from_mean_difference(0.5, 0.1);
  EXPECT_NEAR(outcome_probability(QubitState::excited(), model, Outcome::plus), 0.55, kEps);
  EXPECT_NEAR(outcome_probability(QubitState::ground(), model, Outcome::plus), 0.45, kEps);
  EXPECT_NEAR(outcome_probability(equal_superposition(), model, Outcome::plus), 0.5, kEps);
}

TEST(OutcomeProbability, Complete) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  std::uniform_real_distribution<double> a(0.0, kTwoPi);
  for (int i = 0; i < 1000; ++i) {
    const MeasurementModel model(u(rng), u(rng));
    const QubitState s = QubitState::from_bloch(a(rng) / 2, a(rng));
    EXPECT_NEAR(outcome_probability(s, model, Outcome::plus) + outcome_probability(s, model, Outcome::minus), 1.0,
                1e-15);
  }
}

TEST(ApplyMeasurement, Examples) {
  const auto model = MeasurementModel::from_mean_difference(0.5, 0.1);
  for (Outcome m : {Outcome::plus, Outcome::minus})
    EXPECT_NEAR(apply_measurement(QubitState::excited(), model, m).excited_population(), 1.0, kEps);
  EXPECT_NEAR(apply_measurement(equal_superposition(), model, Outcome::plus).excited_population(), 0.55, kEps);
  EXPECT_NEAR(apply_measurement(equal_superposition(), model, Outcome::minus).excited_population(), 0.45, kEps);
}

TEST(ApplyMeasurement, ZeroProbabilityOutcome) {
  const KrausOperator project_ground(Matrix2::diagonal(1.0, 0.0));
  EXPECT_THROW(apply_measurement(QubitState::excited(), project_ground), ZeroProbabilityOutcome);
}

TEST(ApplyMeasurement, NormPreservedOverManySteps) {
  std::mt19937_64 rng(17);
  std::bernoulli_distribution coin(0.5);
  const auto model = MeasurementModel::from_mean_difference(0.5, 0.1);
  const RotationAngle phi = RotationAngle::from_sampling_ratio(1.0 / 16.0);
  QubitState s = QubitState::excited();
  for (int i = 0; i < 10000; ++i) {
    s = apply_measurement(evolve(s, phi), model, coin(rng) ? Outcome::plus : Outcome::minus);
    ASSERT_NEAR(s.norm_squared(), 1.0, kEps) << "step " << i;
  }
}

TEST(QubitState, BlochConvention) {
  EXPECT_NEAR(QubitState::from_bloch(0.0, 0.0).excited_population(), 1.0, kEps);
  EXPECT_NEAR(QubitState::from_bloch(std::numbers::pi, 0.0).excited_population(), 0.0, kEps);
  EXPECT_THROW(QubitState(0.0, 0.0), std::invalid_argument);
}
