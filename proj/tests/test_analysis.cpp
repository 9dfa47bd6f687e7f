#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "wmtrack/analysis.hpp"

using namespace wmtrack;

namespace {

std::vector<TrajectoryPoint> synthetic(std::size_t n, double dt, double shift, double amplitude = 1.0) {
  std::vector<TrajectoryPoint> pts;
  for (std::size_t i = 1; i <= n; ++i) {
    TrajectoryPoint p;
    p.step = i;
    p.time = static_cast<double>(i) * dt;
    p.c1sq_free = 0.5 * (1.0 + std::cos(kTwoPi * p.time));
    p.c1sq_measured = 0.5 * (1.0 + amplitude * std::cos(kTwoPi * p.time + shift));
    p.estimate = p.c1sq_measured;
    pts.push_back(p);
  }
  return pts;
}

}  // namespace

TEST(WrapAngle, Range) {
  EXPECT_NEAR(wrap_angle(0.3), 0.3, 1e-15);
  EXPECT_NEAR(wrap_angle(0.3 + kTwoPi), 0.3, 1e-14);
  EXPECT_NEAR(wrap_angle(-std::numbers::pi), std::numbers::pi, 1e-15);
  EXPECT_NEAR(wrap_angle(std::numbers::pi), std::numbers::pi, 1e-15);
}

TEST(Fit, RecoversKnownSinusoid) {
  std::vector<double> t, y;
  for (int i = 1; i <= 100; ++i) {
    t.push_back(0.05 * i);
    y.push_back(0.5 * (1.0 + 0.8 * std::cos(kTwoPi * (0.05 * i) / 1.3 + 0.7)));
  }
  const auto f = fit_oscillation(t, y, 0.0);
  EXPECT_NEAR(f.period, 1.3, 1e-9);
  EXPECT_NEAR(f.amplitude, 0.8, 1e-9);
  EXPECT_NEAR(f.phase, 0.7, 1e-8);
  EXPECT_LT(f.rms_residual, 1e-10);
}

TEST(Fit, PhaseReferencedToWindowStart) {
  std::vector<double> t, y;
  for (int i = 1; i <= 80; ++i) {
    t.push_back(10.0 + i / 16.0);
    y.push_back(0.5 * (1.0 + std::cos(kTwoPi * (t.back() - 10.0) + 0.4)));
  }
  EXPECT_NEAR(fit_oscillation(t, y, 10.0).phase, 0.4, 1e-8);
}

TEST(Fit, NoisyDataStaysSane) {
  std::mt19937_64 rng(71);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<double> t, y;
  for (int i = 1; i <= 160; ++i) {
    t.push_back(i / 16.0);
    y.push_back(0.5 * (1.0 + std::cos(kTwoPi * t.back())) + noise(rng));
  }
  const auto f = fit_oscillation(t, y, 0.0);
  EXPECT_NEAR(f.period, 1.0, 5e-3);
  EXPECT_GT(f.period, 0.0);
  EXPECT_LE(f.amplitude, 1.1);
}

TEST(Fit, TooFewPoints) {
  const std::vector<double> t{1, 2, 3}, y{0, 1, 0};
  EXPECT_THROW(fit_oscillation(t, y, 0.0), InsufficientData);
}

TEST(Analyze, ExactCosine) {
  const auto pts = synthetic(320, 1.0 / 16.0, 0.0);
  const auto s = analyze(pts, 5.0);
  ASSERT_EQ(s.windows.size(), 4u);
  for (const auto& w : s.windows) {
    EXPECT_EQ(w.points, 80u);
    EXPECT_EQ(w.tracking_rms, 0.0);
    EXPECT_NEAR(w.measured.amplitude, 1.0, 1e-9);
    EXPECT_NEAR(w.free.amplitude, 1.0, 1e-9);
    EXPECT_NEAR(w.free.period, 1.0, 1e-9);
    EXPECT_NEAR(w.phase_shift, 0.0, 1e-9);
  }
}

TEST(Analyze, PhaseShiftRecovered) {
  const auto pts = synthetic(320, 1.0 / 16.0, 0.3);
  const auto s = analyze(pts, 5.0);
  for (const auto& w : s.windows) EXPECT_NEAR(w.phase_shift, 0.3, 1e-6);
  EXPECT_NEAR(s.early.phase_shift, 0.3, 1e-6);
  EXPECT_NEAR(s.late.phase_shift, 0.3, 1e-6);
}

TEST(Analyze, FreeReferenceAmplitudeOfSuperposition) {
  // Initial state cos(theta/2)|1> + sin(theta/2)|0> under the sigma_x drive.
  const double theta = 1.1;
  const QubitState s0 = QubitState::from_bloch(theta, std::numbers::pi / 2);
  std::vector<TrajectoryPoint> pts;
  QubitState s = s0;
  const RotationAngle phi = RotationAngle::from_sampling_ratio(1.0 / 16.0);
  for (std::size_t i = 1; i <= 160; ++i) {
    s = evolve(s, phi);
    TrajectoryPoint p;
    p.step = i;
    p.time = i / 16.0;
    p.c1sq_free = p.c1sq_measured = p.estimate = s.excited_population();
    pts.push_back(p);
  }
  // With relative phase pi/2 the state rotates around x through the pole; amplitude 1.
  // With phase 0 the amplitude is |cos theta|.
  const auto a = analyze(pts, 5.0);
  EXPECT_NEAR(a.early.free.period, 1.0, 1e-3);
  EXPECT_NEAR(a.early.free.amplitude, 1.0, 1e-3);

  pts.clear();
  s = QubitState::from_bloch(theta, 0.0);
  for (std::size_t i = 1; i <= 160; ++i) {
    s = evolve(s, phi);
    TrajectoryPoint p;
    p.step = i;
    p.time = i / 16.0;
    p.c1sq_free = p.c1sq_measured = p.estimate = s.excited_population();
    pts.push_back(p);
  }
  const auto b = analyze(pts, 5.0);
  EXPECT_NEAR(b.early.free.period, 1.0, 1e-3);
  EXPECT_NEAR(b.early.free.amplitude, std::abs(std::cos(theta)), 1e-3);
}

TEST(Analyze, TrailingRemainderMerged) {
  const auto pts = synthetic(84, 1.0 / 16.0, 0.0);
  const auto s = analyze(pts, 5.0);
  ASSERT_EQ(s.windows.size(), 1u);
  EXPECT_EQ(s.windows[0].points, 84u);
}

TEST(Analyze, TrackingRms) {
  auto pts = synthetic(160, 1.0 / 16.0, 0.0);
  for (auto& p : pts) p.estimate = p.c1sq_measured + 0.1;
  const auto s = analyze(pts, 10.0);
  EXPECT_NEAR(s.windows[0].tracking_rms, 0.1, 1e-12);
}

TEST(Analyze, Errors) {
  EXPECT_THROW(analyze(std::vector<TrajectoryPoint>{}, 5.0), InsufficientData);
  EXPECT_THROW(analyze(synthetic(100, 1.0 / 16.0, 0.0), 0.5), std::invalid_argument);
  EXPECT_THROW(analyze(synthetic(5, 1.0 / 16.0, 0.0), 5.0), InsufficientData);
  EXPECT_THROW(analyze_window(synthetic(100, 1.0 / 16.0, 0.0), 0.0, 0.25), InsufficientData);
}

TEST(Extrema, Simple) {
  const std::vector<double> y{0.0, 1.0, 0.5, 0.2, 0.9, 0.9, 0.1};
  const auto e = local_extrema(y);
  ASSERT_EQ(e.maxima.size(), 2u);
  EXPECT_EQ(e.maxima[0], 1.0);
  EXPECT_EQ(e.maxima[1], 0.9);
  ASSERT_EQ(e.minima.size(), 1u);
  EXPECT_EQ(e.minima[0], 0.2);
}
