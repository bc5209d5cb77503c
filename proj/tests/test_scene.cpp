// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "isac/scene.hpp"

using namespace isac;

TEST(Frequencies, ZeroAngleAndSpeedGiveZeroSpatialAndDoppler) {
  const SystemConfig cfg;
  const auto f = frequencies(Target{0.0, 3.0, 0.0, {1.0, 0.0}}, cfg);
  EXPECT_EQ(f.psi_s, 0.0);
  EXPECT_EQ(f.psi_d, 0.0);
}

TEST(Frequencies, ReferenceTargetMatchesClosedForms) {
  const SystemConfig cfg;
  const double c = 299792458.0, lambda = c / 60e9, t = 1.0 / 10e6 + 0.2e-3;
  const auto f = frequencies(Target{deg2rad(-48.295), 4.281, 3.911, {1.0, 0.0}}, cfg);
  EXPECT_NEAR(f.psi_r, 2.0 * 4.281 * 1e7 / c, 1e-15);
  EXPECT_NEAR(f.psi_d, 2.0 * 3.911 * t / lambda, 1e-12);
  EXPECT_NEAR(f.psi_s, 0.5 * std::sin(-48.295 * 3.14159265358979323846 / 180.0), 1e-15);
  // Values computed independently beforehand.
  EXPECT_NEAR(f.psi_r, 0.2855975783, 1e-9);
  EXPECT_NEAR(f.psi_d, 0.3132531506, 1e-9);
  EXPECT_NEAR(f.psi_s, -0.3732900636, 1e-9);
}

TEST(Frequencies, UnambiguousRangeMapsToUnitFrequency) {
  const SystemConfig cfg;
  EXPECT_NEAR(range_frequency(speed_of_light / (2.0 * cfg.delta_f), cfg), 1.0, 1e-15);
}

TEST(Frequencies, ScattererExamples) {
  const SystemConfig cfg;
  EXPECT_EQ(frequencies(Scatterer{0.0, 2.0, {1.0, 0.0}}, cfg).psi_s, 0.0);
  EXPECT_NEAR(frequencies(Scatterer{0.0, 1.5, {1.0, 0.0}}, cfg).psi_r, 3e7 / speed_of_light, 1e-15);
  EXPECT_NEAR(frequencies(Scatterer{deg2rad(30.0), 1.5, {1.0, 0.0}}, cfg).psi_s, 0.25, 1e-15);
}

TEST(Frequencies, NegatingSpeedFlipsOnlyDoppler) {
  const SystemConfig cfg;
  const Target a{0.3, 2.0, 2.5, {1.0, 0.0}};
  Target b = a;
  b.speed = -a.speed;
  const auto fa = frequencies(a, cfg), fb = frequencies(b, cfg);
  EXPECT_EQ(fa.psi_r, fb.psi_r);
  EXPECT_EQ(fa.psi_s, fb.psi_s);
  EXPECT_EQ(fa.psi_d, -fb.psi_d);
}

TEST(SystemConfig, DerivedTimesAndValidation) {
  SystemConfig cfg;
  EXPECT_NEAR(cfg.t_interval(), 200.1e-6, 1e-15);
  EXPECT_NEAR(cfg.d_spacing, cfg.wavelength() / 2.0, 1e-18);
  EXPECT_EQ(cfg.observations(), 5120);
  cfg.m_rx = 1;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(GenerateScene, EmptyRequestGivesEmptyScene) {
  SceneSpec spec;
  spec.n_targets = 0;
  spec.n_scatterers = 0;
  EXPECT_TRUE(generate_scene(spec, 42).empty());
}

TEST(GenerateScene, SameSeedIsBitwiseIdentical) {
  const Scene a = generate_scene({}, 1234), b = generate_scene({}, 1234);
  ASSERT_EQ(a.targets.size(), b.targets.size());
  ASSERT_EQ(a.scatterers.size(), b.scatterers.size());
  for (size_t i = 0; i < a.targets.size(); ++i) {
    EXPECT_EQ(a.targets[i].theta, b.targets[i].theta);
    EXPECT_EQ(a.targets[i].alpha, b.targets[i].alpha);
  }
  for (size_t i = 0; i < a.scatterers.size(); ++i) {
    EXPECT_EQ(a.scatterers[i].range, b.scatterers[i].range);
    EXPECT_EQ(a.scatterers[i].alpha, b.scatterers[i].alpha);
  }
}

TEST(GenerateScene, DrawsStayInsideSupportsAndSeparation) {
  const SceneSpec spec;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Scene s = generate_scene(spec, seed);
    ASSERT_EQ(s.targets.size(), 2u);
    ASSERT_EQ(s.scatterers.size(), 400u);
    for (const auto& t : s.targets) {
      EXPECT_GE(t.theta, spec.theta_min);
      EXPECT_LE(t.theta, spec.theta_max);
      EXPECT_GE(t.range, 1.0);
      EXPECT_LE(t.range, 7.0);
      EXPECT_GE(t.speed, 1.0);
      EXPECT_LE(t.speed, 4.0);
    }
    for (const auto& c : s.scatterers) {
      EXPECT_GE(c.theta, spec.theta_min);
      EXPECT_LE(c.theta, spec.theta_max);
      EXPECT_GE(c.range, 1.0);
      EXPECT_LE(c.range, 7.0);
    }
    EXPECT_GT(std::abs(s.targets[0].theta - s.targets[1].theta), spec.min_separation);
  }
}

TEST(GenerateScene, ScattererAmplitudeVariance) {
  SceneSpec spec;
  spec.n_targets = 0;
  spec.n_scatterers = 20000;
  const Scene s = generate_scene(spec, 9);
  double acc = 0.0;
  for (const auto& c : s.scatterers) acc += std::norm(c.alpha);
  EXPECT_NEAR(acc / spec.n_scatterers, 0.5, 0.02);
}

TEST(GenerateScene, OverDenseRequestIsRejected) {
  SceneSpec spec;
  spec.n_targets = 40;  // cannot fit 40 targets 4 degrees apart inside 120 degrees
  spec.n_scatterers = 0;
  try {
    generate_scene(spec, 1);
    FAIL() << "expected over-dense error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::over_dense_scene);
  }
}

TEST(ReferenceScene, CarriesTabulatedKinematics) {
  const Scene s = reference_scene(5);
  ASSERT_EQ(s.targets.size(), 2u);
  EXPECT_NEAR(rad2deg(s.targets[0].theta), -48.295, 1e-12);
  EXPECT_EQ(s.targets[1].range, 2.670);
  EXPECT_EQ(s.targets[1].speed, 1.473);
  EXPECT_NEAR(std::abs(s.targets[0].alpha), 1.0, 1e-15);
  EXPECT_EQ(s.scatterers.size(), 400u);
}

TEST(Validation, RejectsNonPositiveRangeAndEndfireAngles) {
  EXPECT_THROW(validate(Target{0.0, 0.0, 1.0, {1.0, 0.0}}), Error);
  EXPECT_THROW(validate(Scatterer{pi / 2, 1.0, {1.0, 0.0}}), Error);
  EXPECT_NO_THROW(validate(Target{0.1, 1.0, -1.0, {1.0, 0.0}}));
}
