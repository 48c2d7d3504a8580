// Copyright 2026 The scene-robust Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <thread>

#include "noise_oracles.hpp"
#include "scene_robust/corruption/engine.hpp"
#include "test_images.hpp"

namespace scene_robust {
namespace {

const SeverityParams& params() {
  static const SeverityParams p = SeverityParams::load(SCENE_ROBUST_DATA_DIR "/severity.cfg");
  return p;
}

double sample_std(const ImageBuffer& img) {
  double s = 0, s2 = 0;
  for (auto v : img.data()) {
    s += v;
    s2 += static_cast<double>(v) * v;
  }
  const double n = static_cast<double>(img.data().size());
  return std::sqrt(s2 / n - (s / n) * (s / n));
}

double mean_abs_dev(const ImageBuffer& a, const ImageBuffer& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.data().size(); ++i) s += std::abs(int(a.data()[i]) - int(b.data()[i]));
  return s / static_cast<double>(a.data().size());
}

TEST(CorruptionKind, ExactlyFifteenStableNames) {
  const std::vector<std::string> expected = {
      "gaussian_noise", "shot_noise", "impulse_noise", "defocus_blur", "glass_blur",
      "motion_blur",    "zoom_blur",  "snow",          "frost",        "fog",
      "brightness",     "contrast",   "elastic",       "pixelate",     "jpeg"};
  ASSERT_EQ(kAllCorruptions.size(), 15u);
  for (std::size_t i = 0; i < kAllCorruptions.size(); ++i) {
    EXPECT_EQ(to_string(kAllCorruptions[i]), expected[i]);
    EXPECT_EQ(parse_corruption(expected[i]), kAllCorruptions[i]);
  }
  EXPECT_FALSE(parse_corruption("speckle_noise"));
}

TEST(SeverityLevel, RejectsOutOfRange) {
  EXPECT_THROW(SeverityLevel(0), ContractError);
  EXPECT_THROW(SeverityLevel(6), ContractError);
  EXPECT_EQ(SeverityLevel(5).value(), 5);
}

TEST(SeverityParams, ShippedTableIsCompleteAndMonotone) {
  for (auto k : kAllCorruptions)
    for (int l = 1; l <= 5; ++l) EXPECT_NO_THROW(params().row(k, SeverityLevel(l)));
  EXPECT_DOUBLE_EQ(params().row(CorruptionKind::gaussian_noise, SeverityLevel(3)).get("sigma"), 0.18);
  EXPECT_DOUBLE_EQ(params().row(CorruptionKind::jpeg, SeverityLevel(5)).get("quality"), 7);
}

TEST(SeverityParams, RejectsMissingRow) {
  std::string text = read_file_text(SCENE_ROBUST_DATA_DIR "/severity.cfg");
  const auto pos = text.find("fog 4");
  text.erase(pos, text.find('\n', pos) - pos);
  EXPECT_THROW(SeverityParams::parse(text), ConfigError);
}

TEST(SeverityParams, RejectsNonMonotoneStrength) {
  std::string text = read_file_text(SCENE_ROBUST_DATA_DIR "/severity.cfg");
  const auto pos = text.find("gaussian_noise 4 sigma=0.26");
  text.replace(pos, 27, "gaussian_noise 4 sigma=0.10");
  EXPECT_THROW(SeverityParams::parse(text), ConfigError);
}

TEST(SeverityParams, RejectsUnknownFieldAndMissingVersion) {
  EXPECT_THROW(SeverityParams::parse("gaussian_noise 1 sigma=0.1\n"), ConfigError);
  std::string text = read_file_text(SCENE_ROBUST_DATA_DIR "/severity.cfg");
  const auto pos = text.find("contrast 1 factor=0.40");
  text.insert(pos + 22, " gamma=2");
  EXPECT_THROW(SeverityParams::parse(text), ConfigError);
}

TEST(ApplyCorruption, MissingRowIsConfigurationError) {
  SeverityParams p = params();
  p.erase(CorruptionKind::fog, SeverityLevel(2));
  const auto img = testing::synthetic_image("a", 40, 40, 1);
  EXPECT_THROW(apply_corruption(img, CorruptionKind::fog, SeverityLevel(2), 0, p), ConfigError);
}

TEST(ApplyCorruption, DegenerateImageIsInputError) {
  const auto img = testing::synthetic_image("tiny", 31, 40, 1);
  EXPECT_THROW(apply_corruption(img, CorruptionKind::contrast, SeverityLevel(1), 0, params()), InputError);
}

TEST(ApplyCorruption, ShapeAndIdPreservedForAllPairs) {
  const auto img = testing::synthetic_image("rect", 48, 36 + 4, 3);
  for (auto k : kAllCorruptions)
    for (int l = 1; l <= 5; ++l) {
      const auto out = apply_corruption(img, k, SeverityLevel(l), 99, params());
      EXPECT_EQ(out.width(), img.width()) << to_string(k) << l;
      EXPECT_EQ(out.height(), img.height()) << to_string(k) << l;
      EXPECT_EQ(out.image_id(), "rect");
      EXPECT_EQ(out.data().size(), img.data().size());
    }
}

TEST(ApplyCorruption, EveryPairActuallyChangesTheImage) {
  const auto img = testing::synthetic_image("x", 64, 64, 5);
  for (auto k : kAllCorruptions)
    for (int l = 1; l <= 5; ++l)
      EXPECT_GT(mean_abs_dev(img, apply_corruption(img, k, SeverityLevel(l), 3, params())), 0.1)
          << to_string(k) << " s" << l;
}

TEST(ApplyCorruption, DeterministicForFixedSeed) {
  const auto img = testing::synthetic_image("d", 64, 48, 9);
  for (auto k : kAllCorruptions) {
    const auto a = apply_corruption(img, k, SeverityLevel(4), 77, params());
    const auto b = apply_corruption(img, k, SeverityLevel(4), 77, params());
    EXPECT_EQ(a, b) << to_string(k);
  }
}

TEST(ApplyCorruption, DeterministicUnderConcurrency) {
  const auto img = testing::synthetic_image("c", 64, 64, 2);
  std::vector<ImageBuffer> serial;
  for (auto k : kAllCorruptions) serial.push_back(apply_corruption(img, k, SeverityLevel(5), 5, params()));
  std::vector<ImageBuffer> parallel(kAllCorruptions.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < kAllCorruptions.size(); ++i)
      pool.emplace_back([&, i] { parallel[i] = apply_corruption(img, kAllCorruptions[i], SeverityLevel(5), 5, params()); });
  }
  for (std::size_t i = 0; i < serial.size(); ++i) EXPECT_EQ(serial[i], parallel[i]) << to_string(kAllCorruptions[i]);
}

TEST(ApplyCorruption, StochasticKindsDependOnSeedDeterministicOnesDoNot) {
  const auto img = testing::synthetic_image("s", 64, 64, 4);
  const std::set<CorruptionKind> seedless = {CorruptionKind::defocus_blur, CorruptionKind::zoom_blur,
                                             CorruptionKind::brightness,   CorruptionKind::contrast,
                                             CorruptionKind::pixelate,     CorruptionKind::jpeg};
  for (auto k : kAllCorruptions) {
    const auto a = apply_corruption(img, k, SeverityLevel(3), 1, params());
    const auto b = apply_corruption(img, k, SeverityLevel(3), 2, params());
    if (seedless.contains(k)) EXPECT_EQ(a, b) << to_string(k);
    else EXPECT_NE(a, b) << to_string(k);
  }
}

TEST(ApplyCorruption, PixelateKeepsDimensions) {
  const auto img = testing::synthetic_image("p", 50, 70, 8);
  for (int l = 1; l <= 5; ++l) {
    const auto out = apply_corruption(img, CorruptionKind::pixelate, SeverityLevel(l), 0, params());
    EXPECT_EQ(out.width(), 50);
    EXPECT_EQ(out.height(), 70);
  }
}

TEST(NoiseStatistics, GaussianLevel3MatchesConfiguredSigma) {
  const auto gray = testing::uniform_image("gray", 256, 256, 128);
  const auto out = apply_corruption(gray, CorruptionKind::gaussian_noise, SeverityLevel(3), 7, params());
  const double sigma = params().row(CorruptionKind::gaussian_noise, SeverityLevel(3)).get("sigma") * 255.0;
  EXPECT_NEAR(sample_std(out), sigma, 0.05 * sigma);
}

TEST(NoiseStatistics, AllNoiseLevelsMatchExactOutputDistribution) {
  const auto gray = testing::uniform_image("gray", 256, 256, 128);
  for (int l = 1; l <= 5; ++l) {
    const SeverityLevel lv(l);
    const double g = testing::clipped_gaussian_std(128, params().row(CorruptionKind::gaussian_noise, lv).get("sigma"));
    const double s = testing::shot_std(128, params().row(CorruptionKind::shot_noise, lv).get("photons"));
    const double i = testing::impulse_std(128, params().row(CorruptionKind::impulse_noise, lv).get("amount"));
    EXPECT_NEAR(sample_std(apply_corruption(gray, CorruptionKind::gaussian_noise, lv, 7, params())), g, 0.05 * g);
    EXPECT_NEAR(sample_std(apply_corruption(gray, CorruptionKind::shot_noise, lv, 7, params())), s, 0.05 * s);
    EXPECT_NEAR(sample_std(apply_corruption(gray, CorruptionKind::impulse_noise, lv, 7, params())), i, 0.05 * i);
  }
}

TEST(NoiseStatistics, MeanAbsoluteDeviationMonotoneInLevel) {
  for (int n = 0; n < 10; ++n) {
    const auto img = testing::synthetic_image("m" + std::to_string(n), 64, 64, 100 + n);
    for (auto k : {CorruptionKind::gaussian_noise, CorruptionKind::shot_noise, CorruptionKind::impulse_noise}) {
      double prev = 0;
      for (int l = 1; l <= 5; ++l) {
        const double mad = mean_abs_dev(img, apply_corruption(img, k, SeverityLevel(l), 11, params()));
        EXPECT_GE(mad, prev) << to_string(k) << " image " << n << " level " << l;
        prev = mad;
      }
    }
  }
}

TEST(JpegCorruption, FileDecodesToSameDimensionsAndPixels) {
  const auto img = testing::synthetic_image("j", 72, 56, 6);
  for (int l = 1; l <= 5; ++l) {
    const auto bytes = corrupt_to_file_bytes(img, CorruptionKind::jpeg, SeverityLevel(l), 0, params());
    ASSERT_GE(bytes.size(), 3u);
    EXPECT_EQ(bytes[0], 0xFF);
    EXPECT_EQ(bytes[1], 0xD8);
    const auto decoded = codec::decode_image(bytes, "j");
    EXPECT_EQ(decoded.width(), 72);
    EXPECT_EQ(decoded.height(), 56);
    EXPECT_EQ(decoded, apply_corruption(img, CorruptionKind::jpeg, SeverityLevel(l), 0, params()));
  }
}

TEST(Codec, PngRoundTripIsLossless) {
  const auto img = testing::synthetic_image("png", 45, 33, 12);
  EXPECT_EQ(codec::decode_png(codec::encode_png(img), "png"), img);
}

TEST(Codec, CorruptStreamsAreFormatErrors) {
  std::vector<std::uint8_t> junk = {0x89, 'P', 'N', 'G', 0, 1, 2};
  EXPECT_THROW(codec::decode_png(junk, "x"), FormatError);
  auto bytes = codec::encode_png(testing::synthetic_image("t", 40, 40, 1));
  bytes.resize(bytes.size() / 2);
  EXPECT_THROW(codec::decode_png(bytes, "t"), FormatError);
}

TEST(FileNaming, FollowsIdKindLevelConvention) {
  EXPECT_EQ(corrupted_file_name("kitchen_0001", CorruptionKind::motion_blur, SeverityLevel(3)),
            "kitchen_0001__motion_blur__s3.png");
  EXPECT_EQ(corrupted_file_name("a", CorruptionKind::jpeg, SeverityLevel(5)), "a__jpeg__s5.jpg");
}

}  // namespace
}  // namespace scene_robust
