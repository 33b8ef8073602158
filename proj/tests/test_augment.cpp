#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "signforge/augment.hpp"
#include "signforge/errors.hpp"
#include "signforge/rng.hpp"

using namespace signforge;

namespace {
Image test_image(int size = 24) {
  Image img(size, size, 3);
  Rng rng(31);
  for (int i = 0; i < img.size(); ++i) img.data[i] = 0.2 + 0.6 * rng.uniform();
  return img;
}
}  // namespace

TEST_CASE("registry lists exactly 15 distinct augmentations") {
  const auto& ids = registered_augmentations();
  REQUIRE(ids.size() == 15);
  CHECK(std::set<std::string>(ids.begin(), ids.end()).size() == 15);
}

TEST_CASE("sampled chains: length in {1..8}, ops unique, both extremes hit") {
  Rng rng(2024);
  size_t min_len = 99, max_len = 0;
  for (int i = 0; i < 10000; ++i) {
    const AugmentationChain chain = sample_chain(rng);
    REQUIRE(chain.steps.size() >= 1);
    REQUIRE(chain.steps.size() <= 8);
    min_len = std::min(min_len, chain.steps.size());
    max_len = std::max(max_len, chain.steps.size());
    std::set<std::string> ids;
    for (const auto& s : chain.steps) ids.insert(s.id);
    REQUIRE(ids.size() == chain.steps.size());  // without replacement
    CHECK_NOTHROW(chain.validate());
  }
  CHECK(min_len == 1);
  CHECK(max_len == 8);
}

TEST_CASE("op participation is uniform (chi-squared, p > 0.01)") {
  Rng rng(77);
  std::map<std::string, long> counts;
  long total = 0;
  for (int i = 0; i < 100000; ++i) {
    const AugmentationChain chain = sample_chain(rng);
    for (const auto& s : chain.steps) {
      ++counts[s.id];
      ++total;
    }
  }
  REQUIRE(counts.size() == 15);
  const double expected = static_cast<double>(total) / 15.0;
  double chi2 = 0.0;
  for (const auto& [id, c] : counts) {
    const double d = static_cast<double>(c) - expected;
    chi2 += d * d / expected;
  }
  // 14 degrees of freedom, critical value at p = 0.01
  CHECK(chi2 < 29.141);
}

TEST_CASE("apply_chain is deterministic and keeps values in [0,1]") {
  Rng rng(5);
  const Image img = test_image();
  for (int i = 0; i < 50; ++i) {
    const AugmentationChain chain = sample_chain(rng);
    const Image a = apply_chain(img, chain);
    const Image b = apply_chain(img, chain);
    CHECK(a.max_abs_diff(b) == 0.0);
    for (int k = 0; k < a.size(); ++k) {
      REQUIRE(a.data[k] >= 0.0);
      REQUIRE(a.data[k] <= 1.0);
    }
  }
}

TEST_CASE("chain json round-trip") {
  Rng rng(6);
  const AugmentationChain chain = sample_chain(rng);
  const AugmentationChain back = AugmentationChain::from_json(chain.to_json());
  REQUIRE(back.steps.size() == chain.steps.size());
  for (size_t i = 0; i < chain.steps.size(); ++i) {
    CHECK(back.steps[i].id == chain.steps[i].id);
    CHECK(back.steps[i].params == chain.steps[i].params);
    CHECK(back.steps[i].noise_seed == chain.steps[i].noise_seed);
  }
}

TEST_CASE("chain validation rejects too-long and unknown chains") {
  AugmentationChain chain;
  for (int i = 0; i < 9; ++i) chain.steps.push_back({registered_augmentations()[0], {}, 0});
  CHECK_THROWS_AS(chain.validate(), ConfigError);
  AugmentationChain unknown;
  unknown.steps.push_back({"definitely_not_an_op", {}, 0});
  CHECK_THROWS_AS(unknown.validate(), ConfigError);
}

TEST_CASE("cutout zeroes tangents inside the occluded region") {
  Rng rng(8);
  AugmentationChain chain;
  // find a sampled chain that starts with cutout to know its parameters are valid
  while (true) {
    const AugmentationChain c = sample_chain(rng);
    if (c.steps.size() == 1 && c.steps[0].id == "cutout_occlusion") {
      chain = c;
      break;
    }
  }
  const Image img = test_image();
  std::vector<Image> tangents = {Image(img.h, img.w, 3, 1.0)};
  const Image out = apply_chain_with_tangents(img, chain, tangents);
  int zeroed = 0, kept = 0;
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) {
      const bool occluded = out.at(y, x, 0) == 0.5 && out.at(y, x, 1) == 0.5;
      if (occluded && tangents[0].at(y, x, 0) == 0.0) ++zeroed;
      if (!occluded && tangents[0].at(y, x, 0) != 0.0) ++kept;
    }
  CHECK(zeroed > 0);
  CHECK(kept > 0);
}

TEST_CASE("gaussian noise reuses its recorded seed") {
  Rng rng(9);
  AugmentationChain chain;
  while (true) {
    const AugmentationChain c = sample_chain(rng);
    if (c.steps.size() == 1 && c.steps[0].id == "gaussian_noise") {
      chain = c;
      break;
    }
  }
  const Image img = test_image();
  CHECK(apply_chain(img, chain).max_abs_diff(apply_chain(img, chain)) == 0.0);
  AugmentationChain other = chain;
  other.steps[0].noise_seed += 1;
  CHECK(apply_chain(img, chain).max_abs_diff(apply_chain(img, other)) > 0.0);
}

TEST_CASE("tangent propagation matches finite differences on smooth chains") {
  Rng rng(11);
  int tested = 0;
  while (tested < 5) {
    const AugmentationChain chain = sample_chain(rng);
    bool smooth = true;  // skip ops that are non-differentiable in the input
    for (const auto& s : chain.steps)
      if (s.id == "cutout_occlusion") smooth = false;
    if (!smooth) continue;

    const Image img = test_image();
    Image dir(img.h, img.w, 3);
    Rng drng(rng.next_u64());
    for (int i = 0; i < dir.size(); ++i) dir.data[i] = drng.uniform(-1.0, 1.0);

    std::vector<Image> tangents = {dir};
    const Image out = apply_chain_with_tangents(img, chain, tangents);

    const double h = 1e-5;
    Image plus = img, minus = img;
    plus.data += h * dir.data;
    minus.data -= h * dir.data;
    const Image op = apply_chain(plus, chain);
    const Image om = apply_chain(minus, chain);

    // compare away from the clipping boundaries, where the chain is linear
    double max_err = 0.0;
    for (int i = 0; i < op.size(); ++i) {
      const bool interior = out.data[i] > 1e-3 && out.data[i] < 1.0 - 1e-3 &&
                            op.data[i] > 0.0 && op.data[i] < 1.0 && om.data[i] > 0.0 &&
                            om.data[i] < 1.0;
      if (!interior) continue;
      const double fd = (op.data[i] - om.data[i]) / (2 * h);
      max_err = std::max(max_err, std::abs(fd - tangents[0].data[i]));
    }
    CHECK(max_err < 1e-2);
    ++tested;
  }
}
