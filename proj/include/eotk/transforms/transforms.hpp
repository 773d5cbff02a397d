#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "eotk/core/random.hpp"
#include "eotk/core/types.hpp"

namespace eotk {

/// Image -> image transform. Stochastic transforms draw from `rng`; a null
/// `rng` means evaluation mode, where they act as the identity.
class ImageTransform {
 public:
  virtual ~ImageTransform() = default;
  virtual Image apply(const Image& image, Rng* rng) const = 0;
  virtual bool stochastic() const { return false; }
  virtual std::string name() const = 0;
};

class TargetTransform {
 public:
  virtual ~TargetTransform() = default;
  virtual Target apply(const Target& target) const = 0;
  virtual std::string name() const = 0;
};

using ImageTransformPtr = std::shared_ptr<const ImageTransform>;
using TargetTransformPtr = std::shared_ptr<const TargetTransform>;

namespace transforms {

/// Bilinear resampling with corner-aligned sample positions; output clamped
/// to [0, 1]. Throws InvalidParams for sizes < 1.
Image resize(const Image& image, int height, int width);

/// out[c] = (in[c] - mean[c]) / std[c]. Throws InvalidParams when the vector
/// lengths differ from the channel count or a std entry is not positive.
Image normalize(const Image& image, std::span<const double> mean, std::span<const double> stddev);

Image horizontal_flip(const Image& image);

/// Flips with probability `p`, one draw from `rng` per call.
Image random_horizontal_flip(const Image& image, double p, Rng& rng);

/// Throws IndexOutOfRange unless 0 <= target < num_classes.
LabelVector one_hot_encode(int target, int num_classes);

class Resize final : public ImageTransform {
 public:
  Resize(int height, int width);
  Image apply(const Image& image, Rng*) const override { return resize(image, height_, width_); }
  std::string name() const override { return "ResizeTransform"; }

 private:
  int height_;
  int width_;
};

class Normalize final : public ImageTransform {
 public:
  Normalize(std::vector<double> mean, std::vector<double> stddev);
  Image apply(const Image& image, Rng*) const override { return normalize(image, mean_, std_); }
  std::string name() const override { return "NormalizeTransform"; }

 private:
  std::vector<double> mean_;
  std::vector<double> std_;
};

class RandomHorizontalFlip final : public ImageTransform {
 public:
  explicit RandomHorizontalFlip(double p);
  Image apply(const Image& image, Rng* rng) const override;
  bool stochastic() const override { return true; }
  std::string name() const override { return "RandomHorizontalFlipTransform"; }

 private:
  double p_;
};

class OneHotEncode final : public TargetTransform {
 public:
  explicit OneHotEncode(int num_classes);
  Target apply(const Target& target) const override;
  std::string name() const override { return "OneHotEncodeTransform"; }

 private:
  int num_classes_;
};

/// Left-to-right composition; the empty composition is the identity.
class Compose final : public ImageTransform {
 public:
  explicit Compose(std::vector<ImageTransformPtr> steps) : steps_(std::move(steps)) {}
  Image apply(const Image& image, Rng* rng) const override;
  bool stochastic() const override;
  std::string name() const override { return "Compose"; }
  const std::vector<ImageTransformPtr>& steps() const noexcept { return steps_; }

 private:
  std::vector<ImageTransformPtr> steps_;
};

class ComposeTargets final : public TargetTransform {
 public:
  explicit ComposeTargets(std::vector<TargetTransformPtr> steps) : steps_(std::move(steps)) {}
  Target apply(const Target& target) const override;
  std::string name() const override { return "ComposeTargets"; }

 private:
  std::vector<TargetTransformPtr> steps_;
};

inline std::shared_ptr<const Compose> compose(std::vector<ImageTransformPtr> steps) {
  return std::make_shared<const Compose>(std::move(steps));
}

}  // namespace transforms
}  // namespace eotk
