#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "eotk/core/types.hpp"
#include "eotk/models/tensor.hpp"

namespace eotk {

enum class Architecture { reference_mlp, small_cnn };

/// Input geometry and layer widths. SmallCNN: two (3x3 conv + ReLU + 2x2
/// max-pool) stages, a hidden dense layer and the head. ReferenceMLP: flatten,
/// one hidden dense layer and the head.
struct ArchitectureSpec {
  Architecture architecture = Architecture::small_cnn;
  int input_channels = 3;
  int input_height = 64;
  int input_width = 64;
  int conv1_filters = 8;
  int conv2_filters = 16;
  int hidden = 32;
  int outputs = 2;
};

/// Feed-forward network over double-precision parameters. Samples are
/// processed independently; per-sample gradients are summed in sample order,
/// so results do not depend on the thread count.
class Network {
 public:
  Network(const ArchitectureSpec& spec, std::uint64_t seed);

  const ArchitectureSpec& spec() const noexcept { return spec_; }
  ParameterSet& parameters() noexcept { return params_; }
  const ParameterSet& parameters() const noexcept { return params_; }

  /// Width of the penultimate (post-ReLU hidden) layer.
  int feature_dim() const noexcept { return spec_.hidden; }
  int output_width() const noexcept { return spec_.outputs; }

  /// Replaces the head with a freshly initialized one of `width` outputs.
  void reset_head(int width, std::uint64_t seed);

  /// N x outputs logits. Throws ShapeMismatch.
  Matrix forward(const ImageBatch& batch) const;

  /// N x feature_dim penultimate activations.
  Matrix features(const ImageBatch& batch) const;

  /// Given logits, returns (loss, dL/dlogits).
  using LossFn = std::function<std::pair<double, Matrix>(const Matrix& logits)>;

  /// Forward pass, loss, and gradients (overwritten into `grads`, which must be
  /// shaped like `parameters()` or empty). Returns the loss.
  double loss_and_gradients(const ImageBatch& batch, const LossFn& loss, ParameterSet& grads) const;

 private:
  enum class Op { conv3x3, relu, maxpool2, dense };

  struct Layer {
    Op op;
    int in_c, in_h, in_w;
    int out_c, out_h, out_w;
    int weight = -1;  // index into params_
    int bias = -1;
    std::size_t in_size() const { return static_cast<std::size_t>(in_c) * in_h * in_w; }
    std::size_t out_size() const { return static_cast<std::size_t>(out_c) * out_h * out_w; }
  };

  struct Trace {
    std::vector<std::vector<double>> acts;   // acts[i] is the input to layer i
    std::vector<std::vector<double>> cols;   // im2col buffers (conv layers)
    std::vector<std::vector<std::int32_t>> argmax;  // pool winners
  };

  void check_input(const ImageBatch& batch) const;
  void run_forward(const float* input, Trace& trace) const;
  void run_backward(const Trace& trace, const double* dlogits, ParameterSet& grads) const;
  void init_layer_params(std::size_t layer, std::uint64_t seed);

  ArchitectureSpec spec_;
  std::vector<Layer> layers_;
  ParameterSet params_;
};

}  // namespace eotk
