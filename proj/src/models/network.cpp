#include "eotk/models/network.hpp"

#include <cmath>

#include <fmt/format.h>

#include "eotk/core/error.hpp"
#include "eotk/core/parallel.hpp"
#include "eotk/core/random.hpp"

namespace eotk {

namespace {

using MatMap = Eigen::Map<Matrix>;
using ConstMatMap = Eigen::Map<const Matrix>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

// col has rows (ch, ky, kx) and columns (y, x); zero padding of 1.
void im2col(const double* in, int channels, int h, int w, double* col) {
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  std::size_t row = 0;
  for (int ch = 0; ch < channels; ++ch) {
    const double* plane = in + ch * hw;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx, ++row) {
        double* dst = col + row * hw;
        for (int y = 0; y < h; ++y) {
          const int iy = y + ky - 1;
          double* out_row = dst + static_cast<std::size_t>(y) * w;
          if (iy < 0 || iy >= h) {
            std::fill(out_row, out_row + w, 0.0);
            continue;
          }
          const double* src = plane + static_cast<std::size_t>(iy) * w;
          for (int x = 0; x < w; ++x) {
            const int ix = x + kx - 1;
            out_row[x] = (ix >= 0 && ix < w) ? src[ix] : 0.0;
          }
        }
      }
    }
  }
}

void col2im(const double* col, int channels, int h, int w, double* out) {
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  std::fill(out, out + channels * hw, 0.0);
  std::size_t row = 0;
  for (int ch = 0; ch < channels; ++ch) {
    double* plane = out + ch * hw;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx, ++row) {
        const double* src = col + row * hw;
        for (int y = 0; y < h; ++y) {
          const int iy = y + ky - 1;
          if (iy < 0 || iy >= h) continue;
          double* dst = plane + static_cast<std::size_t>(iy) * w;
          const double* src_row = src + static_cast<std::size_t>(y) * w;
          for (int x = 0; x < w; ++x) {
            const int ix = x + kx - 1;
            if (ix >= 0 && ix < w) dst[ix] += src_row[x];
          }
        }
      }
    }
  }
}

void check_positive(int value, const char* name) {
  if (value < 1) throw Error(Errc::invalid_params, fmt::format("{} must be >= 1, got {}", name, value));
}

}  // namespace

Network::Network(const ArchitectureSpec& spec, std::uint64_t seed) : spec_(spec) {
  check_positive(spec.input_channels, "input_channels");
  check_positive(spec.input_height, "input_height");
  check_positive(spec.input_width, "input_width");
  check_positive(spec.hidden, "hidden");
  check_positive(spec.outputs, "outputs");

  auto add_param = [&](std::string name, std::vector<std::size_t> shape) {
    params_.push_back(Parameter{std::move(name), Tensor::zeros(std::move(shape))});
    return static_cast<int>(params_.size() - 1);
  };
  auto add_dense = [&](const std::string& name, int in, int out) {
    Layer l{Op::dense, in, 1, 1, out, 1, 1};
    l.weight = add_param(name + ".weight", {static_cast<std::size_t>(in), static_cast<std::size_t>(out)});
    l.bias = add_param(name + ".bias", {static_cast<std::size_t>(out)});
    layers_.push_back(l);
  };
  auto add_relu = [&] {
    const Layer& prev = layers_.back();
    layers_.push_back(Layer{Op::relu, prev.out_c, prev.out_h, prev.out_w, prev.out_c, prev.out_h, prev.out_w});
  };

  int c = spec.input_channels, h = spec.input_height, w = spec.input_width;
  if (spec.architecture == Architecture::small_cnn) {
    check_positive(spec.conv1_filters, "conv1_filters");
    check_positive(spec.conv2_filters, "conv2_filters");
    if (h < 4 || w < 4) throw Error(Errc::invalid_params, "SmallCNN input must be at least 4x4");
    const int filters[2] = {spec.conv1_filters, spec.conv2_filters};
    for (int stage = 0; stage < 2; ++stage) {
      const std::string name = fmt::format("conv{}", stage + 1);
      Layer conv{Op::conv3x3, c, h, w, filters[stage], h, w};
      conv.weight = add_param(name + ".weight", {static_cast<std::size_t>(filters[stage]),
                                                 static_cast<std::size_t>(c), 3, 3});
      conv.bias = add_param(name + ".bias", {static_cast<std::size_t>(filters[stage])});
      layers_.push_back(conv);
      add_relu();
      c = filters[stage];
      layers_.push_back(Layer{Op::maxpool2, c, h, w, c, h / 2, w / 2});
      h /= 2;
      w /= 2;
    }
  }
  add_dense("fc1", c * h * w, spec.hidden);
  add_relu();
  add_dense("head", spec.hidden, spec.outputs);

  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].weight >= 0) init_layer_params(i, seed);
  }
}

void Network::init_layer_params(std::size_t layer, std::uint64_t seed) {
  const Layer& l = layers_[layer];
  Parameter& weight = params_[static_cast<std::size_t>(l.weight)];
  const double fan_in = l.op == Op::conv3x3 ? 9.0 * l.in_c : static_cast<double>(l.in_size());
  const double limit = std::sqrt(6.0 / fan_in);
  Rng rng(derive_seed(seed, "init", weight.name));
  for (auto& v : weight.tensor.values) v = rng.uniform(-limit, limit);
  auto& bias = params_[static_cast<std::size_t>(l.bias)].tensor.values;
  std::fill(bias.begin(), bias.end(), 0.0);
}

void Network::reset_head(int width, std::uint64_t seed) {
  check_positive(width, "head width");
  Layer& head = layers_.back();
  head.out_c = width;
  spec_.outputs = width;
  params_[static_cast<std::size_t>(head.weight)].tensor =
      Tensor::zeros({static_cast<std::size_t>(head.in_c), static_cast<std::size_t>(width)});
  params_[static_cast<std::size_t>(head.bias)].tensor = Tensor::zeros({static_cast<std::size_t>(width)});
  init_layer_params(layers_.size() - 1, seed);
}

void Network::check_input(const ImageBatch& batch) const {
  if (batch.channels != spec_.input_channels || batch.height != spec_.input_height ||
      batch.width != spec_.input_width) {
    throw Error(Errc::shape_mismatch,
                fmt::format("network expects {}x{}x{} input, got {}x{}x{}", spec_.input_channels,
                            spec_.input_height, spec_.input_width, batch.channels, batch.height,
                            batch.width));
  }
}

void Network::run_forward(const float* input, Trace& trace) const {
  const std::size_t n_layers = layers_.size();
  trace.acts.resize(n_layers + 1);
  trace.cols.resize(n_layers);
  trace.argmax.resize(n_layers);
  trace.acts[0].assign(input, input + layers_.front().in_size());

  for (std::size_t i = 0; i < n_layers; ++i) {
    const Layer& l = layers_[i];
    const std::vector<double>& in = trace.acts[i];
    std::vector<double>& out = trace.acts[i + 1];
    out.resize(l.out_size());
    switch (l.op) {
      case Op::conv3x3: {
        const int hw = l.in_h * l.in_w;
        auto& col = trace.cols[i];
        col.resize(static_cast<std::size_t>(l.in_c) * 9 * hw);
        im2col(in.data(), l.in_c, l.in_h, l.in_w, col.data());
        ConstMatMap weight(params_[l.weight].tensor.values.data(), l.out_c, l.in_c * 9);
        ConstMatMap cols(col.data(), l.in_c * 9, hw);
        MatMap result(out.data(), l.out_c, hw);
        result.noalias() = weight * cols;
        const auto& bias = params_[l.bias].tensor.values;
        for (int o = 0; o < l.out_c; ++o) result.row(o).array() += bias[o];
        break;
      }
      case Op::relu:
        for (std::size_t j = 0; j < out.size(); ++j) out[j] = in[j] > 0.0 ? in[j] : 0.0;
        break;
      case Op::maxpool2: {
        auto& winners = trace.argmax[i];
        winners.resize(out.size());
        std::size_t j = 0;
        for (int ch = 0; ch < l.out_c; ++ch) {
          for (int y = 0; y < l.out_h; ++y) {
            for (int x = 0; x < l.out_w; ++x, ++j) {
              std::size_t best = (static_cast<std::size_t>(ch) * l.in_h + 2 * y) * l.in_w + 2 * x;
              for (int dy = 0; dy < 2; ++dy) {
                for (int dx = 0; dx < 2; ++dx) {
                  const std::size_t k = (static_cast<std::size_t>(ch) * l.in_h + 2 * y + dy) * l.in_w + 2 * x + dx;
                  if (in[k] > in[best]) best = k;
                }
              }
              winners[j] = static_cast<std::int32_t>(best);
              out[j] = in[best];
            }
          }
        }
        break;
      }
      case Op::dense: {
        ConstMatMap weight(params_[l.weight].tensor.values.data(), l.in_c, l.out_c);
        ConstVecMap x(in.data(), l.in_c);
        VecMap y(out.data(), l.out_c);
        y.noalias() = weight.transpose() * x;
        y += ConstVecMap(params_[l.bias].tensor.values.data(), l.out_c);
        break;
      }
    }
  }
}

void Network::run_backward(const Trace& trace, const double* dlogits, ParameterSet& grads) const {
  std::vector<double> grad(dlogits, dlogits + layers_.back().out_size());
  std::vector<double> grad_in;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const Layer& l = layers_[i];
    const std::vector<double>& in = trace.acts[i];
    const std::vector<double>& out = trace.acts[i + 1];
    const bool need_input_grad = i > 0;
    grad_in.assign(need_input_grad ? l.in_size() : 0, 0.0);
    switch (l.op) {
      case Op::conv3x3: {
        const int hw = l.in_h * l.in_w;
        ConstMatMap dout(grad.data(), l.out_c, hw);
        ConstMatMap cols(trace.cols[i].data(), l.in_c * 9, hw);
        MatMap dweight(grads[l.weight].tensor.values.data(), l.out_c, l.in_c * 9);
        dweight.noalias() += dout * cols.transpose();
        auto& dbias = grads[l.bias].tensor.values;
        for (int o = 0; o < l.out_c; ++o) dbias[o] += dout.row(o).sum();
        if (need_input_grad) {
          ConstMatMap weight(params_[l.weight].tensor.values.data(), l.out_c, l.in_c * 9);
          Matrix dcols = weight.transpose() * dout;
          col2im(dcols.data(), l.in_c, l.in_h, l.in_w, grad_in.data());
        }
        break;
      }
      case Op::relu:
        for (std::size_t j = 0; j < grad_in.size(); ++j) grad_in[j] = out[j] > 0.0 ? grad[j] : 0.0;
        break;
      case Op::maxpool2: {
        const auto& winners = trace.argmax[i];
        for (std::size_t j = 0; j < grad.size(); ++j) grad_in[static_cast<std::size_t>(winners[j])] += grad[j];
        break;
      }
      case Op::dense: {
        ConstVecMap x(in.data(), l.in_c);
        ConstVecMap dy(grad.data(), l.out_c);
        MatMap dweight(grads[l.weight].tensor.values.data(), l.in_c, l.out_c);
        dweight.noalias() += x * dy.transpose();
        VecMap(grads[l.bias].tensor.values.data(), l.out_c) += dy;
        if (need_input_grad) {
          ConstMatMap weight(params_[l.weight].tensor.values.data(), l.in_c, l.out_c);
          VecMap(grad_in.data(), l.in_c).noalias() = weight * dy;
        }
        break;
      }
    }
    grad.swap(grad_in);
  }
}

Matrix Network::forward(const ImageBatch& batch) const {
  check_input(batch);
  Matrix logits(static_cast<Eigen::Index>(batch.count), spec_.outputs);
  parallel_for(batch.count, [&](std::size_t s) {
    Trace trace;
    run_forward(batch.sample(s), trace);
    logits.row(static_cast<Eigen::Index>(s)) = ConstVecMap(trace.acts.back().data(), spec_.outputs).transpose();
  });
  return logits;
}

Matrix Network::features(const ImageBatch& batch) const {
  check_input(batch);
  const auto width = static_cast<std::size_t>(spec_.hidden);
  Matrix out(static_cast<Eigen::Index>(batch.count), static_cast<Eigen::Index>(width));
  parallel_for(batch.count, [&](std::size_t s) {
    Trace trace;
    run_forward(batch.sample(s), trace);
    const auto& penultimate = trace.acts[layers_.size() - 1];
    out.row(static_cast<Eigen::Index>(s)) = ConstVecMap(penultimate.data(), width).transpose();
  });
  return out;
}

double Network::loss_and_gradients(const ImageBatch& batch, const LossFn& loss, ParameterSet& grads) const {
  check_input(batch);
  const std::size_t n = batch.count;
  std::vector<Trace> traces(n);
  Matrix logits(static_cast<Eigen::Index>(n), spec_.outputs);
  parallel_for(n, [&](std::size_t s) {
    run_forward(batch.sample(s), traces[s]);
    logits.row(static_cast<Eigen::Index>(s)) = ConstVecMap(traces[s].acts.back().data(), spec_.outputs).transpose();
  });

  auto [value, dlogits] = loss(logits);
  if (dlogits.rows() != logits.rows() || dlogits.cols() != logits.cols()) {
    throw Error(Errc::shape_mismatch, "loss gradient shape differs from logits");
  }

  std::vector<ParameterSet> per_sample(n);
  parallel_for(n, [&](std::size_t s) {
    per_sample[s] = zeros_like(params_);
    run_backward(traces[s], dlogits.row(static_cast<Eigen::Index>(s)).data(), per_sample[s]);
    traces[s] = Trace{};
  });

  grads = zeros_like(params_);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t p = 0; p < grads.size(); ++p) {
      auto& dst = grads[p].tensor.values;
      const auto& src = per_sample[s][p].tensor.values;
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
  }
  return value;
}

}  // namespace eotk
