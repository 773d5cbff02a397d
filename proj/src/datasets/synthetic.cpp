#include "eotk/datasets/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "eotk/core/error.hpp"
#include "eotk/core/random.hpp"
#include "eotk/datasets/image_io.hpp"

namespace eotk::synthetic {

namespace {

enum Shape { circle = 0, square = 1, triangle = 2, stripe = 3 };

using Colour = std::array<float, 3>;

Colour random_colour(Rng& rng, double lo, double hi) {
  return {static_cast<float>(rng.uniform(lo, hi)), static_cast<float>(rng.uniform(lo, hi)),
          static_cast<float>(rng.uniform(lo, hi))};
}

template <typename Inside>
void fill(Image& image, const Colour& colour, Inside&& inside) {
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      if (!inside(x + 0.5, y + 0.5)) continue;
      for (int c = 0; c < 3; ++c) image.at(c, y, x) = colour[c];
    }
  }
}

void draw_stripe(Image& image, Rng& rng) {
  const double scale = image.width / 64.0;
  const double thickness = rng.uniform(3.0, 5.0) * scale;
  const bool horizontal = rng.bernoulli(0.5);
  const int extent = horizontal ? image.height : image.width;
  const double start = rng.uniform(0.15 * extent, 0.85 * extent - thickness);
  const Colour colour = random_colour(rng, 0.55, 1.0);
  fill(image, colour, [&](double x, double y) {
    const double t = horizontal ? y : x;
    return t >= start && t < start + thickness;
  });
}

void draw_shape(Image& image, Shape shape, int cell, Rng& rng) {
  const double scale = image.width / 64.0;
  const double half_cell = 0.5 * image.width / 2.0;
  double extent = 0.0;
  switch (shape) {
    case circle: extent = rng.uniform(8.5, 12.0) * scale; break;
    case square: extent = rng.uniform(7.5, 10.5) * scale; break;
    case triangle: extent = rng.uniform(9.5, 12.5) * scale; break;
    case stripe: return;
  }
  double cx = 0.0, cy = 0.0;
  if (cell < 0) {
    extent *= 1.5;
    const double jitter = 6.0 * scale;
    cx = 0.5 * image.width + rng.uniform(-jitter, jitter);
    cy = 0.5 * image.height + rng.uniform(-jitter, jitter);
  } else {
    const double cell_x = (cell % 2) * 2.0 * half_cell;
    const double cell_y = (cell / 2) * 2.0 * half_cell;
    const double slack = std::max(0.0, 2.0 * half_cell - 2.0 * extent - 2.0);
    cx = cell_x + 1.0 + extent + rng.uniform(0.0, slack);
    cy = cell_y + 1.0 + extent + rng.uniform(0.0, slack);
  }
  const Colour colour = random_colour(rng, 0.55, 1.0);
  switch (shape) {
    case circle:
      fill(image, colour, [&](double x, double y) {
        return (x - cx) * (x - cx) + (y - cy) * (y - cy) <= extent * extent;
      });
      break;
    case square:
      fill(image, colour, [&](double x, double y) {
        return std::abs(x - cx) <= extent && std::abs(y - cy) <= extent;
      });
      break;
    case triangle:
      fill(image, colour, [&](double x, double y) {
        const double top = cy - extent;
        if (y < top || y > cy + extent) return false;
        return std::abs(x - cx) <= 0.5 * (y - top);
      });
      break;
    case stripe: break;
  }
}

ShapeSample render(std::size_t index, const ShapesOptions& options, Rng& rng) {
  LabelVector labels(4, 0);
  if (options.kind == TaskKind::multi_label) {
    for (auto& bit : labels) bit = rng.bernoulli(options.presence) ? 1 : 0;
  } else {
    labels[rng.below(4)] = 1;
  }

  Image image(3, options.size, options.size);
  const Colour background = random_colour(rng, 0.05, 0.3);
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < image.plane(); ++i) {
      const double v = background[c] + 0.03 * rng.normal();
      image.pixels[c * image.plane() + i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  if (labels[stripe]) draw_stripe(image, rng);

  std::array<int, 4> cells = {0, 1, 2, 3};
  for (int i = 3; i > 0; --i) std::swap(cells[i], cells[rng.below(static_cast<std::uint64_t>(i) + 1)]);
  int used = 0;
  const bool single = options.kind == TaskKind::multi_class;
  for (Shape s : {circle, square, triangle}) {
    if (labels[s]) draw_shape(image, s, single ? -1 : cells[used++], rng);
  }
  return ShapeSample{fmt::format("shape_{:05}", index), std::move(image), std::move(labels)};
}

}  // namespace

const std::vector<std::string>& shape_names() {
  static const std::vector<std::string> names = {"circle", "square", "triangle", "stripe"};
  return names;
}

std::vector<ShapeSample> generate_shapes(const ShapesOptions& options) {
  if (options.size < 16) throw Error(Errc::invalid_params, "shape images must be at least 16 pixels");
  std::vector<ShapeSample> out;
  out.reserve(options.count);
  for (std::size_t i = 0; i < options.count; ++i) {
    Rng rng(derive_seed(options.seed, "shapes", static_cast<std::uint64_t>(i)));
    out.push_back(render(i, options, rng));
  }
  return out;
}

void write_shapes_dataset(const std::vector<ShapeSample>& samples, TaskKind kind,
                          const std::filesystem::path& root) {
  const auto& names = shape_names();
  if (kind == TaskKind::multi_label) {
    std::filesystem::create_directories(root / "images");
    std::ofstream csv(root / "labels.csv", std::ios::binary);
    if (!csv) throw Error(Errc::io_error, fmt::format("cannot write '{}'", (root / "labels.csv").string()));
    csv << "image";
    for (const auto& n : names) csv << ',' << n;
    csv << '\n';
    for (const auto& s : samples) {
      write_png(s.image, root / "images" / (s.id + ".png"));
      csv << s.id << ".png";
      for (auto bit : s.labels) csv << ',' << static_cast<int>(bit);
      csv << '\n';
    }
    return;
  }
  for (const auto& n : names) std::filesystem::create_directories(root / n);
  for (const auto& s : samples) {
    write_png(s.image, root / names[static_cast<std::size_t>(to_class_index(s.labels))] / (s.id + ".png"));
  }
}

std::shared_ptr<InMemoryDataset> shapes_dataset(const std::vector<ShapeSample>& samples, TaskKind kind,
                                                DatasetConfig config) {
  std::vector<Sample> items;
  items.reserve(samples.size());
  for (const auto& s : samples) {
    Target target = kind == TaskKind::multi_class ? Target{to_class_index(s.labels)} : Target{s.labels};
    items.push_back(Sample{s.id, s.image, std::move(target)});
  }
  return std::make_shared<InMemoryDataset>(kind, LabelVocabulary(shape_names()), std::move(config),
                                           std::move(items));
}

}  // namespace eotk::synthetic
