#include "rfsgd/digits.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>

#include "rfsgd/error.hpp"

namespace rfsgd {
namespace {

struct Pt {
  double x, y;
};
using Stroke = std::vector<Pt>;

// Glyph skeletons in the unit square, y pointing down.
const std::array<std::vector<Stroke>, 10>& glyphs() {
  static const std::array<std::vector<Stroke>, 10> g = [] {
    std::array<std::vector<Stroke>, 10> out;
    Stroke ring;
    for (int k = 0; k <= 16; ++k) {
      const double a = 2.0 * 3.141592653589793 * k / 16.0;
      ring.push_back({0.5 + 0.2 * std::sin(a), 0.5 - 0.32 * std::cos(a)});
    }
    out[0] = {ring};
    out[1] = {{{0.4, 0.26}, {0.52, 0.16}, {0.52, 0.84}}};
    out[2] = {{{0.3, 0.3}, {0.4, 0.18}, {0.6, 0.18}, {0.7, 0.3}, {0.65, 0.45}, {0.3, 0.82}, {0.72, 0.82}}};
    out[3] = {{{0.3, 0.22}, {0.45, 0.16}, {0.62, 0.18}, {0.7, 0.3}, {0.62, 0.44}, {0.45, 0.48}},
              {{0.45, 0.48}, {0.64, 0.53}, {0.72, 0.66}, {0.63, 0.8}, {0.45, 0.84}, {0.28, 0.78}}};
    out[4] = {{{0.62, 0.85}, {0.62, 0.15}, {0.25, 0.62}, {0.76, 0.62}}};
    out[5] = {{{0.7, 0.18}, {0.36, 0.18}, {0.33, 0.46}, {0.58, 0.44}, {0.7, 0.6}, {0.62, 0.8}, {0.3, 0.8}}};
    out[6] = {{{0.65, 0.17}, {0.42, 0.32}, {0.31, 0.58}, {0.4, 0.82}, {0.6, 0.82}, {0.68, 0.65}, {0.56, 0.5},
               {0.34, 0.58}}};
    out[7] = {{{0.27, 0.2}, {0.73, 0.2}, {0.46, 0.86}}, {{0.4, 0.52}, {0.64, 0.52}}};
    Stroke top, bottom;
    for (int k = 0; k <= 12; ++k) {
      const double a = 2.0 * 3.141592653589793 * k / 12.0;
      top.push_back({0.5 + 0.15 * std::sin(a), 0.32 - 0.15 * std::cos(a)});
      bottom.push_back({0.5 + 0.19 * std::sin(a), 0.66 - 0.18 * std::cos(a)});
    }
    out[8] = {top, bottom};
    Stroke loop;
    for (int k = 0; k <= 12; ++k) {
      const double a = 2.0 * 3.141592653589793 * k / 12.0;
      loop.push_back({0.5 + 0.17 * std::sin(a), 0.34 - 0.16 * std::cos(a)});
    }
    out[9] = {loop, {{0.67, 0.34}, {0.62, 0.86}}};
    return out;
  }();
  return g;
}

double segment_distance(Pt p, Pt a, Pt b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = p.x - a.x - t * vx, dy = p.y - a.y - t * vy;
  return std::sqrt(dx * dx + dy * dy);
}

void render(const std::vector<Stroke>& strokes, Rng& rng, std::uint8_t* out) {
  constexpr int kSide = 28;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> jitter(0.0, 0.025);
  const double scale = 0.85 + 0.25 * u(rng);
  const double slant = -0.25 + 0.5 * u(rng);
  const double sx = -2.0 + 4.0 * u(rng), sy = -2.0 + 4.0 * u(rng);
  const double width = 0.9 + 1.0 * u(rng);

  std::vector<Stroke> placed;
  for (const Stroke& s : strokes) {
    Stroke q;
    for (Pt p : s) {
      const double x = p.x + jitter(rng), y = p.y + jitter(rng);
      const double xs = 0.5 + scale * (x - 0.5 + slant * (y - 0.5));
      const double ys = 0.5 + scale * (y - 0.5);
      q.push_back({xs * kSide + sx, ys * kSide + sy});
    }
    placed.push_back(std::move(q));
  }
  for (int r = 0; r < kSide; ++r)
    for (int c = 0; c < kSide; ++c) {
      const Pt centre{c + 0.5, r + 0.5};
      double d = 1e9;
      for (const Stroke& s : placed)
        for (std::size_t k = 0; k + 1 < s.size(); ++k) d = std::min(d, segment_distance(centre, s[k], s[k + 1]));
      const double v = std::clamp(width - d + 0.5, 0.0, 1.0);
      out[r * kSide + c] = std::uint8_t(std::lround(255.0 * v));
    }
}

struct ClassIndex {
  std::vector<std::size_t> a, b;
};

ClassIndex split_classes(const IdxImages& images, std::span<const std::uint8_t> labels,
                         const BinaryDigitOptions& opts) {
  check_idx_pair(images, labels);
  if (opts.digit_a == opts.digit_b) throw InvalidArgument("digit_a and digit_b must differ");
  if (opts.n_per_class < 1) throw InvalidArgument("n_per_class must be >= 1");
  ClassIndex idx;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == opts.digit_a) idx.a.push_back(i);
    if (labels[i] == opts.digit_b) idx.b.push_back(i);
  }
  const std::size_t need = std::size_t(opts.n_per_class);
  if (idx.a.size() < need || idx.b.size() < need)
    throw InvalidArgument("not enough samples: need " + std::to_string(need) + " per class, have " +
                          std::to_string(idx.a.size()) + " of digit " + std::to_string(opts.digit_a) + " and " +
                          std::to_string(idx.b.size()) + " of digit " + std::to_string(opts.digit_b));
  Rng rng(derive_seed(opts.seed, {21}));
  std::shuffle(idx.a.begin(), idx.a.end(), rng);
  std::shuffle(idx.b.begin(), idx.b.end(), rng);
  return idx;
}

void fill_rows(const IdxImages& images, const std::vector<std::size_t>& which, double scale, Matrix<double>& X,
               Index row0) {
  const std::size_t d = images.image_size();
  for (std::size_t k = 0; k < which.size(); ++k) {
    const auto img = images.image(which[k]);
    for (std::size_t j = 0; j < d; ++j) X(row0 + Index(k), Index(j)) = scale * double(img[j]);
  }
}

}  // namespace

BinaryDigitSplit make_binary_digit_split(const IdxImages& images, std::span<const std::uint8_t> labels,
                                         const BinaryDigitOptions& opts) {
  if (!(opts.noise_sd >= 0.0)) throw InvalidArgument("noise_sd must be >= 0");
  ClassIndex idx = split_classes(images, labels, opts);
  const std::size_t k = std::size_t(opts.n_per_class);
  const Index d = Index(images.image_size());

  // Interleave the classes so that the given order is not sorted by label.
  std::vector<std::size_t> train;
  std::vector<double> ytrain;
  for (std::size_t i = 0; i < k; ++i) {
    train.push_back(idx.a[i]);
    ytrain.push_back(-1.0);
    train.push_back(idx.b[i]);
    ytrain.push_back(1.0);
  }
  std::vector<std::size_t> perm(train.size());
  std::iota(perm.begin(), perm.end(), std::size_t(0));
  Rng rng(derive_seed(opts.seed, {22}));
  std::shuffle(perm.begin(), perm.end(), rng);

  BinaryDigitSplit out;
  Dataset<double>& ds = out.train;
  ds.provenance = Provenance::IdxBinary;
  ds.noise_sd = opts.noise_sd;
  ds.X.resize(Index(train.size()), d);
  ds.y.resize(Index(train.size()));
  std::vector<std::size_t> ordered(train.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    ordered[i] = train[perm[i]];
    ds.y(Index(i)) = ytrain[perm[i]];
  }
  fill_rows(images, ordered, opts.pixel_scale, ds.X, 0);
  Rng noise_rng(derive_seed(opts.seed, {23}));
  ds.fstar = ds.y - opts.noise_sd * standard_normal<double>(noise_rng, ds.y.size());

  std::vector<std::size_t> rest_a(idx.a.begin() + std::ptrdiff_t(k), idx.a.end());
  std::vector<std::size_t> rest_b(idx.b.begin() + std::ptrdiff_t(k), idx.b.end());
  out.X_test.resize(Index(rest_a.size() + rest_b.size()), d);
  out.y_test.resize(out.X_test.rows());
  fill_rows(images, rest_a, opts.pixel_scale, out.X_test, 0);
  fill_rows(images, rest_b, opts.pixel_scale, out.X_test, Index(rest_a.size()));
  out.y_test.head(Index(rest_a.size())).setConstant(-1.0);
  out.y_test.tail(Index(rest_b.size())).setConstant(1.0);
  return out;
}

Dataset<double> make_binary_digit_dataset(const IdxImages& images, std::span<const std::uint8_t> labels,
                                          const BinaryDigitOptions& opts) {
  return make_binary_digit_split(images, labels, opts).train;
}

DigitImages synthesize_digits(Seed seed, Index per_digit, const std::vector<int>& digits) {
  if (per_digit < 1) throw InvalidArgument("per_digit must be >= 1");
  for (int d : digits)
    if (d < 0 || d > 9) throw InvalidArgument("digit out of range: " + std::to_string(d));
  std::vector<std::uint8_t> which;
  for (int d : digits)
    for (Index k = 0; k < per_digit; ++k) which.push_back(std::uint8_t(d));
  Rng rng(seed);
  std::shuffle(which.begin(), which.end(), rng);

  DigitImages out;
  out.images.count = std::uint32_t(which.size());
  out.images.rows = out.images.cols = 28;
  out.images.pixels.assign(which.size() * 28 * 28, 0);
  for (std::size_t i = 0; i < which.size(); ++i)
    render(glyphs()[which[i]], rng, out.images.pixels.data() + i * 28 * 28);
  out.labels = std::move(which);
  return out;
}

std::optional<DigitImages> load_mnist_dir(const std::filesystem::path& dir) {
  const auto img = dir / "train-images-idx3-ubyte";
  const auto lab = dir / "train-labels-idx1-ubyte";
  if (!std::filesystem::exists(img) || !std::filesystem::exists(lab)) return std::nullopt;
  DigitImages out{load_idx_images(img), load_idx_labels(lab)};
  check_idx_pair(out.images, out.labels);
  return out;
}

}  // namespace rfsgd
