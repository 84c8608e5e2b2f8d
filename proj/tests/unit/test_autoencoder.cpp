#include <doctest.h>

#include <random>

#include "wake/autoencoder.hpp"
#include "wake/errors.hpp"

using namespace wake;

namespace {

AeArchitecture random_arch(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> stages(1, 2), ch(1, 3), lat(1, 4), side(3, 9);
  AeArchitecture a;
  const std::size_t s = stages(rng);
  a.encoder_channels.clear();
  a.decoder_channels.clear();
  for (std::size_t l = 0; l < s; ++l) {
    a.encoder_channels.push_back(ch(rng));
    a.decoder_channels.push_back(ch(rng));
  }
  a.latent_dim = lat(rng);
  a.grid_rows = side(rng);
  a.grid_cols = side(rng);
  const std::size_t div = std::size_t{1} << s;
  a.padded_rows = (a.grid_rows + div - 1) / div * div;
  a.padded_cols = (a.grid_cols + div - 1) / div * div;
  return a;
}

ScanGrid random_scan(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  std::uniform_real_distribution<double> u(0.3, 1.2);
  ScanGrid s = ScanGrid::with_shape(rows, cols);
  for (double& v : s.values) v = u(rng);
  return s;
}

}  // namespace

TEST_SUITE("autoencoder") {

TEST_CASE("default architecture compresses 2501 cells to 4") {
  const AeArchitecture a;
  CHECK(a.input_size() == 2501);
  CHECK(a.latent_dim == 4);
  CHECK(a.padded_rows == 64);
  CHECK(a.padded_cols == 44);
  const AeParams p = AeParams::initialize(a, 1);
  const AeOutput out = ae_forward(p, analytic_scan(ParamVector{}));
  CHECK(out.latent.z.size() == 4);
  CHECK(out.reconstruction.rows == 61);
  CHECK(out.reconstruction.cols == 41);
  CHECK(out.reconstruction.values.size() == 2501);
  const Tensor3 in = ae_prepare_input(p, analytic_scan(ParamVector{}));
  CHECK(in.rows == 64);
  CHECK(in.cols == 44);
}

TEST_CASE("architectures that cannot pool evenly are rejected") {
  AeArchitecture a;
  a.padded_rows = 62;
  CHECK_THROWS_AS(a.validate(), ShapeMismatch);
  AeArchitecture b;
  b.decoder_channels = {8};
  CHECK_THROWS_AS(b.validate(), ShapeMismatch);
}

TEST_CASE("zero parameters give a zero code and a zero field") {
  AeParams p = AeParams::initialize(AeArchitecture{}, 2);
  std::fill(p.weights.begin(), p.weights.end(), 0.0);
  const AeOutput out = ae_forward(p, analytic_scan(ParamVector{}));
  for (double z : out.latent.z) CHECK(z == 0.0);
  for (double v : out.reconstruction.values) CHECK(v == 0.0);
}

TEST_CASE("forward pass is deterministic") {
  const AeParams p = AeParams::initialize(AeArchitecture{}, 3);
  const ScanGrid s = impute_missing(simulate_scan(ParamVector{}, 0.03, 0.1, 5));
  const AeOutput a = ae_forward(p, s), b = ae_forward(p, s);
  CHECK(a.latent.z == b.latent.z);
  CHECK(a.reconstruction == b.reconstruction);
  CHECK(ae_decode(p, ae_encode(p, s)) == a.reconstruction);
}

TEST_CASE("zero input with zero biases has no conv weight gradient") {
  AeArchitecture a;
  a.grid_rows = 7;
  a.grid_cols = 6;
  a.padded_rows = 8;
  a.padded_cols = 8;
  const AeParams p = AeParams::initialize(a, 4);
  ScanGrid s = ScanGrid::with_shape(7, 6);
  std::fill(s.values.begin(), s.values.end(), 0.0);
  const AeGradient g = ae_backward(p, s);
  const AeLayout layout(a);
  auto zero_slot = [&](const AeLayout::Slot& slot) {
    for (std::size_t i = 0; i < slot.weight_count; ++i) CHECK(g.grad[slot.weights + i] == 0.0);
  };
  for (const auto& slot : layout.encoder_convs) zero_slot(slot);
  for (const auto& slot : layout.decoder_convs) zero_slot(slot);
  zero_slot(layout.output_conv);
}

TEST_CASE("gradient matches central differences on random architectures") {
  std::mt19937_64 rng(11);
  const double h = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    CAPTURE(trial);
    const AeArchitecture a = random_arch(rng);
    AeParams p = AeParams::initialize(a, static_cast<std::uint64_t>(trial) + 100);
    std::normal_distribution<double> n(0.0, 0.1);
    const AeLayout layout(a);
    auto jitter_biases = [&](const AeLayout::Slot& s) {
      for (std::size_t i = 0; i < s.bias_count; ++i) p.weights[s.biases + i] = n(rng);
    };
    for (const auto& s : layout.encoder_convs) jitter_biases(s);
    for (const auto& s : layout.decoder_convs) jitter_biases(s);
    jitter_biases(layout.encoder_dense);
    jitter_biases(layout.decoder_dense);
    jitter_biases(layout.output_conv);

    const ScanGrid s = random_scan(rng, a.grid_rows, a.grid_cols);
    const AeGradient g = ae_backward(p, s);
    double num = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < p.weights.size(); ++i) {
      AeParams pp = p, pm = p;
      pp.weights[i] += h;
      pm.weights[i] -= h;
      const double fd = (ae_backward(pp, s).loss - ae_backward(pm, s).loss) / (2 * h);
      num += (fd - g.grad[i]) * (fd - g.grad[i]);
      na += g.grad[i] * g.grad[i];
      nn += fd * fd;
    }
    CHECK(std::sqrt(num) / std::sqrt(std::max(na, nn)) < 1e-4);
  }
}

TEST_CASE("parameter count follows the architecture") {
  AeArchitecture a;
  // enc conv 1->8, 8->16; dense 16*16*11 -> 4; dense 4 -> 16*16*11; dec conv 16->8, 8->8; out 8->1
  const std::size_t expected = (8 * 9 + 8) + (16 * 8 * 9 + 16) + (2816 * 4 + 4) + (4 * 2816 + 2816) +
                               (8 * 16 * 9 + 8) + (8 * 8 * 9 + 8) + (8 * 9 + 1);
  CHECK(a.parameter_count() == expected);
}

TEST_CASE("training reduces the loss on noise-free scans") {
  GeneratorConfig gc;
  gc.n = 50;
  gc.noise_sd = 0.0;
  gc.dropout_rate = 0.0;
  gc.seed = 31;
  const Dataset ds = generate_dataset(gc);
  AeTrainConfig c;
  c.epochs = 200;
  c.seed = 5;
  AeParams init = AeParams::initialize(c.arch, c.seed);
  init.norm = compute_normalization(ds.scans, c.arch);
  double initial = 0.0;
  for (const auto& s : ds.scans) initial += ae_backward(init, s).loss;
  initial /= static_cast<double>(ds.scans.size());

  const AeTrainResult r = ae_train(ds.scans, c);
  REQUIRE(r.loss_history.size() == 200);
  CHECK(r.loss_history.back() < 0.2 * initial);
}

TEST_CASE("zero learning rate leaves the parameters unchanged") {
  GeneratorConfig gc;
  gc.n = 6;
  gc.seed = 32;
  const Dataset ds = generate_dataset(gc);
  AeTrainConfig c;
  c.epochs = 3;
  c.batch_size = 4;
  c.seed = 6;
  c.adam.learning_rate = 0.0;
  const AeTrainResult r = ae_train(ds.scans, c);
  CHECK(r.params.weights == AeParams::initialize(c.arch, c.seed).weights);
  REQUIRE(r.loss_history.size() == 3);
  CHECK(r.loss_history[1] == doctest::Approx(r.loss_history[0]).epsilon(1e-14));
  CHECK(r.loss_history[2] == doctest::Approx(r.loss_history[0]).epsilon(1e-14));
}

TEST_CASE("same seed, same loss history") {
  GeneratorConfig gc;
  gc.n = 8;
  gc.seed = 33;
  const Dataset ds = generate_dataset(gc);
  AeTrainConfig c;
  c.epochs = 2;
  c.batch_size = 3;
  c.seed = 7;
  const AeTrainResult a = ae_train(ds.scans, c), b = ae_train(ds.scans, c);
  CHECK(a.loss_history == b.loss_history);
  CHECK(a.params.weights == b.params.weights);
}

TEST_CASE("normalization uses per-cell means and one global scale") {
  ScanGrid a = ScanGrid::with_shape(2, 2), b = ScanGrid::with_shape(2, 2);
  a.values = {1, 2, 3, 4};
  b.values = {3, 2, 1, 0};
  AeArchitecture arch;
  arch.grid_rows = arch.grid_cols = 2;
  arch.padded_rows = arch.padded_cols = 4;
  const std::vector<ScanGrid> scans{a, b};
  const AeNormalization n = compute_normalization(scans, arch);
  CHECK(n.cell_mean == std::vector<double>{2, 2, 2, 2});
  // deviations: +-1, 0, +-1, +-2 -> mean square (1+0+1+4)*2/8
  CHECK(n.scale == doctest::Approx(std::sqrt(12.0 / 8.0)));
}

}  // TEST_SUITE
