#include <doctest.h>

#include <random>

#include "bfseg/errors.hpp"
#include "bfseg/model.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

using namespace bfseg;

namespace {

void zero_decoder(ParameterSet& params) {
  for (auto& p : params) {
    if (p.name.starts_with("decoder.")) std::fill(p.values.begin(), p.values.end(), 0.0);
  }
}

void zero_layer(ParameterSet& params, const ConvLayer& layer) {
  std::fill(params[layer.weight].values.begin(), params[layer.weight].values.end(), 0.0);
  std::fill(params[layer.bias].values.begin(), params[layer.bias].values.end(), 0.0);
}

Tensor random_image(std::uint64_t seed, int h, int w) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Tensor t(3, h, w);
  for (auto& v : t.data) v = u(rng);
  return t;
}

}  // namespace

TEST_CASE("toy encoder shapes follow stride arithmetic") {
  const Model model(ModelConfig{});
  const auto p64 = model.encode(random_image(1, 64, 64));
  const int expect64[4][3] = {{16, 16, 16}, {32, 8, 8}, {64, 4, 4}, {128, 2, 2}};
  for (int i = 0; i < 4; ++i) {
    CHECK(p64.levels[i].channels == expect64[i][0]);
    CHECK(p64.levels[i].height == expect64[i][1]);
    CHECK(p64.levels[i].width == expect64[i][2]);
  }
  const auto p96 = model.encode(random_image(1, 96, 96));
  for (int i = 0; i < 4; ++i) CHECK(p96.levels[i].height == 24 >> i);
  CHECK_THROWS_AS(model.encode(random_image(1, 48, 64)), DimensionError);
}

TEST_CASE("zero input propagates to zero features") {
  const Model model(ModelConfig{});
  for (const auto& level : model.encode(Tensor(3, 64, 64)).levels) {
    for (double v : level.data) CHECK(v == 0.0);
  }
}

TEST_CASE("condense") {
  SUBCASE("identity weights reproduce a 64-channel level") {
    ParameterSet params;
    const LightFpnDecoder dec({64, 128, 256, 512}, 64, Activation::relu, params);
    auto& w = params[dec.condense_layer(0).weight].values;
    for (int o = 0; o < 64; ++o) w[o * 64 + o] = 1.0;
    std::mt19937_64 rng(1);
    FeaturePyramid p;
    for (int i = 0; i < 4; ++i) p.levels[i] = oracle::random_tensor(rng, 64 << i, 8 >> i, 8 >> i);
    const auto out = dec.condense(params, p);
    CHECK(out.levels[0] == p.levels[0]);
    for (const auto& level : out.levels) CHECK(level.channels == 64);
  }
  SUBCASE("per-pixel linear map matches hand-rolled oracle") {
    ParameterSet params;
    const LightFpnDecoder dec({3, 6, 12, 24}, 64, Activation::relu, params);
    std::mt19937_64 rng(2);
    for (auto& p : params) {
      for (auto& v : p.values) v = std::uniform_real_distribution<double>(-1, 1)(rng);
    }
    FeaturePyramid p;
    for (int i = 0; i < 4; ++i) p.levels[i] = oracle::random_tensor(rng, 3 << i, 2, 2);
    const auto out = dec.condense(params, p);
    const auto& layer = dec.condense_layer(0);
    const auto& w = params[layer.weight].values;
    const auto& b = params[layer.bias].values;
    for (int o = 0; o < 64; ++o) {
      for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 2; ++c) {
          double acc = b[o];
          for (int i = 0; i < 3; ++i) acc += w[o * 3 + i] * p.levels[0].at(i, r, c);
          CHECK(out.levels[0].at(o, r, c) == doctest::Approx(acc).epsilon(1e-13));
        }
      }
    }
  }
}

TEST_CASE("reconstruct_feature") {
  Model model(ModelConfig{});
  auto& params = model.parameters();
  const auto& dec = model.decoder();
  std::mt19937_64 rng(3);

  CHECK(dec.stage_layer(4).spec.in_channels == 256);
  CHECK(dec.stage_layer(1).spec.in_channels == 64);

  zero_layer(params, dec.stage_layer(2));
  const Tensor p_prime = oracle::random_tensor(rng, 64, 4, 4);
  SUBCASE("zero coarser feature and zero conv give zero") {
    const std::vector<Tensor> deeper{Tensor(64, 2, 2)};
    for (double v : dec.reconstruct_feature(params, 2, deeper, p_prime).data) CHECK(v == 0.0);
  }
  SUBCASE("zero conv isolates the skip path") {
    const std::vector<Tensor> deeper{oracle::random_tensor(rng, 64, 2, 2)};
    CHECK(dec.reconstruct_feature(params, 2, deeper, p_prime) == upsample_bilinear(deeper[0], 2));
  }
  SUBCASE("wrong number of coarser features") {
    CHECK_THROWS_AS(dec.reconstruct_feature(params, 3, std::vector<Tensor>{Tensor(64, 2, 2)}, p_prime),
                    DimensionError);
  }
}

TEST_CASE("residual head") {
  Model model(ModelConfig{});
  auto& params = model.parameters();
  const auto& head = model.decoder().head_layer(3);
  std::mt19937_64 rng(4);
  const Tensor f = oracle::random_tensor(rng, 64, 3, 3);
  const Tensor out = model.decoder().residual_head(params, 3, f);
  CHECK(out.channels == 1);
  CHECK(out.height == 3);
  const Tensor ref = oracle::direct_conv(f, params[head.weight].values, params[head.bias].values, 1, 3, 1);
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.data[i] == doctest::Approx(ref.data[i]).epsilon(1e-12));
  for (double v : model.decoder().residual_head(params, 3, Tensor(64, 3, 3)).data) CHECK(v == 0.0);
}

TEST_CASE("decode shapes and the zero network") {
  Model model(ModelConfig{});
  const auto preds = model.forward(random_image(5, 64, 64));
  for (int s = 1; s <= 4; ++s) {
    CHECK(preds.stage_logits[s - 1].height == 64 / stage_stride(s));
    CHECK(preds.stage_logits[s - 1].channels == 1);
  }
  CHECK(preds.final_logits.height == 64);
  CHECK(preds.final_logits.width == 64);

  zero_decoder(model.parameters());
  const auto zero = model.forward(random_image(5, 64, 64));
  for (const auto& t : zero.stage_logits) {
    for (double v : t.data) CHECK(v == 0.0);
  }
  for (double v : zero.final_logits.data) CHECK(v == 0.0);
}

TEST_CASE("prediction pyramid is additive and telescopes") {
  const Model model(ModelConfig{});
  const auto preds = model.forward(random_image(6, 64, 96));
  for (int s = 2; s <= 4; ++s) {
    Tensor rebuilt = preds.residuals[s - 1];
    add_inplace(rebuilt, upsample_bilinear(preds.stage_logits[s - 2], 2));
    CHECK(rebuilt == preds.stage_logits[s - 1]);
  }
  const Tensor tele = oracle::telescoped_cls4(preds.residuals);
  for (std::size_t i = 0; i < tele.size(); ++i) {
    CHECK(tele.data[i] == doctest::Approx(preds.stage_logits[3].data[i]).epsilon(1e-12));
  }

  SUBCASE("bitwise with exactly representable weights") {
    std::mt19937_64 rng(9);
    ParameterSet params = model.parameters();
    oracle::set_dyadic_decoder_weights(params, rng);
    const auto p = oracle::dyadic_pyramid(rng, model.config().profile(), 64, 64);
    const auto exact = model.decoder().decode(params, p);
    CHECK(oracle::telescoped_cls4(exact.residuals) == exact.stage_logits[3]);
  }
}

TEST_CASE("decoder without activations is linear in its input") {
  ModelConfig cfg;
  cfg.activation = Activation::identity;
  const Model model(cfg);
  std::mt19937_64 rng(7);
  FeaturePyramid a, b, sum;
  for (int i = 0; i < 4; ++i) {
    a.levels[i] = oracle::random_tensor(rng, 16 << i, 8 >> i, 8 >> i);
    b.levels[i] = oracle::random_tensor(rng, 16 << i, 8 >> i, 8 >> i);
    sum.levels[i] = a.levels[i];
    add_inplace(sum.levels[i], b.levels[i]);
  }
  // Biases are zero at initialisation, so the map is linear, not just affine.
  const auto pa = model.decoder().decode(model.parameters(), a);
  const auto pb = model.decoder().decode(model.parameters(), b);
  const auto ps = model.decoder().decode(model.parameters(), sum);
  for (std::size_t i = 0; i < ps.final_logits.size(); ++i) {
    CHECK(ps.final_logits.data[i] ==
          doctest::Approx(pa.final_logits.data[i] + pb.final_logits.data[i]).epsilon(1e-10));
  }
}

TEST_CASE("forward is deterministic given the seed") {
  ModelConfig cfg;
  cfg.seed = 42;
  const Tensor img = random_image(8, 64, 64);
  const auto a = Model(cfg).forward(img);
  const auto b = Model(cfg).forward(img);
  CHECK(a.final_logits == b.final_logits);
  cfg.seed = 43;
  CHECK_FALSE(Model(cfg).forward(img).final_logits == a.final_logits);
}

TEST_CASE("analytic gradients agree with finite differences") {
  for (Activation act : {Activation::silu, Activation::relu}) {
    CAPTURE(to_string(act));
    ModelConfig cfg;
    cfg.encoder_base_channels = 4;
    cfg.decoder_width = 8;
    cfg.activation = act;
    cfg.seed = 3;
    Model model(cfg);
    std::mt19937_64 rng(12);
    const LabelRaster y = oracle::random_blocky_raster(rng, 32, 32, 3);
    const auto r = oracle::finite_difference_check(model, random_image(13, 32, 32), y, SupervisionMode{}, 80, 5);
    CAPTURE(r.worst);
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("restoring parameters validates the layout") {
  const Model a(ModelConfig{});
  ModelConfig other;
  other.decoder_width = 32;
  CHECK_THROWS_AS(Model(other, a.parameters()), ConfigError);
  const Model b(a.config(), a.parameters());
  CHECK(b.parameters() == a.parameters());
}

TEST_CASE("decoder size for a large encoder profile") {
  ParameterSet params;
  LightFpnDecoder dec({96, 192, 384, 768}, 64, Activation::relu, params);
  CHECK(params.scalar_count() < 1'000'000);
  CHECK_THROWS_AS(LightFpnDecoder({64, 64, 64, 64}, 64, Activation::relu, params), ConfigError);
}
