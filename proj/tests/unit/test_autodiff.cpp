#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "beac/adam.hpp"
#include "beac/checkpoint.hpp"
#include "beac/graph.hpp"
#include "beac/kernels.hpp"
#include "beac/params.hpp"
#include "support.hpp"

using namespace beac;
using beac::testing::random_tensor;

TEST(Tensor, RejectsNonFiniteAndBadShapes) {
  EXPECT_THROW(Tensor({2}, {1.0, std::nan("")}), NonFiniteError);
  EXPECT_THROW(Tensor({1}, {std::numeric_limits<double>::infinity()}), NonFiniteError);
  EXPECT_THROW(Tensor({2, 2}, {1.0, 2.0, 3.0}), ShapeError);
  EXPECT_THROW(Tensor({0, 2}, {}), ShapeError);
  EXPECT_THROW(Tensor({1, 1, 1}, {1.0}), ShapeError);
  const auto t = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  EXPECT_EQ(t.at(1, 2), 6.0);
  EXPECT_EQ(Tensor::row({1, 2}).rows(), 1u);
  EXPECT_EQ(Tensor::scalar(4.0).item(), 4.0);
}

TEST(Forward, DenseIdentityLayer) {
  ad::Graph g;
  auto x = g.input("x");
  auto y = g.add(g.matmul(x, g.parameter("w")), g.parameter("b"));
  (void)y;
  ad::Bindings b{{"x", Tensor::row({1, 2, 3})},
                 {"w", Tensor::matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1})},
                 {"b", Tensor::zeros({1, 3})}};
  EXPECT_EQ(g.forward(b).to_vector(), (std::vector<double>{1, 2, 3}));
}

TEST(Forward, TanhOfZeroIsZero) {
  ad::Graph g;
  g.tanh(g.input("x"));
  EXPECT_EQ(g.forward({{"x", Tensor::zeros({2, 3})}}).to_vector(), std::vector<double>(6, 0.0));
}

TEST(Forward, RandomMlpMatchesStraightLineOracle) {
  Rng rng(11);
  const std::size_t sizes[] = {4, 5, 3, 2};
  ad::ParameterStore params;
  for (int l = 0; l < 3; ++l) ad::add_dense(params, "l" + std::to_string(l), sizes[l], sizes[l + 1], rng);
  const auto x = random_tensor(rng, 2, 4);

  ad::Graph g;
  auto h = g.input("x");
  for (int l = 0; l < 3; ++l) {
    const auto p = "l" + std::to_string(l);
    h = g.add(g.matmul(h, g.parameter(p + ".w")), g.parameter(p + ".b"));
    if (l < 2) h = g.tanh(h);
  }
  auto bindings = params;
  bindings["x"] = x;
  const auto out = g.forward(bindings);

  // Independent oracle: plain loops over row-major arrays.
  std::vector<std::vector<double>> act(2, std::vector<double>(x.to_vector().begin(), x.to_vector().end()));
  for (std::size_t r = 0; r < 2; ++r) act[r] = {x.at(r, 0), x.at(r, 1), x.at(r, 2), x.at(r, 3)};
  for (int l = 0; l < 3; ++l) {
    const auto& w = params.at("l" + std::to_string(l) + ".w");
    const auto& bias = params.at("l" + std::to_string(l) + ".b");
    for (auto& row : act) {
      std::vector<double> next(sizes[l + 1]);
      for (std::size_t j = 0; j < sizes[l + 1]; ++j) {
        double s = bias[j];
        for (std::size_t i = 0; i < sizes[l]; ++i) s += row[i] * w.at(i, j);
        next[j] = l < 2 ? std::tanh(s) : s;
      }
      row = next;
    }
  }
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(out.at(r, j), act[r][j], 1e-14);
}

TEST(Forward, ShapeMismatchNamesTheNode) {
  ad::Graph g;
  auto m = g.matmul(g.input("a"), g.input("b"));
  g.label(m, "proj");
  try {
    g.forward({{"a", Tensor::zeros({2, 3})}, {"b", Tensor::zeros({2, 3})}});
    FAIL() << "expected a shape error";
  } catch (const ShapeError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("matmul"), std::string::npos) << what;
    EXPECT_NE(what.find("proj"), std::string::npos) << what;
  }
}

TEST(Forward, UnboundInputThrows) {
  ad::Graph g;
  g.tanh(g.input("x"));
  EXPECT_THROW(g.forward({}), ad::GraphError);
}

TEST(Backward, SquareAtThreeGivesSix) {
  ad::Graph g;
  auto x = g.parameter("x");
  auto loss = g.sum(g.mul(x, x));
  g.forward({{"x", Tensor::scalar(3.0)}});
  EXPECT_DOUBLE_EQ(g.backward(loss).at("x").item(), 6.0);
}

TEST(Backward, ConstantLossGivesZeroGradients) {
  ad::Graph g;
  auto x = g.parameter("x");
  g.tanh(x);
  auto loss = g.sum(g.constant(Tensor::scalar(5.0)));
  g.forward({{"x", Tensor::row({1.0, 2.0})}});
  const auto grads = g.backward(loss);
  EXPECT_EQ(grads.at("x").to_vector(), (std::vector<double>{0.0, 0.0}));
}

TEST(Backward, UnreachableParameterGetsZero) {
  ad::Graph g;
  auto x = g.parameter("x");
  g.parameter("unused");
  auto loss = g.sum(g.tanh(x));
  g.forward({{"x", Tensor::row({0.5})}, {"unused", Tensor::zeros({2, 2})}});
  const auto grads = g.backward(loss);
  EXPECT_EQ(grads.at("unused").to_vector(), std::vector<double>(4, 0.0));
}

TEST(Backward, RequiresForwardAndScalarLoss) {
  ad::Graph g;
  auto x = g.parameter("x");
  auto y = g.tanh(x);
  EXPECT_THROW(g.backward(y), ad::GraphError);
  g.forward({{"x", Tensor::row({1.0, 2.0})}});
  EXPECT_THROW(g.backward(y), ad::GraphError);
}

class OpGradient : public ::testing::TestWithParam<std::size_t> {};

TEST_P(OpGradient, MatchesCentralDifferencesOverSeeds) {
  const auto cases = beac::testing::op_cases();
  const auto& c = cases[GetParam()];
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(mix_seed(seed, GetParam()));
    ad::Graph g;
    ad::Bindings b;
    const auto loss = c.build(g, b, rng);
    const auto r = beac::testing::fd_check(g, loss, b, rng);
    ASSERT_LT(r.max_error, 1e-4) << c.name << " seed " << seed << ": " << r.worst;
  }
}

INSTANTIATE_TEST_SUITE_P(AllOps, OpGradient, ::testing::Range<std::size_t>(0, beac::testing::op_cases().size()),
                         [](const auto& info) { return beac::testing::op_cases()[info.param].name; });

TEST(Backward, RandomMlpSquaredErrorMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    ad::ParameterStore params;
    ad::add_dense(params, "l0", 3, 6, rng);
    ad::add_dense(params, "l1", 6, 6, rng);
    ad::add_dense(params, "l2", 6, 2, rng);
    ad::Graph g;
    auto h = g.input("x");
    for (int l = 0; l < 3; ++l) {
      const auto p = "l" + std::to_string(l);
      h = g.add(g.matmul(h, g.parameter(p + ".w")), g.parameter(p + ".b"));
      if (l < 2) h = g.tanh(h);
    }
    auto loss = g.squared_error(h, g.input("y"), g.constant(Tensor::filled({4, 1}, 0.25)));
    auto b = params;
    b["x"] = random_tensor(rng, 4, 3);
    b["y"] = random_tensor(rng, 4, 2);
    const auto r = beac::testing::fd_check(g, loss, b, rng);
    ASSERT_LT(r.max_error, 1e-4) << r.worst;
  }
}

TEST(Graph, ForwardIsBitDeterministic) {
  Rng rng(3);
  ad::ParameterStore params;
  ad::add_dense(params, "l", 8, 16, rng);
  ad::Graph g;
  auto y = g.sigmoid(g.add(g.matmul(g.input("x"), g.parameter("l.w")), g.parameter("l.b")));
  auto b = params;
  b["x"] = random_tensor(rng, 5, 8);
  const auto first = g.forward(b).to_vector();
  const auto second = g.forward(b).to_vector();
  EXPECT_EQ(first, second);
  (void)y;
}

TEST(Graph, DiamondIsOrderIndependent) {
  // loss = sum(tanh(x) * sigmoid(x) + tanh(x)); the two branches are declared
  // in opposite orders in the two graphs.
  const ad::Bindings b{{"x", Tensor::matrix(2, 2, {0.3, -1.2, 2.0, 0.1})}};
  ad::Graph g1;
  auto x1 = g1.parameter("x");
  auto t1 = g1.tanh(x1);
  auto s1 = g1.sigmoid(x1);
  auto l1 = g1.sum(g1.add(g1.mul(t1, s1), t1));
  ad::Graph g2;
  auto x2 = g2.parameter("x");
  auto s2 = g2.sigmoid(x2);
  auto t2 = g2.tanh(x2);
  auto l2 = g2.sum(g2.add(g2.mul(t2, s2), t2));
  EXPECT_EQ(g1.forward(b).item(), g2.forward(b).item());
  // Gradient contributions may be summed in a different order: equal to round-off.
  const auto d1 = g1.backward(l1).at("x").to_vector();
  const auto d2 = g2.backward(l2).at("x").to_vector();
  for (std::size_t i = 0; i < d1.size(); ++i) EXPECT_NEAR(d1[i], d2[i], 1e-15);
}

TEST(Kernels, ParallelMatchesSerialReference) {
  Rng rng(5);
  for (auto d : {kernels::Dims{3, 4, 5}, kernels::Dims{1, 1, 1}, kernels::Dims{80, 70, 192},
                 kernels::Dims{700, 72, 192}}) {
    const auto a = random_tensor(rng, d.m, d.k).to_vector();
    const auto b = random_tensor(rng, d.k, d.n).to_vector();
    const auto gm = random_tensor(rng, d.m, d.n).to_vector();
    std::vector<double> c1(d.m * d.n), c2(d.m * d.n);
    kernels::serial::matmul(a, b, c1, d);
    kernels::omp::matmul(a, b, c2, d);
    for (std::size_t i = 0; i < c1.size(); ++i) ASSERT_NEAR(c1[i], c2[i], 1e-12 * (1.0 + std::abs(c1[i])));
    std::vector<double> ga1(d.m * d.k, 0.5), ga2(d.m * d.k, 0.5);
    kernels::serial::matmul_a_bt_acc(gm, b, ga1, d);
    kernels::omp::matmul_a_bt_acc(gm, b, ga2, d);
    for (std::size_t i = 0; i < ga1.size(); ++i) ASSERT_NEAR(ga1[i], ga2[i], 1e-12 * (1.0 + std::abs(ga1[i])));
    std::vector<double> gb1(d.k * d.n, -0.5), gb2(d.k * d.n, -0.5);
    kernels::serial::matmul_at_b_acc(a, gm, gb1, d);
    kernels::omp::matmul_at_b_acc(a, gm, gb2, d);
    for (std::size_t i = 0; i < gb1.size(); ++i) ASSERT_NEAR(gb1[i], gb2[i], 1e-12 * (1.0 + std::abs(gb1[i])));
  }
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  ad::Bindings params{{"w", Tensor::row({1.0, -2.0})}};
  auto state = ad::make_adam(params, 0.1);
  ad::adam_step(params, {{"w", Tensor::zeros({1, 2})}}, state);
  EXPECT_EQ(params.at("w").to_vector(), (std::vector<double>{1.0, -2.0}));
  EXPECT_EQ(state.first_moment.at("w").to_vector(), (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(state.step, 1u);
}

TEST(Adam, ZeroGradientDecaysMoments) {
  ad::Bindings params{{"w", Tensor::row({1.0, -2.0})}};
  auto state = ad::make_adam(params, 0.1);
  state.first_moment["w"] = Tensor::row({0.5, 0.5});
  state.second_moment["w"] = Tensor::row({0.25, 0.25});
  ad::adam_step(params, {{"w", Tensor::zeros({1, 2})}}, state);
  EXPECT_DOUBLE_EQ(state.first_moment.at("w")[0], 0.45);
  EXPECT_DOUBLE_EQ(state.second_moment.at("w")[0], 0.25 * 0.999);
}

TEST(Adam, FirstStepMagnitudeIsLearningRate) {
  ad::Bindings params{{"p", Tensor::scalar(2.0)}};
  auto state = ad::make_adam(params, 0.1);
  ad::adam_step(params, {{"p", Tensor::scalar(1.0)}}, state);
  // m = 0.1, v = 0.001; m_hat = 1, v_hat = 1; step = 0.1 / (1 + 1e-8).
  EXPECT_NEAR(params.at("p").item(), 2.0 - 0.1 / (1.0 + 1e-8), 1e-15);
  ad::adam_step(params, {{"p", Tensor::scalar(1.0)}}, state);
  EXPECT_EQ(state.step, 2u);
}

TEST(Adam, IdenticalParametersGetIdenticalUpdates) {
  ad::Bindings params{{"a", Tensor::row({0.3, 0.7})}, {"b", Tensor::row({0.3, 0.7})}};
  auto state = ad::make_adam(params, 0.01);
  for (int i = 0; i < 5; ++i)
    ad::adam_step(params, {{"a", Tensor::row({0.2, -1.0})}, {"b", Tensor::row({0.2, -1.0})}}, state);
  EXPECT_EQ(params.at("a").to_vector(), params.at("b").to_vector());
}

TEST(Adam, ErrorsNameTheParameter) {
  ad::Bindings params{{"enc.w", Tensor::scalar(1.0)}};
  auto state = ad::make_adam(params, 0.1);
  EXPECT_THROW(ad::adam_step(params, {}, state), std::invalid_argument);
  EXPECT_THROW(ad::adam_step(params, {{"enc.w", Tensor::zeros({1, 2})}}, state), ShapeError);
  state.learning_rate = 0.0;
  EXPECT_THROW(ad::adam_step(params, {{"enc.w", Tensor::scalar(1.0)}}, state), std::invalid_argument);
  state.learning_rate = 0.1;
  try {
    ad::adam_step(params, {{"enc.w", Tensor::scalar(1e200)}}, state);
    FAIL() << "expected a non-finite error";
  } catch (const NonFiniteError& e) {
    EXPECT_NE(std::string(e.what()).find("enc.w"), std::string::npos) << e.what();
  }
}

TEST(Backward, NonFiniteGradientNamesTheNode) {
  // Forward stays at zero; the upstream gradient 1e300 * 1e300 overflows.
  ad::Graph g;
  auto x = g.parameter("x");
  auto s = g.sum(x);
  g.label(s, "total");
  auto loss = g.scale(g.scale(s, 1e300), 1e300);
  g.forward({{"x", Tensor::scalar(0.0)}});
  try {
    g.backward(loss);
    FAIL() << "expected a non-finite gradient error";
  } catch (const NonFiniteError& e) {
    EXPECT_NE(std::string(e.what()).find("non-finite gradient"), std::string::npos) << e.what();
  }
}

TEST(Adam, ClipGlobalNorm) {
  ad::Bindings grads{{"a", Tensor::row({3.0})}, {"b", Tensor::row({4.0})}};
  EXPECT_DOUBLE_EQ(ad::clip_global_norm(grads, 1.0), 5.0);
  EXPECT_DOUBLE_EQ(grads.at("a").item(), 0.6);
  EXPECT_DOUBLE_EQ(grads.at("b").item(), 0.8);
  ad::Bindings small{{"a", Tensor::row({0.1})}};
  ad::clip_global_norm(small, 1.0);
  EXPECT_EQ(small.at("a").item(), 0.1);
}

TEST(Params, UniformInitBounds) {
  Rng rng(1);
  const auto t = ad::uniform_init(30, 40, 16, rng);
  for (double v : t.data()) {
    EXPECT_LE(std::abs(v), 0.25);
  }
  ad::ParameterStore store;
  ad::add_dense(store, "x", 3, 4, rng);
  EXPECT_EQ(ad::parameter_count(store), 16u);
}

TEST(Checkpoint, RoundTripIsExactAndDetectsCorruption) {
  Rng rng(9);
  ad::Checkpoint c;
  c.meta = {{"note", "x"}, {"k", 3}};
  c.tensors["a.w"] = random_tensor(rng, 3, 4);
  c.tensors["b"] = Tensor::row({1e-300, -0.1, 123456.789});
  const auto bytes = ad::encode_checkpoint(c);
  const auto back = ad::decode_checkpoint(bytes);
  EXPECT_EQ(back.meta, c.meta);
  EXPECT_TRUE(back.tensors.at("a.w") == c.tensors.at("a.w"));
  EXPECT_TRUE(back.tensors.at("b") == c.tensors.at("b"));
  EXPECT_EQ(ad::encode_checkpoint(back), bytes);
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(ad::decode_checkpoint(bad), ad::CheckpointError);
  EXPECT_THROW(ad::decode_checkpoint(bytes.substr(0, bytes.size() - 3)), ad::CheckpointError);

  beac::testing::TempDir dir("ckpt");
  const auto path = dir.path / "m.ckpt";
  ad::save_checkpoint(path, c);
  EXPECT_FALSE(std::filesystem::exists(dir.path / "m.ckpt.tmp"));
  EXPECT_EQ(ad::read_file(path), bytes);
}
