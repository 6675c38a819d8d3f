#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "greennas/nn/gradcheck.hpp"
#include "greennas/nn/serialize.hpp"
#include "greennas/nn/train.hpp"

using namespace greennas;
using namespace greennas::nn;

namespace {

ModelSpec make_spec(std::initializer_list<LayerSpec> layers, int in = 8, int out = 8) {
  ModelSpec s;
  s.layers = layers;
  s.input_features = in;
  s.outputs = out;
  return s;
}

// Noisy sine-like toy windows so training has something learnable.
WindowedDataset toy_dataset(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.02);
  RowMatrix m(static_cast<Eigen::Index>(n + kLookback), 8);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index f = 0; f < 8; ++f)
      m(r, f) = 0.5 + 0.4 * std::sin(0.26 * static_cast<double>(r) + static_cast<double>(f)) + noise(rng);
  return make_windows(m, kLookback, "toy");
}

}  // namespace

TEST(CountParams, PublishedCounts) {
  EXPECT_EQ(count_params(make_spec({{LayerKind::GRU, 128, 0}, {LayerKind::GRU, 128, 0}})), 153096);
  EXPECT_EQ(count_params(make_spec({{LayerKind::Conv1D, 128, 0}})), 4232);
  EXPECT_EQ(count_params(make_spec({{LayerKind::Conv1D, 32, 0}})), 1064);
  EXPECT_EQ(count_params(make_spec({{LayerKind::LSTM, 64, 0}, {LayerKind::LSTM, 64, 0}})), 52744);
}

TEST(CountParams, MatchesInstantiatedScalars) {
  std::mt19937_64 rng(3);
  const LayerKind temporal[] = {LayerKind::Conv1D, LayerKind::GRU, LayerKind::LSTM, LayerKind::Attention};
  for (int trial = 0; trial < 40; ++trial) {
    ModelSpec s;
    const int depth = 1 + static_cast<int>(rng() % 4);
    const int n_temporal = static_cast<int>(rng() % static_cast<unsigned>(depth + 1));
    for (int i = 0; i < depth; ++i) {
      const int units = kUnitChoices[rng() % 4] / 8;
      s.layers.push_back({i < n_temporal ? temporal[rng() % 4] : LayerKind::Dense, units, 0.0});
    }
    EXPECT_EQ(count_params(s), init_weights<float>(s, 1).num_scalars()) << to_descriptor(s);
  }
}

TEST(Spec, DescriptorRoundTrip) {
  const auto s = make_spec({{LayerKind::Attention, 64, 0.2}, {LayerKind::Dense, 32, 0.5}});
  EXPECT_EQ(parse_descriptor(to_descriptor(s)), s);
  EXPECT_THROW(parse_descriptor("GRU:abc:0"), FormatError);
  EXPECT_THROW(parse_descriptor("Dense:32:0,GRU:32:0"), FormatError);
}

TEST(Spec, Validation) {
  EXPECT_THROW(validate_spec(make_spec({})), PreconditionError);
  EXPECT_THROW(validate_spec(make_spec({{LayerKind::Dense, 8, 0}, {LayerKind::GRU, 8, 0}})), PreconditionError);
  EXPECT_THROW(validate_spec(make_spec({{LayerKind::Attention, 6, 0}})), PreconditionError);
}

class GradientCheck : public ::testing::TestWithParam<const char*> {};

TEST_P(GradientCheck, MatchesFiniteDifferences) {
  const auto spec = parse_descriptor(GetParam(), 3, 2);
  for (std::uint64_t seed : {11u, 12u}) {
    const auto r = gradient_check(spec, 5, 3, seed);
    EXPECT_LT(r.max_rel_error, 1e-4) << GetParam() << " worst tensor " << r.worst_tensor;
    EXPECT_EQ(r.checked, count_params(spec));
  }
}

INSTANTIATE_TEST_SUITE_P(Layers, GradientCheck,
                         ::testing::Values("Dense:6:0", "Dense:6:0,Dense:5:0", "Conv1D:6:0", "Conv1D:5:0,Conv1D:4:0",
                                           "GRU:5:0", "GRU:4:0,GRU:6:0", "LSTM:5:0", "LSTM:4:0,LSTM:6:0",
                                           "Attention:8:0", "Attention:4:0,Attention:8:0", "Conv1D:5:0,GRU:4:0",
                                           "GRU:4:0,Attention:8:0,Dense:5:0", "LSTM:4:0,Conv1D:6:0,Dense:3:0"));

TEST(Backward, DropoutMaskedUnitsGetZeroGradient) {
  const auto spec = parse_descriptor("Dense:16:0.5,Dense:4:0", 3, 2);
  auto net = init_weights<double>(spec, 4);
  Mat<double> x = Mat<double>::Random(3, 2);
  Trace<double> trace;
  std::mt19937_64 rng(9);
  const Mat<double> y = net.forward(x, 1, 2, &trace, &rng);
  net.zero_grad();
  net.backward(trace, Mat<double>::Ones(y.rows(), y.cols()));
  const auto& mask = trace.dropout_masks[0];
  auto* w0 = net.params()[0];
  int dropped = 0;
  for (Eigen::Index u = 0; u < mask.rows(); ++u)
    if (mask(u, 0) == 0.0 && mask(u, 1) == 0.0) {
      ++dropped;
      EXPECT_EQ(w0->grad.row(u).norm(), 0.0);
    }
  EXPECT_GT(dropped, 0);
}

TEST(Backward, ZeroWeightHeadBiasGradient) {
  const auto spec = make_spec({{LayerKind::Dense, 8, 0}});
  Network<double> net(spec);
  Mat<double> x = Mat<double>::Random(8, 4);
  Mat<double> truth = Mat<double>::Random(8, 4);
  Trace<double> trace;
  const Mat<double> pred = net.forward(x, 1, 4, &trace);
  EXPECT_EQ(pred.norm(), 0.0);
  net.zero_grad();
  const Mat<double> diff = pred - truth;
  net.backward(trace, (2.0 / static_cast<double>(diff.size())) * diff);
  const Mat<double> expected = (2.0 / static_cast<double>(diff.size())) * diff.rowwise().sum();
  EXPECT_LT((net.params().back()->grad - expected).norm(), 1e-12);
}

TEST(Forward, ZeroWeightsGiveHeadBias) {
  const auto spec = make_spec({{LayerKind::GRU, 32, 0}, {LayerKind::Dense, 16, 0}});
  Network<float> net(spec);
  auto* hb = net.params().back();
  for (int i = 0; i < 8; ++i) hb->value(i, 0) = static_cast<float>(i) * 0.1f;
  const Mat<float> x = Mat<float>::Random(8, 24 * 3);
  const Mat<float> y = net.forward(x, 24, 3);
  for (int b = 0; b < 3; ++b) EXPECT_EQ(y.col(b), hb->value.col(0));
}

TEST(Forward, DuplicatedRowsGiveDuplicatedOutputs) {
  const auto spec = make_spec({{LayerKind::Attention, 32, 0}, {LayerKind::Dense, 32, 0}});
  auto net = init_weights<float>(spec, 5);
  Mat<float> one = Mat<float>::Random(8, 24);
  Mat<float> x(8, 48);
  for (int t = 0; t < 24; ++t) x.col(2 * t) = x.col(2 * t + 1) = one.col(t);
  const Mat<float> y = net.forward(x, 24, 2);
  EXPECT_EQ(y.col(0), y.col(1));
}

TEST(Forward, DenseIdentityReproducesReducedInput) {
  const auto spec = make_spec({{LayerKind::Dense, 32, 0}});
  Network<float> net(spec);
  auto ps = net.params();
  ps[0]->value.setZero();
  for (int i = 0; i < 8; ++i) ps[0]->value(i, i) = 1.0f;
  for (int i = 0; i < 8; ++i) ps[2]->value(i, i) = 1.0f;
  Mat<float> x = Mat<float>::Random(8, 24).cwiseAbs();
  const Mat<float> y = net.forward(x, 24, 1);
  EXPECT_EQ(y.col(0), x.col(23));
}

TEST(Forward, RejectsBadInput) {
  TrainedModel m;
  m.net = init_weights<float>(make_spec({{LayerKind::Conv1D, 32, 0}}), 1);
  std::vector<float> x(24 * 8, 0.5f);
  EXPECT_NO_THROW(forward(m, x, 1));
  x[17] = std::nanf("");
  EXPECT_THROW(forward(m, x, 1), NumericError);
  x.pop_back();
  EXPECT_THROW(forward(m, x, 1), DataError);
}

TEST(Forward, DeterministicWithoutTraining) {
  TrainedModel m;
  m.net = init_weights<float>(make_spec({{LayerKind::LSTM, 32, 0.3}}), 2);
  std::vector<float> x(24 * 8 * 2, 0.25f);
  EXPECT_EQ(forward(m, x, 2), forward(m, x, 2));
}

TEST(Loss, Examples) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(1, 2), b(1, 2);
  b << 0.3, 0.4;
  EXPECT_NEAR(loss_mse(a, b), 0.125, 1e-15);
  EXPECT_NEAR(rmse(a, b), 0.35355339059327373, 1e-15);
  EXPECT_EQ(loss_mse(Eigen::MatrixXd::Zero(4, 8), Eigen::MatrixXd::Ones(4, 8)), 1.0);
  EXPECT_THROW(loss_mse(Eigen::MatrixXd(0, 8), Eigen::MatrixXd(0, 8)), PreconditionError);
}

TEST(Adam, ZeroGradientLeavesWeights) {
  Param<float> p("w", 2, 2, 2);
  p.value << 1, 2, 3, 4;
  const Mat<float> before = p.value;
  Param<float>* ps[] = {&p};
  AdamState<float> st;
  adam_step<float>(ps, st, {});
  EXPECT_EQ(p.value, before);
  EXPECT_EQ(st.step, 1);
}

TEST(Adam, FirstStepIsLrTimesSign) {
  Param<double> p("w", 1, 3, 1);
  p.grad << 0.5, -2.0, 1e-3;
  Param<double>* ps[] = {&p};
  AdamState<double> st;
  adam_step<double>(ps, st, {});
  EXPECT_NEAR(p.value(0, 0), -1e-3, 1e-10);
  EXPECT_NEAR(p.value(0, 1), 1e-3, 1e-10);
  EXPECT_NEAR(p.value(0, 2), -1e-3, 1e-7);
}

TEST(Adam, NonFiniteGradientNamesTensor) {
  Param<float> p("layer0.GRU.weight_hh", 1, 1, 1);
  p.grad(0, 0) = std::numeric_limits<float>::infinity();
  Param<float>* ps[] = {&p};
  AdamState<float> st;
  try {
    adam_step<float>(ps, st, {});
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("layer0.GRU.weight_hh"), std::string::npos);
  }
}

TEST(Init, BoundsAndDeterminism) {
  const auto spec = make_spec({{LayerKind::GRU, 64, 0}, {LayerKind::Dense, 32, 0}});
  auto a = init_weights<float>(spec, 7), b = init_weights<float>(spec, 7), c = init_weights<float>(spec, 8);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.params().size(); ++i) {
    const auto* p = a.params()[i];
    EXPECT_EQ(p->value, b.params()[i]->value);
    any_diff |= p->value != c.params()[i]->value;
    EXPECT_LE(p->value.cwiseAbs().maxCoeff(), 1.0 / std::sqrt(static_cast<double>(p->fan_in)) + 1e-7);
  }
  EXPECT_TRUE(any_diff);
}

TEST(Train, DeterministicAndEarlyStopping) {
  const auto tr = toy_dataset(600, 1), va = toy_dataset(200, 2);
  const auto spec = make_spec({{LayerKind::GRU, 32, 0.1}});
  TrainConfig cfg;
  cfg.max_epochs = 6;
  cfg.patience = 2;
  cfg.seed = 3;
  const auto a = train(spec, tr, va, cfg), b = train(spec, tr, va, cfg);
  ASSERT_EQ(a.meta.curve.size(), b.meta.curve.size());
  for (std::size_t i = 0; i < a.meta.curve.size(); ++i) EXPECT_EQ(a.meta.curve[i].val_rmse, b.meta.curve[i].val_rmse);
  for (std::size_t i = 0; i < a.net.params().size(); ++i) EXPECT_EQ(a.net.params()[i]->value, b.net.params()[i]->value);

  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : a.meta.curve) best = std::min(best, e.val_rmse);
  EXPECT_EQ(a.meta.best_val_rmse, best);
  EXPECT_FLOAT_EQ(evaluate_rmse(a.net, va), best);
}

TEST(Train, PatienceOneStopsAfterPlateau) {
  const auto tr = toy_dataset(100, 1), va = toy_dataset(50, 2);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;  // loss plateaus from the first epoch
  cfg.patience = 1;
  cfg.seed = 1;
  const auto m = train(make_spec({{LayerKind::Conv1D, 32, 0}}), tr, va, cfg);
  EXPECT_EQ(m.meta.epochs_run, 2);
  EXPECT_EQ(m.meta.best_epoch, 1);
}

TEST(Train, ZeroEpochsKeepsInitialWeights) {
  const auto tr = toy_dataset(100, 1), va = toy_dataset(50, 2);
  const auto spec = make_spec({{LayerKind::GRU, 32, 0}});
  const auto init = init_weights<float>(spec, 99);
  TrainConfig cfg;
  cfg.max_epochs = 0;
  const auto m = train(spec, tr, va, cfg, &init);
  for (std::size_t i = 0; i < init.params().size(); ++i) EXPECT_EQ(m.net.params()[i]->value, init.params()[i]->value);
}

TEST(Train, RejectsBadConfig) {
  const auto tr = toy_dataset(100, 1);
  TrainConfig cfg;
  cfg.patience = 50;
  EXPECT_THROW(train(make_spec({{LayerKind::Dense, 32, 0}}), tr, tr, cfg), PreconditionError);
  EXPECT_THROW(train(make_spec({{LayerKind::Dense, 32, 0}}), WindowedDataset{}, tr, TrainConfig{}), PreconditionError);
}

TEST(Serialize, RoundTripIsBitwise) {
  const auto va = toy_dataset(64, 2);
  TrainedModel m;
  m.net = init_weights<float>(make_spec({{LayerKind::LSTM, 32, 0.2}, {LayerKind::Dense, 64, 0}}), 5);
  m.meta.epochs_run = 3;
  m.meta.best_val_rmse = 0.123;
  m.scaler_ids = {"a", "b c"};
  const auto path = std::filesystem::temp_directory_path() / "greennas_test_model.gnas";
  save_model(m, path);
  const auto back = load_model(path);
  EXPECT_EQ(back.spec(), m.spec());
  EXPECT_EQ(back.scaler_ids, m.scaler_ids);
  EXPECT_EQ(back.meta.best_val_rmse, 0.123);
  EXPECT_EQ(predict(back, va), predict(m, va));
  std::filesystem::remove(path);
}

TEST(Serialize, DetectsCorruption) {
  TrainedModel m;
  m.net = init_weights<float>(make_spec({{LayerKind::Conv1D, 32, 0}}), 5);
  auto bytes = serialize_model(m);
  EXPECT_NO_THROW(deserialize_model(bytes));
  auto bad = bytes;
  bad[bad.size() / 2] ^= 0x10;
  EXPECT_THROW(deserialize_model(bad), FormatError);
  bad = bytes;
  bad[4] = 9;  // version
  EXPECT_THROW(deserialize_model(bad), FormatError);
  EXPECT_THROW(deserialize_model(std::span(bytes).first(8)), FormatError);
}

TEST(Serialize, ArtifactSizes) {
  const auto dir = std::filesystem::temp_directory_path();
  TrainedModel c, a;
  c.net = init_weights<float>(make_spec({{LayerKind::Conv1D, 32, 0}}), 1);
  a.net = init_weights<float>(make_spec({{LayerKind::GRU, 128, 0}, {LayerKind::GRU, 128, 0}}), 1);
  save_model(c, dir / "gn_c.gnas");
  save_model(a, dir / "gn_a.gnas");
  EXPECT_LT(model_size(dir / "gn_c.gnas"), 8192u);
  EXPECT_GE(model_size(dir / "gn_a.gnas"), 153096u * 4);
  EXPECT_LE(model_size(dir / "gn_a.gnas"), 153096u * 4 + 65536);
  EXPECT_THROW(model_size(""), PreconditionError);
  EXPECT_THROW(model_size(dir / "does_not_exist.gnas"), IoError);
  std::filesystem::remove(dir / "gn_c.gnas");
  std::filesystem::remove(dir / "gn_a.gnas");
}
