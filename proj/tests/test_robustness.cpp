#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "greennas/dataset/split.hpp"
#include "greennas/ingest/synthetic.hpp"
#include "greennas/robustness/robustness.hpp"

using namespace greennas;
using namespace greennas::robustness;

namespace {

Predictions column(std::initializer_list<float> v) {
  Predictions p(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (float x : v) p(i++, 0) = x;
  return p;
}

nn::Network<float> persistence_stub() {
  nn::ModelSpec spec;
  spec.layers = {{nn::LayerKind::Dense, 8, 0.0}};
  nn::Network<float> net(spec);
  auto ps = net.params();
  for (auto* p : ps) p->value.setZero();
  for (int i = 0; i < 8; ++i) {
    ps[0]->value(i, i) = 1.0f;
    ps[2]->value(i, i) = 1.0f;
  }
  return net;
}

}  // namespace

TEST(Conformal, QuantileExamples) {
  const Predictions zero = Predictions::Zero(30, 8);
  for (double q : conformal_calibrate(zero, zero).q) EXPECT_EQ(q, 0.0);

  // n = 19, alpha = 0.05: k = ceil(20 * 0.95) = 19, the largest score.
  Predictions truth(19, 1);
  for (int i = 0; i < 19; ++i) truth(i, 0) = static_cast<float>((i * 7) % 19);
  const auto c19 = conformal_calibrate(Predictions::Zero(19, 1), truth, 0.05);
  EXPECT_EQ(conformal_rank(19, 0.05), 19u);
  EXPECT_EQ(c19.q[0], 18.0);
  EXPECT_EQ(c19.n_cal, 19u);

  // n = 4, scores {1,2,3,4}, alpha = 0.5: k = 3.
  const auto c4 = conformal_calibrate(column({0, 0, 0, 0}), column({4, -1, 3, -2}), 0.5);
  EXPECT_EQ(c4.q[0], 3.0);

  // k > n gives an infinite half-width.
  const auto c10 = conformal_calibrate(Predictions::Zero(10, 1), Predictions::Ones(10, 1), 0.05);
  EXPECT_TRUE(std::isinf(c10.q[0]));

  EXPECT_THROW(conformal_calibrate(Predictions(0, 8), Predictions(0, 8)), DataError);
  EXPECT_THROW(conformal_calibrate(zero, zero, 0.0), PreconditionError);
}

TEST(Conformal, MonotoneInAlpha) {
  std::mt19937_64 rng(8);
  std::normal_distribution<float> n(0, 1);
  Predictions pred(300, 8), truth(300, 8);
  for (Eigen::Index k = 0; k < pred.size(); ++k) {
    pred.data()[k] = n(rng);
    truth.data()[k] = n(rng);
  }
  std::vector<double> prev(8, std::numeric_limits<double>::infinity());
  for (double alpha : {0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 0.9}) {
    const auto c = conformal_calibrate(pred, truth, alpha);
    for (std::size_t f = 0; f < 8; ++f) {
      EXPECT_LE(c.q[f], prev[f]);
      EXPECT_GE(c.q[f], 0.0);
      prev[f] = c.q[f];
    }
  }
}

TEST(Conformal, IntervalsAreCenteredWithConstantWidth) {
  ConformalCalibration c{0.05, {0.1, 0.2, 0.0, 0.3, 0.1, 0.1, 0.1, 0.1}, 10};
  Predictions point = Predictions::Random(4, 8);
  const auto iv = conformal_interval(point, c);
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index f = 0; f < 8; ++f) {
      EXPECT_FLOAT_EQ(0.5f * (iv.lower(i, f) + iv.upper(i, f)), point(i, f));
      EXPECT_NEAR(iv.upper(i, f) - iv.lower(i, f), 2.0 * c.q[static_cast<std::size_t>(f)], 1e-6);
    }
  EXPECT_EQ(iv.lower.col(2), point.col(2));
  EXPECT_EQ(iv.upper.col(2), point.col(2));
}

TEST(Coverage, Examples) {
  const Predictions truth = column({0.0f, 1.0f, 2.0f, 3.0f});
  const Intervals all{column({-1, 0, 1, 2}), column({1, 2, 3, 4})};
  const auto c1 = empirical_coverage(all, truth);
  EXPECT_EQ(c1.macro, 1.0);
  EXPECT_DOUBLE_EQ(c1.mean_width, 2.0);
  const Intervals half{column({-1, 0, 5, 5}), column({1, 2, 6, 6})};
  EXPECT_EQ(empirical_coverage(half, truth).per_feature[0], 0.5);
}

TEST(Coverage, GaussianRegressionNearNominal) {
  // y = 2x + N(0, 0.3); predictor 2x. Exchangeable residuals.
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<float> ux(-1, 1);
  std::normal_distribution<float> noise(0, 0.3f);
  auto draw = [&](int n, Predictions& p, Predictions& t) {
    p.resize(n, 8);
    t.resize(n, 8);
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      const float x = ux(rng);
      p.data()[k] = 2 * x;
      t.data()[k] = 2 * x + noise(rng);
    }
  };
  Predictions pc, tc, pt, tt;
  draw(2000, pc, tc);
  draw(10000, pt, tt);
  const auto cal = conformal_calibrate(pc, tc, 0.05);
  const auto cov = empirical_coverage(conformal_interval(pt, cal), tt);
  EXPECT_GE(cov.macro, 0.94);
  EXPECT_LE(cov.macro, 0.96);
  for (double q : cal.q) EXPECT_NEAR(q, 1.96 * 0.3, 0.05);
}

TEST(Importance, IgnoredFeatureHasZeroDelta) {
  nn::ModelSpec spec;
  spec.layers = {{nn::LayerKind::GRU, 8, 0.0}};
  auto net = nn::init_weights<float>(spec, 4);
  net.params()[0]->value.col(3).setZero();  // GRU input weights for feature 3
  auto part = partition_city(generate_synthetic_city(6, 800, ClimateProfile::Temperate));
  const std::vector<CityPartition> parts{part};
  const auto ds = assemble_pooled(parts, Segment::Val);
  const auto rep = permutation_importance(net, ds, 3, 1);
  ASSERT_EQ(rep.features.size(), 8u);
  EXPECT_EQ(rep.features[3].feature, "surface_pressure");
  EXPECT_NEAR(rep.features[3].delta, 0.0, 1e-9);
  EXPECT_GT(std::abs(rep.features[0].delta), 1e-6);
  const auto again = permutation_importance(net, ds, 3, 1);
  for (std::size_t f = 0; f < 8; ++f) EXPECT_EQ(rep.features[f].permuted_mean, again.features[f].permuted_mean);
  EXPECT_THROW(permutation_importance(net, WindowedDataset{}, 3, 1), PreconditionError);
}

TEST(Importance, PermutingEverythingHurtsMost) {
  auto part = partition_city(generate_synthetic_city(12, 2000, ClimateProfile::Temperate));
  const std::vector<CityPartition> parts{part};
  const auto tr = assemble_pooled(parts, Segment::Train), va = assemble_pooled(parts, Segment::Val);
  nn::ModelSpec spec;
  spec.layers = {{nn::LayerKind::GRU, 16, 0.0}};
  nn::TrainConfig cfg;
  cfg.max_epochs = 15;
  cfg.patience = 5;
  cfg.batch_size = 32;
  const auto model = nn::train(spec, tr, va, cfg);
  const auto rep = permutation_importance(model.net, va, 3, 7);
  double worst = 0.0;
  for (const auto& f : rep.features) worst = std::max(worst, f.permuted_mean);
  std::vector<std::size_t> all(8);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::mt19937_64 rng(7);
  EXPECT_GE(nn::evaluate_rmse(model.net, permute_features(va, all, rng)), worst);
}

TEST(Horizon, SingleStepMatchesForward) {
  nn::TrainedModel m;
  m.net = nn::init_weights<float>(nn::parse_descriptor("LSTM:16:0,Dense:8:0", 8, 8), 3);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(0, 1);
  std::vector<float> seed(24 * 8);
  for (auto& v : seed) v = u(rng);
  const auto one = recursive_forecast(m.net, seed, 1);
  const auto fwd = nn::forward(m, seed, 1);
  EXPECT_EQ(one.row(0), fwd.row(0));
  EXPECT_THROW(recursive_forecast(m.net, seed, 0), PreconditionError);
  EXPECT_THROW(recursive_forecast(m.net, seed, 49), PreconditionError);

  // Second step consumes the first prediction.
  const auto two = recursive_forecast(m.net, seed, 2);
  std::vector<float> shifted(seed.begin() + 8, seed.end());
  for (int f = 0; f < 8; ++f) shifted.push_back(one(0, f));
  EXPECT_EQ(two.row(1), nn::forward(m, shifted, 1).row(0));
}

TEST(Horizon, PersistenceStubIsFixedPoint) {
  const auto net = persistence_stub();
  std::vector<float> seed(24 * 8);
  for (std::size_t i = 0; i < seed.size(); ++i) seed[i] = static_cast<float>(i % 13) / 13.0f;
  const auto out = recursive_forecast(net, seed, 12);
  for (Eigen::Index h = 0; h < 12; ++h)
    for (Eigen::Index f = 0; f < 8; ++f) EXPECT_EQ(out(h, f), seed[23 * 8 + static_cast<std::size_t>(f)]);
}

TEST(Horizon, NonFiniteStepIsReported) {
  auto net = persistence_stub();
  net.params()[3]->value(0, 0) = std::numeric_limits<float>::infinity();
  std::vector<float> seed(24 * 8, 0.5f);
  try {
    recursive_forecast(net, seed, 5);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("step 1"), std::string::npos);
  }
}

TEST(Horizon, RmseMatchesPersistenceOracle) {
  const auto s = generate_synthetic_city(3, 400, ClimateProfile::Arid);
  const auto scaler = fit_scaler(s, {0, 400});
  const RowMatrix scaled = apply_scaler(s, scaler);
  const auto rep = horizon_rmse(persistence_stub(), scaled, {100, 400}, 6, 24, 3);
  std::size_t windows = 0;
  std::vector<double> sse(6, 0.0);
  for (std::size_t st = 100; st + 30 <= 400; st += 3, ++windows)
    for (std::size_t h = 0; h < 6; ++h)
      for (Eigen::Index f = 0; f < 8; ++f) {
        const double d = scaled(static_cast<Eigen::Index>(st + 24 + h), f) - scaled(static_cast<Eigen::Index>(st + 23), f);
        sse[h] += d * d;
      }
  ASSERT_EQ(rep.windows, windows);
  for (std::size_t h = 0; h < 6; ++h) EXPECT_NEAR(rep.rmse[h], std::sqrt(sse[h] / static_cast<double>(windows * 8)), 1e-6);
  EXPECT_LT(rep.rmse[0], rep.rmse[5]);
}
