#include <gtest/gtest.h>

#include <cmath>

#include "fishforge/checkpoint.hpp"
#include "fishforge/error.hpp"
#include "fishforge/network.hpp"
#include "fishforge/schedule.hpp"
#include "fishforge/train.hpp"
#include "oracles/oracles.hpp"

namespace fishforge {
namespace {

Architecture mini_arch() {
  Architecture a;
  a.input_side = 2;
  a.encoder = {8, 8};
  a.projector = {8, 4};
  a.classifier_width = 8;
  a.classifier_layers = 2;
  a.classes = 3;
  a.dropout = 0.25;
  return a;
}

Architecture small_arch() {
  Architecture a;
  a.input_side = 8;
  a.encoder = {32, 16};
  a.projector = {16, 8};
  a.classifier_width = 16;
  return a;
}

Dataset small_dataset() {
  GenerationSpec spec;
  spec.counts = {8, 8, 8};
  spec.master_seed = 5;
  return generate_in_memory(spec);
}

TrainConfig small_config(TrainMode mode) {
  TrainConfig cfg;
  cfg.mode = mode;
  cfg.arch = small_arch();
  cfg.batch_size = 8;
  cfg.epochs = 2;
  cfg.seed = 3;
  return cfg;
}

std::vector<double> flat_params(const Network& net) {
  std::vector<double> out;
  for (const auto& [name, m] : net.tensors()) out.insert(out.end(), m->data(), m->data() + m->size());
  return out;
}

void set_params(Network& net, const std::vector<double>& v) {
  std::size_t k = 0;
  for (auto& [name, m] : net.tensors()) {
    for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = v[k++];
  }
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

TEST(Schedule, KeyPoints) {
  const LrSchedule s;
  EXPECT_EQ(lr_at(0.0, s), 0.0);
  EXPECT_DOUBLE_EQ(lr_at(2.5, s), 5e-4);
  EXPECT_DOUBLE_EQ(lr_at(5.0, s), 1e-3);
  EXPECT_NEAR(lr_at(5.0 + 12.5, s), 5.05e-4, 1e-15);
  EXPECT_NEAR(lr_at(30.0, s), 1e-5, 1e-15);
  EXPECT_NEAR(lr_at(30.0 + 1e-9, s), 1e-3, 1e-9);
  for (double t = 5; t < 30; t += 0.5) EXPECT_GE(lr_at(t, s), lr_at(t + 0.5, s));
  LrSchedule bad;
  bad.lr_min = 1e-2;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Network, ShapesAndParameterCount) {
  Rng rng(1);
  const Network net(mini_arch(), rng);
  // encoder 12*8+8 + 8*8+8, projector 8*8+8 + 8*4+4, classifier 2 x (8*8+8) + 8*3+3
  EXPECT_EQ(net.parameter_count(), 104u + 72u + 72u + 36u + 72u + 72u + 27u);
  const ForwardPass p = net.forward(Matrix::Ones(5, 12), RunMode::kEval);
  EXPECT_EQ(p.representation.cols(), 8);
  EXPECT_EQ(p.projection.cols(), 4);
  EXPECT_EQ(p.logits.cols(), 3);
  Architecture bad = mini_arch();
  bad.dropout = 1.0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Network, EvalModeIsDeterministic) {
  Rng rng(2);
  const Network net(mini_arch(), rng);
  Rng data(3);
  Matrix x(4, 12);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = data.uniform();
  const Matrix a = net.forward(x, RunMode::kEval).logits;
  const Matrix b = net.forward(x, RunMode::kEval).logits;
  EXPECT_EQ(a, b);
  EXPECT_THROW(net.forward(x, RunMode::kTrain), NumericError);
}

TEST(Network, ZeroWeightsGiveUniformProbabilities) {
  Rng rng(4);
  const Network net = Network(mini_arch(), rng).zeros_like();
  const Matrix p = softmax_rows(net.forward(Matrix::Ones(3, 12), RunMode::kEval).logits);
  for (Eigen::Index i = 0; i < p.size(); ++i) EXPECT_DOUBLE_EQ(p.data()[i], 1.0 / 3.0);
}

TEST(Network, InputStandardizationIsPerChannel) {
  Rng rng(6);
  Network net(mini_arch(), rng);
  Matrix x(2, 12);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform();
  const InputStandardization s{{0.1, 0.2, 0.3}, {0.5, 2.0, 4.0}};
  Matrix manual = x;
  for (int c = 0; c < 3; ++c) {
    manual.middleCols(4 * c, 4) = (x.middleCols(4 * c, 4).array() - s.mean[c]) / s.std[c];
  }
  const Matrix plain = net.forward(manual, RunMode::kEval).logits;
  net.set_input_standardization(s);
  EXPECT_TRUE(net.forward(x, RunMode::kEval).logits.isApprox(plain, 1e-14));
  EXPECT_EQ(net.zeros_like().input_standardization(), s);
  EXPECT_THROW(net.set_input_standardization({{0, 0, 0}, {1, 0, 1}}), ConfigError);
}

TEST(Network, EndToEndGradientMatchesFiniteDifferences) {
  Rng init(7);
  Network net(mini_arch(), init);
  net.set_input_standardization({{0.2, 0.5, 0.1}, {0.3, 0.25, 2.0}});
  Rng data(8);
  Matrix x(4, 12);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = data.uniform();
  const std::vector<int> labels{0, 0, 2, 2};
  const LossConfig cfg;

  // A fixed dropout stream reproduces the same masks on every evaluation.
  const auto loss_at = [&](const std::vector<double>& v) {
    Network probe = net;
    set_params(probe, v);
    Rng drop(9);
    const ForwardPass p = probe.forward(x, RunMode::kTrain, &drop);
    return joint_loss(p.projection, p.logits, labels, cfg).total;
  };
  Rng drop(9);
  const ForwardPass pass = net.forward(x, RunMode::kTrain, &drop);
  const JointLossResult j = joint_loss(pass.projection, pass.logits, labels, cfg);
  const Network grad = net.backward(pass, j.grad_z, j.grad_logits, true);
  const std::vector<double> numeric = oracle::numeric_gradient(loss_at, flat_params(net));
  EXPECT_LT(oracle::relative_error(flat_params(grad), numeric), 1e-5);
}

TEST(Network, DetachedBackwardLeavesEncoderUntouched) {
  Rng init(7);
  const Network net(mini_arch(), init);
  const ForwardPass pass = net.forward(Matrix::Ones(2, 12), RunMode::kEval, nullptr, false, true);
  const Matrix g = Matrix::Ones(2, 3);
  const Network grad = net.backward(pass, Matrix(), g, false);
  for (const Dense& d : grad.layers(ParamGroup::kEncoder)) EXPECT_TRUE(d.weight.isZero());
  EXPECT_FALSE(grad.layers(ParamGroup::kClassifier).back().weight.isZero());
}

TEST(Optimizer, MomentumStepOnSelectedGroups) {
  Rng init(1);
  Network net(mini_arch(), init);
  const Network before = net;
  Network grad = net.zeros_like();
  for (auto& [name, m] : grad.tensors()) m->setOnes();
  SgdMomentum opt(net, 0.9);
  const std::vector<ParamGroup> groups{ParamGroup::kClassifier};
  opt.step(net, grad, 0.1, groups);
  opt.step(net, grad, 0.1, groups);
  const Dense& c = net.layers(ParamGroup::kClassifier)[0];
  const Dense& c0 = before.layers(ParamGroup::kClassifier)[0];
  EXPECT_NEAR(c.weight(0, 0), c0.weight(0, 0) - 0.1 * 1.0 - 0.1 * 1.9, 1e-12);
  EXPECT_EQ(net.layers(ParamGroup::kEncoder)[0].weight,
            before.layers(ParamGroup::kEncoder)[0].weight);
}

TEST(Optimizer, AdamMatchesClosedFormOnTwoSteps) {
  Rng init(1);
  Network net(mini_arch(), init);
  const Network before = net;
  Network g1 = net.zeros_like();
  Network g2 = net.zeros_like();
  for (auto& [name, m] : g1.tensors()) m->setOnes();
  for (auto& [name, m] : g2.tensors()) m->setConstant(3.0);
  Adam opt(net);
  const std::vector<ParamGroup> groups{ParamGroup::kEncoder, ParamGroup::kProjector};
  opt.step(net, g1, 0.01, groups);
  opt.step(net, g2, 0.01, groups);
  // Bias-corrected first step is lr * sign(g); the second follows by hand.
  const double m = (0.9 * 0.1 + 0.1 * 3.0) / (1 - 0.81);
  const double v = (0.999 * 0.001 + 0.001 * 9.0) / (1 - 0.999 * 0.999);
  const double expected = -0.01 / (1 + 1e-8) - 0.01 * m / (std::sqrt(v) + 1e-8);
  const Dense& p = net.layers(ParamGroup::kProjector)[1];
  const Dense& p0 = before.layers(ParamGroup::kProjector)[1];
  EXPECT_NEAR(p.bias(0, 2) - p0.bias(0, 2), expected, 1e-12);
  EXPECT_EQ(net.layers(ParamGroup::kClassifier)[0].weight,
            before.layers(ParamGroup::kClassifier)[0].weight);
}

TEST(Train, ChannelStatisticsMatchDirectComputation) {
  const Dataset data = small_dataset();
  const std::vector<std::size_t> idx{0, 5, 17};
  const InputStandardization s = channel_statistics(data, idx, 8);
  std::vector<const Patch*> ptrs;
  for (std::size_t i : idx) ptrs.push_back(&data.samples[i].patch);
  const Matrix x = prepare_inputs(ptrs, 8);
  for (int c = 0; c < 3; ++c) {
    const Eigen::ArrayXXd block = x.middleCols(64 * c, 64).array();
    const double mean = block.mean();
    EXPECT_NEAR(s.mean[c], mean, 1e-12);
    EXPECT_NEAR(s.std[c], std::sqrt((block - mean).square().mean()), 1e-9);
  }
}

TEST(Train, ModesParse) {
  EXPECT_EQ(parse_mode("joint"), TrainMode::kJoint);
  EXPECT_EQ(parse_mode("ce"), TrainMode::kCeOnly);
  EXPECT_EQ(parse_mode("cl_detached"), TrainMode::kClDetached);
  EXPECT_EQ(parse_mode("cl-attached"), TrainMode::kClAttached);
  EXPECT_EQ(mode_name(TrainMode::kClDetached), "cl-detached");
  EXPECT_THROW(parse_mode("simclr"), ConfigError);
  EXPECT_EQ(parse_optimizer("adam"), OptimizerKind::kAdam);
  EXPECT_EQ(optimizer_name(parse_optimizer("sgd")), "sgd");
  EXPECT_THROW(parse_optimizer("rmsprop"), ConfigError);
}

TEST(Train, DeterministicForFixedSeed) {
  const Dataset data = small_dataset();
  const std::vector<std::size_t> tr = iota(18), va{18, 19, 20};
  const TrainConfig cfg = small_config(TrainMode::kJoint);
  const TrainResult a = train(data, tr, va, cfg);
  const TrainResult b = train(data, tr, va, cfg);
  EXPECT_EQ(flat_params(a.net), flat_params(b.net));
  ASSERT_EQ(a.log.size(), 2u);
  EXPECT_EQ(a.log[1].val_loss, b.log[1].val_loss);
  EXPECT_EQ(a.log[0].phase, "joint");
  EXPECT_TRUE(std::isfinite(a.log[0].train_contrastive));

  TrainConfig other = cfg;
  other.seed = 4;
  EXPECT_NE(flat_params(train(data, tr, va, other).net), flat_params(a.net));
  EXPECT_EQ(a.net.input_standardization(), channel_statistics(data, tr, cfg.arch.input_side));
}

TEST(Train, DetachedFinetuneFreezesEncoder) {
  const Dataset data = small_dataset();
  const std::vector<std::size_t> tr = iota(24);
  TrainConfig pre_only = small_config(TrainMode::kClDetached);
  pre_only.epochs = 1;
  pre_only.pretrain_epochs = 1;
  TrainConfig full = pre_only;
  full.epochs = 3;
  const TrainResult a = train(data, tr, {}, pre_only);
  const TrainResult b = train(data, tr, {}, full);
  for (std::size_t l = 0; l < a.net.layers(ParamGroup::kEncoder).size(); ++l) {
    EXPECT_EQ(a.net.layers(ParamGroup::kEncoder)[l].weight,
              b.net.layers(ParamGroup::kEncoder)[l].weight);
  }
  EXPECT_NE(a.net.layers(ParamGroup::kClassifier).back().weight,
            b.net.layers(ParamGroup::kClassifier).back().weight);
  ASSERT_EQ(b.log.size(), 3u);
  EXPECT_EQ(b.log[0].phase, "pretrain");
  EXPECT_EQ(b.log[2].phase, "finetune");
  EXPECT_TRUE(std::isnan(b.log[0].val_loss));
}

TEST(Train, AttachedFinetuneMovesEncoder) {
  const Dataset data = small_dataset();
  const std::vector<std::size_t> tr = iota(24);
  TrainConfig pre_only = small_config(TrainMode::kClAttached);
  pre_only.epochs = 1;
  pre_only.pretrain_epochs = 1;
  TrainConfig full = pre_only;
  full.epochs = 2;
  const TrainResult a = train(data, tr, {}, pre_only);
  const TrainResult b = train(data, tr, {}, full);
  EXPECT_NE(a.net.layers(ParamGroup::kEncoder)[0].weight,
            b.net.layers(ParamGroup::kEncoder)[0].weight);
}

TEST(Train, CeOnlyNeverTouchesProjector) {
  const Dataset data = small_dataset();
  const std::vector<std::size_t> tr = iota(24);
  const TrainConfig cfg = small_config(TrainMode::kCeOnly);
  const TrainResult r = train(data, tr, {}, cfg);
  Rng init(derive_seed(cfg.seed, 1));
  const Network fresh(cfg.arch, init);
  EXPECT_EQ(r.net.layers(ParamGroup::kProjector)[0].weight,
            fresh.layers(ParamGroup::kProjector)[0].weight);
  EXPECT_TRUE(std::isnan(r.log[0].train_contrastive));
}

TEST(Train, RejectsBadConfigs) {
  const Dataset data = small_dataset();
  TrainConfig cfg = small_config(TrainMode::kClDetached);
  cfg.pretrain_epochs = 5;
  EXPECT_THROW(train(data, iota(24), {}, cfg), ConfigError);
  EXPECT_THROW(train(data, {}, {}, small_config(TrainMode::kJoint)), ConfigError);
}

TEST(Predict, RecordsCarryCertainty) {
  const Dataset data = small_dataset();
  const TrainResult r = train(data, iota(24), {}, small_config(TrainMode::kJoint));
  const std::vector<std::size_t> idx{0, 9, 23};
  const auto recs = predict(r.net, data, idx, 0.01);
  ASSERT_EQ(recs.size(), 3u);
  for (std::size_t k = 0; k < recs.size(); ++k) {
    EXPECT_EQ(recs[k].id, data.samples[idx[k]].id);
    EXPECT_NEAR(recs[k].probs[0] + recs[k].probs[1] + recs[k].probs[2], 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(recs[k].certainty, certainty(recs[k].probs, 0.01, 3));
  }
  EXPECT_EQ(embed(r.net, data, idx).cols(), 16);
}

TEST(Checkpoint, RoundTripIsExactAndDeterministic) {
  Rng init(5);
  Checkpoint c;
  c.net = Network(mini_arch(), init);
  c.net.round_to_float();
  c.net.set_input_standardization({{0.01, 0.02, 0.15}, {0.05, 0.1, 0.2134567890123}});
  c.meta.mode = "cl-attached";
  c.meta.seed = 99;
  c.meta.epoch = 7;
  c.meta.split_seed = 12;
  c.meta.optimizer = "adam";
  const auto bytes = encode_checkpoint(c);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "FFM1");
  const Checkpoint back = decode_checkpoint(bytes);
  EXPECT_EQ(flat_params(back.net), flat_params(c.net));
  EXPECT_EQ(back.net.architecture(), c.net.architecture());
  EXPECT_EQ(back.net.input_standardization(), c.net.input_standardization());
  EXPECT_EQ(back.meta.mode, "cl-attached");
  EXPECT_EQ(back.meta.epoch, 7);
  EXPECT_EQ(back.meta.split_seed, 12u);
  EXPECT_EQ(back.meta.optimizer, "adam");
  EXPECT_EQ(encode_checkpoint(back), bytes);
}

TEST(Checkpoint, CorruptionIsAnIoError) {
  Rng init(5);
  Checkpoint c;
  c.net = Network(mini_arch(), init);
  auto bytes = encode_checkpoint(c);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bad_magic), IoError);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  EXPECT_THROW(decode_checkpoint(truncated), IoError);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(decode_checkpoint(trailing), IoError);
  auto bad_len = bytes;
  bad_len[4] = 0xff;
  bad_len[5] = 0xff;
  EXPECT_THROW(decode_checkpoint(bad_len), IoError);
  EXPECT_THROW(decode_checkpoint(std::vector<std::uint8_t>{}), IoError);
}

}  // namespace
}  // namespace fishforge
