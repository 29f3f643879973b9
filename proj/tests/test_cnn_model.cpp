#include <gtest/gtest.h>

#include "wearaug/cnn/adam.hpp"
#include "wearaug/cnn/gradcheck.hpp"
#include "wearaug/cnn/model.hpp"
#include "wearaug/eval.hpp"
#include "wearaug/synth.hpp"

using namespace wearaug;
using namespace wearaug::cnn;

namespace {

struct Batch {
  Tensor x;
  std::vector<int> labels;
};

Batch synth_batch(std::size_t n, std::size_t len, std::uint64_t seed, bool random_labels = false) {
  SynthConfig cfg;
  cfg.window_len = len;
  RngStream rng(seed, 0);
  std::vector<Window> ws;
  Batch b;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = random_labels ? static_cast<int>(rng.below(2)) : static_cast<int>(i % 2);
    ws.push_back(gen_window(static_cast<int>(i % 2), sample_rotation(rng), rng, cfg));
    b.labels.push_back(label);
  }
  std::vector<const Window*> ptrs;
  for (const auto& w : ws) ptrs.push_back(&w);
  b.x = make_batch(ptrs);
  return b;
}

void train_steps(Cnn& model, const Batch& b, int steps, const AdamConfig& cfg) {
  AdamState st;
  for (int s = 0; s < steps; ++s) {
    ForwardCache cache;
    const SoftmaxXent sx = softmax_xent(model.forward(b.x, Mode::Train, &cache), b.labels);
    ModelParams g = model.backward(cache, sx.dlogits);
    std::vector<Tensor*> ps;
    std::vector<const Tensor*> gs;
    for (auto& [n, t] : model.params().learnable()) ps.push_back(t);
    for (auto& [n, t] : g.learnable()) gs.push_back(t);
    adam_step(ps, gs, st, cfg);
  }
}

double batch_accuracy(const Tensor& logits, const std::vector<int>& labels) {
  std::vector<int> pred;
  for (std::size_t i = 0; i < labels.size(); ++i) pred.push_back(logits[2 * i + 1] > logits[2 * i] ? 1 : 0);
  return accuracy(pred, labels);
}

}  // namespace

TEST(Architecture, FullShapeTrace) {
  const std::vector<std::pair<std::size_t, std::size_t>> expected{{2319, 3}, {772, 3}, {385, 3}, {193, 3},
                                                                  {97, 3},   {49, 3},  {48, 1}};
  const Architecture a = Architecture::standard();
  EXPECT_EQ(a.shape_trace(), expected);
  const std::size_t maps[] = {16, 32, 64, 64, 64, 64, 64};
  for (std::size_t l = 0; l < 7; ++l) EXPECT_EQ(a.layers[l].out_maps, maps[l]);
  EXPECT_EQ(a.feature_maps(), 64u);
}

TEST(Architecture, DeskScaleTrace) {
  const std::vector<std::pair<std::size_t, std::size_t>> expected{{231, 3}, {76, 3}, {37, 3}, {19, 3},
                                                                  {10, 3},  {6, 3},  {5, 1}};
  const Architecture a = Architecture::standard(696, 4);
  EXPECT_EQ(a.shape_trace(), expected);
  EXPECT_EQ(a.feature_maps(), 16u);
  EXPECT_THROW(Architecture::standard(40), InvalidArgument);
  EXPECT_THROW(Architecture::standard(696, 0), InvalidArgument);
}

TEST(Model, FullScaleForwardShape) {
  RngStream rng(1, 0);
  Cnn model = Cnn::initialize(Architecture::standard(), rng);
  const Batch b = synth_batch(2, 6960, 2);
  EXPECT_EQ(model.predict_logits(b.x).shape(), (Shape{2, 2}));
}

TEST(Model, RejectsWrongInputShape) {
  RngStream rng(3, 0);
  Cnn model = Cnn::initialize(Architecture::standard(696, 4), rng);
  EXPECT_THROW(model.predict_logits(Tensor({2, 1, 695, 3})), InvalidArgument);
  EXPECT_THROW(model.predict_logits(Tensor({2, 1, 696, 2})), InvalidArgument);
  EXPECT_THROW(model.forward(Tensor({2, 2, 696, 3}), Mode::Train), InvalidArgument);
}

TEST(Model, ParameterShapesAreValidated) {
  RngStream rng(4, 0);
  const Architecture a = Architecture::standard(696, 4);
  ModelParams p = init_params(a, rng);
  p.head_weight = Tensor({2, 3});
  EXPECT_THROW(Cnn(a, p), InvalidArgument);
}

TEST(Model, EvalModeIsIndependentOfBatchComposition) {
  RngStream rng(5, 0);
  Cnn model = Cnn::initialize(Architecture::standard(696, 4), rng);
  const Batch b = synth_batch(4, 696, 6);
  train_steps(model, b, 3, {});
  const Tensor all = model.predict_logits(b.x);
  const std::size_t stride = 696 * 3;
  std::vector<double> dup(b.x.data().begin(), b.x.data().begin() + stride);
  dup.insert(dup.end(), dup.begin(), dup.end());
  const Tensor pair = model.predict_logits(Tensor({2, 1, 696, 3}, dup));
  for (std::size_t c = 0; c < 2; ++c) {
    EXPECT_EQ(pair[c], all[c]);
    EXPECT_EQ(pair[2 + c], all[c]);
  }
  EXPECT_EQ(model.predict_logits(b.x), all);
}

TEST(Model, GradientCheckAtDeskScale) {
  RngStream rng(7, 0);
  const Cnn model = Cnn::initialize(Architecture::standard(696, 4), rng);
  const Batch b = synth_batch(4, 696, 8);
  const GradCheckReport r = grad_check(model, b.x, b.labels);
  ASSERT_EQ(r.by_layer().size(), 15u);
  for (const auto& t : r.tensors) {
    EXPECT_LT(t.max_rel_error, 1e-4) << t.name;
    EXPECT_GT(t.checked, 0u) << t.name;
  }
  for (const auto& [name, err] : r.by_layer()) RecordProperty(name, std::to_string(err));
}

TEST(Model, GradientCheckCatchesStrideFault) {
  RngStream rng(7, 0);
  Cnn model = Cnn::initialize(Architecture::standard(696, 4), rng);
  model.set_backward_stride_skew(1);
  const Batch b = synth_batch(4, 696, 8);
  GradCheckOptions opt;
  opt.coords_per_tensor = 50;
  EXPECT_GT(grad_check(model, b.x, b.labels, opt).max_error(), 1e-2);
}

TEST(Model, GradCheckLeavesModelUnchanged) {
  RngStream rng(9, 0);
  const Cnn model = Cnn::initialize(Architecture::standard(696, 4), rng);
  const ModelParams before = model.params();
  const Batch b = synth_batch(2, 696, 10);
  GradCheckOptions opt;
  opt.coords_per_tensor = 3;
  grad_check(model, b.x, b.labels, opt);
  const auto x = before.all_tensors(), y = model.params().all_tensors();
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(*x[i], *y[i]);
}

TEST(Model, MemorizesTwentySamples) {
  RngStream rng(11, 0);
  Cnn model = Cnn::initialize(Architecture::standard(696, 1), rng);
  const Batch b = synth_batch(20, 696, 12, true);
  double acc = 0.0;
  int steps = 0;
  while (steps < 500 && acc < 1.0) {
    train_steps(model, b, 10, {});
    steps += 10;
    acc = batch_accuracy(model.forward(b.x, Mode::Train), b.labels);
  }
  RecordProperty("steps", steps);
  EXPECT_EQ(acc, 1.0);
}

TEST(Model, RunningStatisticsTrackTrainMode) {
  SynthConfig sc;
  sc.n_subjects = 8;
  sc.windows_per_subject = 16;
  sc.per_subject_rotation = false;
  sc.atypical_fraction = 0.0;
  RngStream rng(13, 0);
  const LabeledDataset d = gen_dataset(rng, sc);
  TrainConfig tc;
  tc.epochs = 20;
  tc.width_divisor = 4;
  const LabeledDataset train = d.restricted_to({"S01", "S02", "S03", "S04", "S05", "S06"});
  const LabeledDataset test = d.restricted_to({"S07", "S08"});
  const FoldResult r = run_fold(train, test, AugmentPipeline(), tc, fold_seeds(14, 0));
  const Cnn model(Architecture::standard(696, 4), r.params);
  const double eval_acc = accuracy(predict(model, train), labels_of(train));
  EXPECT_NEAR(eval_acc, r.epochs.back().train_acc, 0.05);
}
