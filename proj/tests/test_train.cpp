#include <gtest/gtest.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "maxk/approx.hpp"
#include "maxk/error.hpp"
#include "maxk/train.hpp"
#include "support/oracle.hpp"

using namespace maxk;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("maxk_train_" + std::to_string(::getpid()) + "_" + name);
}

NodeDataset small_sbm(std::uint64_t seed = 3) {
  SbmConfig c;
  c.nodes = 200;
  c.blocks = 4;
  c.p_in = 0.1;
  c.p_out = 0.01;
  c.feature_dim = 8;
  c.seed = seed;
  return make_sbm_dataset(c);
}

TrainConfig small_config(Activation act, std::size_t epochs) {
  TrainConfig c;
  c.model.hidden = 32;
  c.model.k = act == Activation::maxk ? 4 : 32;
  c.model.activation = act;
  c.train.epochs = epochs;
  c.seed = 11;
  return c;
}

}  // namespace

TEST(Sbm, ShapesLabelsAndSymmetry) {
  const NodeDataset d = small_sbm();
  EXPECT_EQ(d.graph.num_nodes(), 200u);
  EXPECT_EQ(d.features.rows(), 200u);
  EXPECT_EQ(d.features.cols(), 8u);
  EXPECT_EQ(d.labels.num_classes, 4u);
  for (std::size_t i = 0; i < 200; ++i) EXPECT_EQ(d.labels.classes[i], i / 50);
  const auto dense = oracle::dense_adjacency(d.graph);
  EXPECT_EQ(oracle::transpose(dense), dense);
}

TEST(Sbm, MasksAreDisjointAndSized) {
  const NodeDataset d = small_sbm();
  std::size_t train = 0, val = 0;
  for (std::size_t i = 0; i < 200; ++i) {
    EXPECT_FALSE(d.train_mask[i] && d.val_mask[i]);
    train += d.train_mask[i] != 0;
    val += d.val_mask[i] != 0;
  }
  EXPECT_EQ(train, 120u);
  EXPECT_EQ(val, 40u);
}

TEST(Sbm, SeedDeterminesDataset) {
  const NodeDataset a = small_sbm(5), b = small_sbm(5), c = small_sbm(6);
  EXPECT_EQ(a.graph, b.graph);
  EXPECT_EQ(a.features, b.features);
  EXPECT_NE(a.features, c.features);
}

TEST(Sbm, RejectsMoreBlocksThanNodes) {
  SbmConfig c;
  c.nodes = 3;
  c.blocks = 4;
  EXPECT_THROW(make_sbm_dataset(c), ParameterError);
}

TEST(Training, EpochZeroIsInitialEvaluationOnly) {
  const TrainingLog log = run_training(small_sbm(), small_config(Activation::maxk, 0));
  ASSERT_EQ(log.epochs.size(), 1u);
  EXPECT_EQ(log.epochs[0].epoch, 0u);
  EXPECT_TRUE(std::isfinite(log.epochs[0].loss));
}

TEST(Training, ZeroLearningRateKeepsLossConstant) {
  TrainConfig c = small_config(Activation::maxk, 5);
  c.train.lr = 0.0;
  const TrainingLog log = run_training(small_sbm(), c);
  ASSERT_EQ(log.epochs.size(), 6u);
  for (const auto& e : log.epochs) EXPECT_EQ(e.loss, log.epochs[0].loss);
}

TEST(Training, SeededRunsAreIdentical) {
  const NodeDataset d = small_sbm();
  const TrainingLog a = run_training(d, small_config(Activation::maxk, 20));
  const TrainingLog b = run_training(d, small_config(Activation::maxk, 20));
  EXPECT_TRUE(a.same_trajectory(b));
  TrainConfig other = small_config(Activation::maxk, 20);
  other.seed = 12;
  EXPECT_FALSE(a.same_trajectory(run_training(d, other)));
}

TEST(Training, MaxkAndReluBothLearn) {
  const NodeDataset d = small_sbm();
  for (Activation act : {Activation::maxk, Activation::relu}) {
    const TrainingLog log = run_training(d, small_config(act, 100));
    EXPECT_LT(log.final().loss, log.epochs[0].loss) << to_string(act);
    EXPECT_GT(log.final().train_acc, 0.9) << to_string(act);
  }
}

TEST(Training, FullWidthMaxkMatchesRelu) {
  // With k equal to the hidden width, MaxK keeps every value; on a problem
  // that learns quickly both reach the same accuracy.
  TrainConfig c = small_config(Activation::maxk, 60);
  c.model.k = c.model.hidden;
  const double full = run_training(small_sbm(), c).final().train_acc;
  const double relu = run_training(small_sbm(), small_config(Activation::relu, 60)).final().train_acc;
  EXPECT_GT(full, 0.9);
  EXPECT_GT(relu, 0.9);
}

TEST(Training, HugeLearningRateDiverges) {
  TrainConfig c = small_config(Activation::relu, 200);
  c.train.lr = 1e30;
  EXPECT_THROW(run_training(small_sbm(), c), DivergenceError);
}

TEST(Training, LogCsvHasHeaderAndOneRowPerEpoch) {
  const TrainingLog log = run_training(small_sbm(), small_config(Activation::maxk, 3));
  std::ostringstream os;
  write_log_csv(log, os);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "epoch,loss,train_acc,val_acc,epoch_seconds");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 4);
    ++rows;
  }
  EXPECT_EQ(rows, 4u);
}

TEST(DataFiles, FeatureRoundTripCsvAndBinary) {
  const NodeDataset d = small_sbm();
  for (const char* name : {"f.csv", "f.bin"}) {
    const auto p = temp_path(name);
    save_features(d.features, p);
    const Matrix<float> back = load_features(p);
    ASSERT_EQ(back.rows(), d.features.rows());
    ASSERT_EQ(back.cols(), d.features.cols());
    for (std::size_t i = 0; i < back.size(); ++i) EXPECT_EQ(back.flat()[i], d.features.flat()[i]) << name;
    std::filesystem::remove(p);
  }
}

TEST(DataFiles, LabelRoundTripSingleAndMulti) {
  const NodeDataset d = small_sbm();
  LabelSet multi;
  multi.multi_label = true;
  multi.num_classes = 3;
  multi.multi_hot = Matrix<float>(4, 3);
  multi.multi_hot(0, 1) = 1.0f;
  multi.multi_hot(2, 0) = 1.0f;
  multi.multi_hot(2, 2) = 1.0f;
  for (const char* ext : {".csv", ".bin"}) {
    const auto p = temp_path(std::string("l") + ext);
    save_labels(d.labels, p);
    const LabelSet single = load_labels(p);
    EXPECT_FALSE(single.multi_label);
    EXPECT_EQ(single.classes, d.labels.classes);
    EXPECT_EQ(single.num_classes, 4u);
    save_labels(multi, p);
    const LabelSet back = load_labels(p);
    EXPECT_TRUE(back.multi_label);
    EXPECT_EQ(back.multi_hot, multi.multi_hot);
    std::filesystem::remove(p);
  }
}

TEST(DataFiles, BadFeatureFilesAreRejected) {
  const auto csv = temp_path("ragged.csv");
  std::ofstream(csv) << "1,2\n3\n";
  EXPECT_THROW(load_features(csv), FormatError);
  const auto bin = temp_path("bad.bin");
  std::ofstream(bin, std::ios::binary) << "NOPE";
  EXPECT_THROW(load_features(bin), Error);
  EXPECT_THROW(load_features(temp_path("missing.bin")), IoError);
  std::filesystem::remove(csv);
  std::filesystem::remove(bin);
}

TEST(Approx, KForHiddenWidth) {
  EXPECT_EQ(approx_k_for(4), 1u);
  EXPECT_EQ(approx_k_for(16), 4u);
  EXPECT_EQ(approx_k_for(17), 5u);
  EXPECT_EQ(approx_k_for(256), 64u);
}

TEST(Approx, ZeroTargetFitsExactly) {
  ApproxConfig c;
  c.target = ApproxTarget::zero;
  c.hidden_units = {4, 16};
  c.epochs = 3000;
  for (const ApproxRow& r : approx_demo(c)) EXPECT_LT(r.mse, 1e-6) << r.hidden;
}

TEST(Approx, WiderNetworkFitsSquareBetter) {
  ApproxConfig c;
  c.hidden_units = {4, 64};
  c.epochs = 1500;
  const auto rows = approx_demo(c);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].k, 1u);
  EXPECT_EQ(rows[1].k, 16u);
  EXPECT_LT(rows[1].mse, rows[0].mse);
}

TEST(Approx, RejectsDegenerateGrid) {
  ApproxConfig c;
  c.grid_points = 1;
  EXPECT_THROW(approx_demo(c), ParameterError);
  EXPECT_THROW(parse_approx_target("cube"), ParameterError);
}
