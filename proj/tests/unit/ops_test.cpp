#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "oracle_values.hpp"
#include "selrcn/errors.hpp"
#include "selrcn/grad_check.hpp"
#include "selrcn/ops.hpp"
#include "test_support.hpp"

namespace selrcn {
namespace {

using testing::max_abs_diff;
using testing::random_tensor;
using testing::weighted_sum;

Tensor wave(Shape shape, double phase, double amp = 1.0) {
  Tensor t(std::move(shape));
  auto d = t.mutable_data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = amp * std::sin(0.7 * static_cast<double>(i) + phase);
  return t;
}

TEST(Tensor, CopiesShareStorageAndCloneDoesNot) {
  Tensor a({2, 2}, {1, 2, 3, 4});
  Tensor b = a;
  Tensor c = a.clone();
  a.mutable_data()[0] = 9;
  EXPECT_EQ(b[0], 9);
  EXPECT_EQ(c[0], 1);
  EXPECT_EQ(a.at({1, 0}), 3);
}

TEST(Tensor, RejectsMismatchedValueCount) {
  EXPECT_THROW(Tensor({2, 3}, {1, 2, 3}), DimensionError);
}

TEST(Tensor, F32RoundingKeepsValuesFloatRepresentable) {
  Tape tape(Precision::f32);
  const Tensor x({1}, {0.1});
  const Tensor y = ops::scale(tape, x, 3.0);
  EXPECT_EQ(y[0], static_cast<double>(static_cast<float>(0.1 * 3.0)));
  EXPECT_NE(y[0], 0.1 * 3.0);
}

TEST(Matmul, IdentityAndKnownProduct) {
  Tape tape(Precision::f64);
  const Tensor eye({2, 2}, {1, 0, 0, 1});
  const Tensor a({2, 2}, {1, 2, 3, 4});
  const Tensor b({2, 2}, {5, 6, 7, 8});
  EXPECT_EQ(ops::matmul(tape, eye, a).data()[3], 4);
  const Tensor p = ops::matmul(tape, a, b);
  EXPECT_EQ(std::vector<double>(p.data().begin(), p.data().end()), (std::vector<double>{19, 22, 43, 50}));
}

TEST(Matmul, GradientMatchesFiniteDifferences) {
  Rng rng(1);
  const Tensor a = random_tensor({3, 4}, rng);
  const Tensor b = random_tensor({4, 2}, rng);
  const double err = grad_check([&](Tape& t, const Tensor& x) { return ops::sum(t, ops::matmul(t, x, b)); }, a);
  EXPECT_LT(err, 1e-4);
}

TEST(Matmul, RejectsInnerDimensionMismatch) {
  Tape tape;
  EXPECT_THROW(ops::matmul(tape, Tensor({2, 3}), Tensor({2, 3})), DimensionError);
}

TEST(Conv2d, IdentityKernelAndAllOnesSum) {
  Tape tape(Precision::f64);
  Rng rng(2);
  const Tensor x = random_tensor({1, 1, 4, 4}, rng);
  const Tensor y = ops::conv2d(tape, x, Tensor({1, 1, 1, 1}, 1.0), 1, 0);
  EXPECT_TRUE(testing::bit_equal(x.data(), y.data()));

  const Tensor ones = ops::conv2d(tape, Tensor({1, 1, 3, 3}, 1.0), Tensor({1, 1, 3, 3}, 1.0), 1, 0);
  ASSERT_EQ(ones.shape(), (Shape{1, 1, 1, 1}));
  EXPECT_EQ(ones.item(), 9.0);
}

TEST(Conv2d, StridedPaddedMatchesReference) {
  Tape tape(Precision::f64);
  const Tensor y = ops::conv2d(tape, wave({1, 2, 5, 5}, 0.2), wave({3, 2, 3, 3}, 0.4, 0.5), 2, 1);
  ASSERT_EQ(y.shape(), (Shape{1, 3, 3, 3}));
  EXPECT_LT(max_abs_diff(y.data(), oracle::conv_out), 1e-12);
}

TEST(Conv2d, GradientMatchesFiniteDifferences) {
  Rng rng(3);
  Tensor x = random_tensor({1, 2, 5, 5}, rng);
  Tensor w = random_tensor({3, 2, 3, 3}, rng);
  std::vector<Tensor> params{x, w};
  const auto result = grad_check(
      [&](Tape& t) { return weighted_sum(t, ops::conv2d(t, x, w, 1, 1), 9); }, params);
  EXPECT_LT(result.max_relative_error, 1e-4);
  EXPECT_EQ(result.coords_checked, x.numel() + w.numel());
}

TEST(Activation, ScalarValues) {
  Tape tape(Precision::f64);
  const Tensor x({3}, {0.0, 1.0, -3.0});
  const Tensor s = ops::sigmoid(tape, x);
  EXPECT_EQ(s[0], 0.5);
  EXPECT_NEAR(s[1], 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(s[1], 0.731059, 1e-6);
  const Tensor r = ops::relu(tape, Tensor({2}, {-3.0, 3.0}));
  EXPECT_EQ(r[0], 0.0);
  EXPECT_EQ(r[1], 3.0);
}

TEST(Softmax, UniformShiftInvariantAndDirectFormula) {
  Tape tape(Precision::f64);
  const Tensor u = ops::softmax(tape, Tensor({1, 3}, 0.0));
  for (double v : u.data()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);

  const Tensor big = ops::softmax(tape, Tensor({1, 2}, {1000.0, 1000.0}));
  EXPECT_EQ(big[0], 0.5);
  EXPECT_EQ(big[1], 0.5);

  const Tensor p = ops::softmax(tape, Tensor({1, 3}, {1, 2, 3}));
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(p[i], std::exp(i + 1.0) / z, 1e-15);

  const Tensor shifted = ops::softmax(tape, Tensor({1, 3}, {101, 102, 103}));
  EXPECT_LT(max_abs_diff(p.data(), shifted.data()), 1e-15);
}

TEST(Pooling, GlobalAveragePool) {
  Tape tape(Precision::f64);
  const Tensor c = ops::global_avg_pool(tape, Tensor({1, 1, 7, 7}, 3.0));
  EXPECT_EQ(c.item(), 3.0);
  const Tensor p = ops::global_avg_pool(tape, Tensor({1, 1, 2, 2}, {1, 2, 3, 4}));
  EXPECT_EQ(p.item(), 2.5);
}

TEST(MaxPool, TiesGoToFirstMaximum) {
  Tape tape(Precision::f64);
  Tensor x({1, 1, 2, 2}, {5, 5, 5, 5});
  x.set_requires_grad(true);
  const Tensor y = ops::max_pool2d(tape, x, 2, 2, 0);
  tape.backward(ops::sum(tape, y));
  EXPECT_EQ(std::vector<double>(x.grad().begin(), x.grad().end()), (std::vector<double>{1, 0, 0, 0}));
}

TEST(BatchNorm, TrainingModeMatchesReference) {
  Tape tape(Precision::f64);
  const Tensor gamma = ops::add_scalar(tape, wave({3}, 0.3, 0.5), 1.0);
  const Tensor beta = wave({3}, 0.8, 0.2);
  Tensor rm({3}, 0.0);
  Tensor rv({3}, 1.0);
  const Tensor y = ops::batch_norm2d(tape, wave({2, 3, 2, 2}, 0.6, 2.0), gamma, beta, rm, rv, {});
  EXPECT_LT(max_abs_diff(y.data(), oracle::bn_out), 1e-12);
  EXPECT_LT(max_abs_diff(rm.data(), oracle::bn_running_mean), 1e-12);
  EXPECT_LT(max_abs_diff(rv.data(), oracle::bn_running_var), 1e-12);
}

TEST(CrossEntropy, UniformLogitsGiveLogK) {
  Tape tape(Precision::f64);
  const std::vector<std::size_t> labels{2};
  EXPECT_NEAR(ops::cross_entropy(tape, Tensor({1, 4}, 0.0), labels).item(), std::log(4.0), 1e-15);
}

TEST(CrossEntropy, LossFallsMonotonicallyAsOwnLogitGrows) {
  Tape tape(Precision::f64);
  const std::vector<std::size_t> labels{1};
  double previous = std::numeric_limits<double>::infinity();
  for (double v : {0.0, 2.0, 5.0, 10.0, 20.0, 40.0}) {
    const double loss = ops::cross_entropy(tape, Tensor({1, 3}, {0.0, v, 0.0}), labels).item();
    EXPECT_LT(loss, previous);
    previous = loss;
  }
  EXPECT_LT(previous, 1e-15);
}

TEST(CrossEntropy, ValueAndGradientMatchReference) {
  Tape tape(Precision::f64);
  Tensor logits = wave({3, 5}, 0.0, 2.0);
  logits.set_requires_grad(true);
  const std::vector<std::size_t> labels{4, 0, 2};
  const Tensor loss = ops::cross_entropy(tape, logits, labels);
  tape.backward(loss);
  EXPECT_NEAR(loss.item(), oracle::ce_loss[0], 1e-14);
  EXPECT_LT(max_abs_diff(logits.grad(), oracle::ce_grad), 1e-14);

  Rng rng(4);
  const double err = grad_check([&](Tape& t, const Tensor& x) { return ops::cross_entropy(t, x, labels); },
                                random_tensor({3, 5}, rng));
  EXPECT_LT(err, 1e-4);
}

TEST(CrossEntropy, RejectsOutOfRangeLabel) {
  Tape tape;
  const std::vector<std::size_t> labels{5};
  EXPECT_THROW(ops::cross_entropy(tape, Tensor({1, 5}), labels), IndexError);
}

TEST(Autodiff, LinearAndQuadraticGradients) {
  Tape tape(Precision::f64);
  Tensor x({2}, {1.0, 2.0});
  x.set_requires_grad(true);
  tape.backward(ops::sum(tape, x));
  EXPECT_EQ(std::vector<double>(x.grad().begin(), x.grad().end()), (std::vector<double>{1, 1}));

  x.clear_grad();
  Tape tape2(Precision::f64);
  tape2.backward(ops::sum(tape2, ops::mul(tape2, x, x)));
  EXPECT_EQ(std::vector<double>(x.grad().begin(), x.grad().end()), (std::vector<double>{2, 4}));
}

TEST(Autodiff, LeafGradientsAccumulateAcrossBackwardCalls) {
  Tensor x({2}, {1.0, 2.0});
  x.set_requires_grad(true);
  for (int i = 0; i < 2; ++i) {
    Tape tape(Precision::f64);
    tape.backward(ops::sum(tape, ops::scale(tape, x, 3.0)));
  }
  EXPECT_EQ(x.grad()[0], 6.0);
}

TEST(Autodiff, RepeatedBackwardOnSameTapeIsDeterministic) {
  Rng rng(5);
  Tensor w = random_tensor({4, 4}, rng);
  w.set_requires_grad(true);
  Tape tape(Precision::f64);
  const Tensor loss = weighted_sum(tape, ops::tanh(tape, ops::matmul(tape, w, w)), 1);
  tape.backward(loss);
  const std::vector<double> first(w.grad().begin(), w.grad().end());
  w.zero_grad();
  tape.backward(loss);
  EXPECT_TRUE(testing::bit_equal(first, w.grad()));
}

TEST(Autodiff, BackwardFromNonScalarIsAContractError) {
  Tensor x({2}, 1.0);
  x.set_requires_grad(true);
  Tape tape;
  const Tensor y = ops::scale(tape, x, 2.0);
  EXPECT_THROW(tape.backward(y), ContractError);
}

TEST(Autodiff, NoGradGuardSkipsRecording) {
  Tensor x({2}, 1.0);
  x.set_requires_grad(true);
  Tape tape;
  {
    NoGradGuard guard(tape);
    const Tensor y = ops::scale(tape, x, 2.0);
    EXPECT_FALSE(y.requires_grad());
  }
  EXPECT_EQ(tape.size(), 0u);
}

}  // namespace
}  // namespace selrcn
