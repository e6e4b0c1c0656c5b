#include <benchmark/benchmark.h>

#include "selrcn/model.hpp"
#include "selrcn/ops.hpp"
#include "selrcn/se.hpp"
#include "selrcn/se_lstm.hpp"
#include "selrcn/se_resnet.hpp"

namespace {

using namespace selrcn;

Tensor random_tensor(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.mutable_data()) v = rng.normal();
  return t;
}

void BM_Conv2dForwardBackward(benchmark::State& state) {
  const auto channels = static_cast<std::size_t>(state.range(0));
  const auto size = static_cast<std::size_t>(state.range(1));
  Rng rng(1);
  const Tensor x = random_tensor({8, channels, size, size}, rng);
  Tensor w = random_tensor({channels, channels, 3, 3}, rng);
  w.set_requires_grad(true);
  for (auto _ : state) {
    Tape tape(Precision::f64);
    const Tensor y = ops::conv2d(tape, x, w, 1, 1);
    const Tensor loss = ops::sum(tape, y);
    w.zero_grad();
    tape.backward(loss);
    benchmark::DoNotOptimize(w.grad().data());
  }
  state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_Conv2dForwardBackward)->Args({16, 16})->Args({64, 8})->Args({64, 56});

void BM_TinyResNetForward(benchmark::State& state) {
  Rng rng(2);
  SEResNet net(SEResNetConfig::tiny(), rng);
  const Tensor frames = random_tensor({30, 3, 16, 16}, rng);
  for (auto _ : state) {
    Tape tape(Precision::f32);
    tape.set_grad_enabled(false);
    benchmark::DoNotOptimize(net.forward(tape, frames, false).data().data());
  }
  state.SetItemsProcessed(state.iterations() * 30);
}
BENCHMARK(BM_TinyResNetForward);

void BM_ResNet34Frame(benchmark::State& state) {
  Rng rng(3);
  SEResNet net(SEResNetConfig::resnet34(), rng);
  const Tensor frame = random_tensor({1, 3, 224, 224}, rng);
  for (auto _ : state) {
    Tape tape(Precision::f32);
    tape.set_grad_enabled(false);
    benchmark::DoNotOptimize(net.forward(tape, frame, false).data().data());
  }
}
BENCHMARK(BM_ResNet34Frame)->Unit(benchmark::kMillisecond);

void BM_SELSTMEncode(benchmark::State& state) {
  SELSTMConfig config;
  config.layers = 2;
  config.hidden = static_cast<std::size_t>(state.range(0));
  config.input_dim = 512;
  config.sequence_length = 30;
  config.class_count = 101;
  Rng rng(4);
  const SELSTM lstm(config, rng);
  const Tensor sequence = random_tensor({4, 30, 512}, rng);
  for (auto _ : state) {
    Tape tape(Precision::f32);
    tape.set_grad_enabled(false);
    Rng dropout(5);
    benchmark::DoNotOptimize(lstm.encode(tape, sequence, false, dropout).data().data());
  }
  state.SetItemsProcessed(state.iterations() * 4 * 30);
}
BENCHMARK(BM_SELSTMEncode)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_SequenceExcitation(benchmark::State& state) {
  const SEConfig config{16, SqueezeAxis::channel, ReweightMode::residual};
  Rng rng(6);
  const ExcitationWeights weights = ExcitationWeights::init(30, config, rng);
  const Tensor sequence = random_tensor({28, 30, 512}, rng);
  for (auto _ : state) {
    Tape tape(Precision::f32);
    tape.set_grad_enabled(false);
    const Tensor s = excitation(tape, squeeze_sequence(tape, sequence, config), weights, config);
    benchmark::DoNotOptimize(reweight_sequence(tape, sequence, s, config).data().data());
  }
}
BENCHMARK(BM_SequenceExcitation);

}  // namespace

BENCHMARK_MAIN();
