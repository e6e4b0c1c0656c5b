// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion keys as
// arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "selrcn/checkpoint.hpp"
#include "selrcn/errors.hpp"
#include "selrcn/grad_check.hpp"
#include "selrcn/model.hpp"
#include "selrcn/ops.hpp"
#include "selrcn/se.hpp"
#include "selrcn/se_lstm.hpp"
#include "selrcn/se_resnet.hpp"
#include "selrcn/synth.hpp"
#include "selrcn/train.hpp"
#include "selrcn/video.hpp"
#include "test_support.hpp"

namespace {

using namespace selrcn;
using selrcn::testing::random_tensor;
using selrcn::testing::weighted_sum;
using Clock = std::chrono::steady_clock;

constexpr double kGradTolerance = 1e-4;
constexpr double kGradBudgetSeconds = 120.0;
constexpr std::size_t kGradInputsPerOp = 10;
constexpr double kGradMaxSkippedFraction = 0.05;

constexpr double kOracleTolerance = 1e-6;
constexpr std::size_t kOracleInstances = 100;

constexpr std::size_t kResNet34ConvWeights = 21'267'648;

constexpr std::size_t kSynthClasses = 4;
constexpr std::size_t kSynthSamples = 400;
constexpr std::size_t kSynthEpochs = 16;
constexpr std::size_t kSynthSeeds = 5;
constexpr double kSynthMinAccuracy = 0.90;
constexpr double kSynthMaxDegradation = 0.01;
constexpr double kSynthBudgetSeconds = 30.0 * 60.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string key;
  std::function<Outcome()> run;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// ---------------------------------------------------------------------------
// Gradient suite

struct OpCheck {
  std::string name;
  std::function<GradCheckResult(std::uint64_t seed)> run;
};

/// Checks d/dparams of weighted_sum(build(inputs)) for inputs drawn from `shapes`.
OpCheck op_check(std::string name, std::vector<Shape> shapes,
                 std::function<Tensor(Tape&, std::vector<Tensor>&)> build) {
  return {name, [shapes, build](std::uint64_t seed) {
            Rng rng(seed);
            std::vector<Tensor> inputs;
            for (const Shape& s : shapes) inputs.push_back(random_tensor(s, rng));
            const std::uint64_t weight_seed = derive_seed(seed, {99});
            const auto f = [&](Tape& tape) { return weighted_sum(tape, build(tape, inputs), weight_seed); };
            return grad_check(f, inputs);
          }};
}

std::vector<OpCheck> primitive_checks() {
  std::vector<OpCheck> checks;
  auto add = [&](std::string name, std::vector<Shape> shapes, std::function<Tensor(Tape&, std::vector<Tensor>&)> f) {
    checks.push_back(op_check(std::move(name), std::move(shapes), std::move(f)));
  };
  add("matmul", {{3, 4}, {4, 5}}, [](Tape& t, auto& in) { return ops::matmul(t, in[0], in[1]); });
  add("linear", {{3, 4}, {5, 4}, {5}}, [](Tape& t, auto& in) { return ops::linear(t, in[0], in[1], in[2]); });
  add("transpose", {{3, 4}}, [](Tape& t, auto& in) { return ops::transpose(t, in[0]); });
  add("add", {{2, 3}, {2, 3}}, [](Tape& t, auto& in) { return ops::add(t, in[0], in[1]); });
  add("sub", {{2, 3}, {2, 3}}, [](Tape& t, auto& in) { return ops::sub(t, in[0], in[1]); });
  add("mul", {{2, 3}, {2, 3}}, [](Tape& t, auto& in) { return ops::mul(t, in[0], in[1]); });
  add("scale", {{2, 3}}, [](Tape& t, auto& in) { return ops::scale(t, in[0], 1.7); });
  add("add_scalar", {{2, 3}}, [](Tape& t, auto& in) { return ops::add_scalar(t, in[0], 0.3); });
  add("relu", {{2, 5}}, [](Tape& t, auto& in) { return ops::relu(t, in[0]); });
  add("sigmoid", {{2, 5}}, [](Tape& t, auto& in) { return ops::sigmoid(t, in[0]); });
  add("tanh", {{2, 5}}, [](Tape& t, auto& in) { return ops::tanh(t, in[0]); });
  add("dropout", {{4, 5}}, [](Tape& t, auto& in) {
    Rng mask(5);
    return ops::dropout(t, in[0], 0.4, mask, true);
  });
  add("sum", {{2, 3}}, [](Tape& t, auto& in) { return ops::sum(t, in[0]); });
  add("mean", {{2, 3}}, [](Tape& t, auto& in) { return ops::mean(t, in[0]); });
  add("mean_axes", {{2, 3, 4}}, [](Tape& t, auto& in) { return ops::mean_axes(t, in[0], 1, 3); });
  add("global_avg_pool", {{2, 3, 4, 4}}, [](Tape& t, auto& in) { return ops::global_avg_pool(t, in[0]); });
  add("scale_broadcast", {{2, 3, 4}, {2, 4}},
      [](Tape& t, auto& in) { return ops::scale_broadcast(t, in[0], in[1], 1, 2); });
  add("softmax", {{3, 5}}, [](Tape& t, auto& in) { return ops::softmax(t, in[0], -1); });
  add("cross_entropy", {{4, 5}}, [](Tape& t, auto& in) {
    const std::vector<std::size_t> labels{0, 3, 4, 1};
    return ops::cross_entropy(t, in[0], labels);
  });
  add("reshape", {{2, 6}}, [](Tape& t, auto& in) { return ops::reshape(t, in[0], Shape{3, 4}); });
  add("slice_cols", {{3, 6}}, [](Tape& t, auto& in) { return ops::slice_cols(t, in[0], 1, 4); });
  add("gather_rows", {{4, 3}}, [](Tape& t, auto& in) {
    const std::vector<std::size_t> rows{2, 0, 2};
    return ops::gather_rows(t, in[0], rows);
  });
  add("concat_rows", {{2, 3}, {1, 3}}, [](Tape& t, auto& in) { return ops::concat_rows(t, in); });
  add("conv2d", {{2, 3, 5, 5}, {4, 3, 3, 3}}, [](Tape& t, auto& in) { return ops::conv2d(t, in[0], in[1], 1, 1); });
  add("conv2d_stride2", {{1, 2, 6, 6}, {3, 2, 3, 3}},
      [](Tape& t, auto& in) { return ops::conv2d(t, in[0], in[1], 2, 1); });
  add("max_pool2d", {{1, 2, 6, 6}}, [](Tape& t, auto& in) { return ops::max_pool2d(t, in[0], 3, 2, 1); });
  add("batch_norm2d_train", {{4, 3, 3, 3}, {3}, {3}}, [](Tape& t, auto& in) {
    Tensor mean(Shape{3}, 0.0), var(Shape{3}, 1.0);
    return ops::batch_norm2d(t, in[0], in[1], in[2], mean, var, {true, 0.1, 1e-5});
  });
  add("batch_norm2d_eval", {{2, 3, 3, 3}, {3}, {3}}, [](Tape& t, auto& in) {
    Tensor mean(Shape{3}, {0.1, -0.2, 0.3}), var(Shape{3}, {0.5, 1.5, 2.0});
    return ops::batch_norm2d(t, in[0], in[1], in[2], mean, var, {false, 0.1, 1e-5});
  });
  add("lstm_cell_step", {{2, 4}, {2, 3}, {2, 3}, {12, 4}, {12, 3}, {12}}, [](Tape& t, auto& in) {
    const LSTMLayerParams params{in[3], in[4], in[5]};
    const LSTMCellOutput out = lstm_cell_step(t, in[0], in[1], in[2], params);
    return ops::concat_rows(t, std::vector<Tensor>{out.h, out.c});
  });
  const SEConfig spatial{2, SqueezeAxis::spatial, ReweightMode::residual};
  add("squeeze_spatial", {{2, 3, 4, 4}}, [](Tape& t, auto& in) { return squeeze_spatial(t, in[0]); });
  add("excitation", {{2, 6}, {3, 6}, {6, 3}}, [spatial](Tape& t, auto& in) {
    return excitation(t, in[0], ExcitationWeights{in[1], in[2]}, spatial);
  });
  add("reweight_residual", {{2, 3, 2, 2}, {2, 3, 2, 2}, {2, 3}},
      [](Tape& t, auto& in) { return reweight_residual(t, in[0], in[1], in[2]); });
  add("squeeze_frames", {{2, 5, 4}}, [](Tape& t, auto& in) { return squeeze_frames(t, in[0]); });
  add("squeeze_channels", {{2, 5, 4}}, [](Tape& t, auto& in) { return squeeze_channels(t, in[0]); });
  add("reweight_sequence_frames", {{5, 4}, {5}}, [](Tape& t, auto& in) {
    return reweight_sequence(t, in[0], in[1], SEConfig{2, SqueezeAxis::channel, ReweightMode::residual});
  });
  add("reweight_sequence_channels", {{5, 4}, {4}}, [](Tape& t, auto& in) {
    return reweight_sequence(t, in[0], in[1], SEConfig{2, SqueezeAxis::time, ReweightMode::scale_only});
  });
  add("se_sequence_composite", {{5, 6}, {1, 5}, {5, 1}}, [](Tape& t, auto& in) {
    const SEConfig config{16, SqueezeAxis::channel, ReweightMode::residual};
    const Tensor s = excitation(t, squeeze_sequence(t, in[0], config), ExcitationWeights{in[1], in[2]}, config);
    return reweight_sequence(t, in[0], s, config);
  });
  return checks;
}

Outcome gradient_suite() {
  const auto start = Clock::now();
  double worst = 0.0;
  std::string worst_name;
  std::size_t ops_checked = 0, op_coords = 0, op_skipped = 0;
  for (const OpCheck& check : primitive_checks()) {
    for (std::size_t i = 0; i < kGradInputsPerOp; ++i) {
      const GradCheckResult r = check.run(derive_seed(2024, {ops_checked, i}));
      op_coords += r.coords_checked;
      op_skipped += r.coords_skipped;
      if (!(r.max_relative_error <= worst)) {
        worst = r.max_relative_error;
        worst_name = check.name;
      }
    }
    ++ops_checked;
  }

  double composite_worst = 0.0;
  std::size_t coords = 0, skipped = 0;
  for (std::uint64_t seed : {1, 2, 3}) {
    const GradCheckResult r = composite_grad_check(CompositeCheckConfig{}, seed);
    composite_worst = std::max(composite_worst, r.max_relative_error);
    coords += r.coords_checked;
    skipped += r.coords_skipped;
  }
  const double elapsed = seconds_since(start);
  const double skipped_fraction =
      static_cast<double>(op_skipped + skipped) / static_cast<double>(op_coords + op_skipped + coords + skipped);
  const bool pass = worst < kGradTolerance && composite_worst < kGradTolerance && elapsed < kGradBudgetSeconds &&
                    skipped_fraction <= kGradMaxSkippedFraction;
  return {pass, std::to_string(ops_checked) + " primitives x " + std::to_string(kGradInputsPerOp) +
                    " inputs: max rel err " + fmt(worst) + " (" + worst_name + ", " + std::to_string(op_coords) +
                    " coords); full tiny network x3 seeds: " + fmt(composite_worst) + " over " +
                    std::to_string(coords) + " coords; kink-straddling coords skipped " +
                    std::to_string(op_skipped + skipped) + " (" + fmt(100.0 * skipped_fraction) + "%); " +
                    fmt(elapsed) + " s (tol " + fmt(kGradTolerance) + ", budget " + fmt(kGradBudgetSeconds) + " s)"};
}

// ---------------------------------------------------------------------------
// Equation oracles

Outcome equation_oracles() {
  Rng rng(77);
  Tape tape(Precision::f64);
  tape.set_grad_enabled(false);
  double spatial_err = 0.0, frame_err = 0.0, channel_err = 0.0, rowsum_err = 0.0;
  bool reweight_exact = true;

  for (std::size_t n = 0; n < kOracleInstances; ++n) {
    const std::size_t c = 1 + rng.below(16), h = 1 + rng.below(9), w = 1 + rng.below(9);
    const Tensor u = random_tensor({c, h, w}, rng, 3.0);
    const Tensor z = squeeze_spatial(tape, u);
    for (std::size_t ci = 0; ci < c; ++ci) {
      double acc = 0.0;
      for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = 0; j < w; ++j) acc += u.at({ci, i, j});
      }
      spatial_err = std::max(spatial_err, std::abs(z[ci] - acc / static_cast<double>(h * w)));
    }

    const std::size_t t = 1 + rng.below(30), k = 1 + rng.below(64);
    const Tensor seq = random_tensor({t, k}, rng, 3.0);
    const Tensor zf = squeeze_frames(tape, seq);
    const Tensor zc = squeeze_channels(tape, seq);
    for (std::size_t ti = 0; ti < t; ++ti) {
      double acc = 0.0;
      for (std::size_t ki = 0; ki < k; ++ki) acc += seq.at({ti, ki});
      frame_err = std::max(frame_err, std::abs(zf[ti] - acc / static_cast<double>(k)));
    }
    for (std::size_t ki = 0; ki < k; ++ki) {
      double acc = 0.0;
      for (std::size_t ti = 0; ti < t; ++ti) acc += seq.at({ti, ki});
      channel_err = std::max(channel_err, std::abs(zc[ki] - acc / static_cast<double>(t)));
    }

    const Tensor u_prev = random_tensor({c, h, w}, rng);
    const Tensor zeros(Shape{c}, 0.0), ones(Shape{c}, 1.0);
    const Tensor identity = reweight_residual(tape, u_prev, u, zeros);
    const Tensor summed = reweight_residual(tape, u_prev, u, ones);
    for (std::size_t i = 0; i < u.numel(); ++i) {
      reweight_exact = reweight_exact && identity.data()[i] == u_prev.data()[i] &&
                       summed.data()[i] == u_prev.data()[i] + u.data()[i];
    }

    const std::size_t classes = 2 + rng.below(20);
    const Tensor hidden = random_tensor({t, k}, rng);
    const Tensor weight = random_tensor({classes, k}, rng, 2.0);
    const Tensor bias = random_tensor({classes}, rng);
    const Tensor probs = classify_frames(tape, hidden, weight, bias);
    for (std::size_t ti = 0; ti < t; ++ti) {
      double acc = 0.0;
      for (std::size_t ci = 0; ci < classes; ++ci) acc += probs.at({ti, ci});
      rowsum_err = std::max(rowsum_err, std::abs(acc - 1.0));
    }
  }
  const bool pass = spatial_err < kOracleTolerance && frame_err < kOracleTolerance &&
                    channel_err < kOracleTolerance && rowsum_err < kOracleTolerance && reweight_exact;
  return {pass, std::to_string(kOracleInstances) + " instances: spatial squeeze " + fmt(spatial_err) +
                    ", frame squeeze " + fmt(frame_err) + ", channel squeeze " + fmt(channel_err) +
                    ", residual reweight s in {0,1} " + (reweight_exact ? "exact" : "MISMATCH") +
                    ", softmax row-sum " + fmt(rowsum_err) + " (tol " + fmt(kOracleTolerance) + ")"};
}

// ---------------------------------------------------------------------------
// Shape contract

Outcome shape_contract() {
  Rng rng(11);
  SEResNet net(SEResNetConfig::resnet34(), rng);
  Tape tape(Precision::f32);
  tape.set_grad_enabled(false);
  const Tensor maps = net.forward_maps(tape, random_tensor({1, 3, 224, 224}, rng), false);
  const bool maps_ok = maps.shape() == Shape{1, 512, 7, 7};

  const Tensor clip = random_tensor({30, 3, 224, 224}, rng);
  const FeatureSequence features = extract_video_features(tape, clip, net, false);
  const bool seq_ok = features.values().shape() == Shape{30, 512};
  const std::size_t conv_weights = net.conv_parameter_count();
  const bool count_ok = conv_weights == kResNet34ConvWeights;
  return {maps_ok && seq_ok && count_ok,
          "pre-pool maps " + shape_string(maps.shape()) + ", 30-frame features " +
              shape_string(features.values().shape()) + ", conv weights " + std::to_string(conv_weights) +
              " (expected 1x512x7x7, 30x512, " + std::to_string(kResNet34ConvWeights) + ")"};
}

// ---------------------------------------------------------------------------
// Pipeline contract

Outcome pipeline_contract() {
  const SegmentSpec spec{30, 15};
  const std::vector<std::size_t> lengths{20, 30, 40, 75};
  const std::vector<std::size_t> expected{1, 1, 2, 4};
  bool counts_ok = true, lengths_ok = true, wrap_ok = true;
  std::string counts;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    const std::size_t t = lengths[i];
    Tensor frames(Shape{t, 3, 2, 2});
    auto data = frames.mutable_data();
    for (std::size_t f = 0; f < t; ++f) {
      for (std::size_t j = 0; j < 12; ++j) data[f * 12 + j] = static_cast<double>(f);
    }
    const std::vector<Segment> segments = segment_video(VideoSample{frames, 0, "v"}, spec);
    counts += (i ? "," : "") + std::to_string(segments.size());
    counts_ok = counts_ok && segments.size() == expected[i];
    for (const Segment& s : segments) {
      lengths_ok = lengths_ok && s.frames.dim(0) == 30 && s.frame_indices.size() == 30;
      for (std::size_t k = 0; k < 30; ++k) {
        const std::size_t want = (s.index * spec.stride + k) % t;
        wrap_ok = wrap_ok && s.frame_indices[k] == want && s.frames.at({k, 0, 0, 0}) == static_cast<double>(want);
      }
    }
  }
  const AugmentConfig augment;
  Tensor pixel(Shape{1, 3, 1, 1}, {0.485, 0.456, 0.406});
  const Tensor normalized = normalize_frames(pixel, augment.mean, augment.std);
  const bool norm_ok = std::abs(normalized[0]) < 1e-12;
  return {counts_ok && lengths_ok && wrap_ok && norm_ok,
          "segments for T=20,30,40,75: " + counts + " (expected 1,1,2,4); 30-frame segments " +
              (lengths_ok ? "yes" : "NO") + "; wrap rule " + (wrap_ok ? "ok" : "BROKEN") +
              "; normalize(0.485) on channel 0 = " + fmt(normalized[0])};
}

// ---------------------------------------------------------------------------
// Synthetic ablation

struct GateStats {
  double informative = 0.0;
  double noise = 0.0;
  std::size_t informative_count = 0;
  std::size_t noise_count = 0;
};

void accumulate_gates(SELRCN& model, const TrainConfig& config, const SynthConfig& synth,
                      std::span<const VideoSample> videos, GateStats& stats) {
  AugmentConfig test = config.augment;
  test.mode = AugmentMode::test;
  for (const VideoSample& video : videos) {
    Rng unused(0);
    const Tensor gates = model.temporal_gates(prepare_segment(video.frames, test, unused), config.precision);
    const std::vector<std::size_t> informative = synth_informative_frames(synth, video.label);
    for (std::size_t t = 0; t < gates.numel(); ++t) {
      if (std::find(informative.begin(), informative.end(), t) != informative.end()) {
        stats.informative += gates[t];
        ++stats.informative_count;
      } else {
        stats.noise += gates[t];
        ++stats.noise_count;
      }
    }
  }
}

Outcome synthetic_ablation() {
  const auto start = Clock::now();
  std::vector<double> on_acc, off_acc;
  GateStats gates;
  for (std::size_t seed = 0; seed < kSynthSeeds; ++seed) {
    SynthConfig synth;
    synth.classes = kSynthClasses;
    synth.samples = kSynthSamples;
    synth.seed = seed;
    const DatasetSplit split = holdout_split(synth_generate(synth));

    for (bool se : {true, false}) {
      TrainConfig config = TrainConfig::for_preset(ModelPreset::tiny);
      config.class_count = kSynthClasses;
      config.epochs = kSynthEpochs;
      config.seed = seed;
      config.se_spatial = se;
      config.se_temporal = se;
      Trainer trainer(config);
      const Metrics metrics = trainer.fit(split.train, split.eval);
      (se ? on_acc : off_acc).push_back(metrics.final_eval.accuracy);
      if (se) accumulate_gates(trainer.model(), trainer.config(), synth, split.eval, gates);
      std::cerr << "  synthetic seed " << seed << " SE " << (se ? "on " : "off") << ": eval acc "
                << metrics.final_eval.accuracy << ", " << fmt(seconds_since(start)) << " s elapsed\n";
    }
  }
  const auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
  const double min_on = *std::min_element(on_acc.begin(), on_acc.end());
  const double min_off = *std::min_element(off_acc.begin(), off_acc.end());
  const double gate_info = gates.informative / static_cast<double>(gates.informative_count);
  const double gate_noise = gates.noise / static_cast<double>(gates.noise_count);
  const double elapsed = seconds_since(start);

  const bool a = min_on >= kSynthMinAccuracy && min_off >= kSynthMinAccuracy;
  const bool b = mean(on_acc) >= mean(off_acc) - kSynthMaxDegradation;
  const bool c = gate_info > gate_noise;
  const bool budget = elapsed < kSynthBudgetSeconds;
  return {a && b && c && budget,
          std::string("(a) min eval acc SE-on ") + fmt(min_on) + ", SE-off " + fmt(min_off) + " [>= " +
              fmt(kSynthMinAccuracy) + "] " + (a ? "ok" : "FAIL") + "; (b) mean over " + std::to_string(kSynthSeeds) +
              " seeds SE-on " + fmt(mean(on_acc)) + " vs SE-off " + fmt(mean(off_acc)) + " " + (b ? "ok" : "FAIL") +
              "; (c) mean frame gate informative " + fmt(gate_info) + " vs noise " + fmt(gate_noise) + " " +
              (c ? "ok" : "FAIL") + "; " + fmt(elapsed) + " s"};
}

// ---------------------------------------------------------------------------
// Determinism and resume

std::string metrics_csv(const std::vector<EpochMetrics>& epochs) {
  std::ostringstream out;
  Metrics m;
  m.epochs = epochs;
  write_metrics_csv(out, m);
  return out.str();
}

Outcome determinism_resume() {
  SynthConfig synth;
  synth.samples = 48;
  synth.seed = 3;
  const DatasetSplit split = holdout_split(synth_generate(synth));

  TrainConfig config = TrainConfig::for_preset(ModelPreset::tiny);
  config.class_count = synth.classes;
  config.epochs = 4;
  config.batch_size = 8;
  config.seed = 21;
  config.precision = Precision::f64;

  Trainer first(config);
  first.fit(split.train, split.eval);
  Trainer second(config);
  second.fit(split.train, split.eval);
  const bool metrics_identical = metrics_csv(first.history()) == metrics_csv(second.history());
  const bool checkpoints_identical = encode_checkpoint(first.checkpoint()) == encode_checkpoint(second.checkpoint());

  Trainer interrupted(config);
  interrupted.fit(split.train, split.eval, 2);
  const std::filesystem::path path = std::filesystem::temp_directory_path() / "selrcn_acceptance_resume.ckpt";
  checkpoint_save(path, interrupted.checkpoint());
  Trainer resumed = Trainer::resume(checkpoint_load(path));
  std::filesystem::remove(path);
  resumed.fit(split.train, split.eval);

  const bool resume_metrics = metrics_csv(resumed.history()) == metrics_csv(first.history());
  const bool resume_state = encode_checkpoint(resumed.checkpoint()) == encode_checkpoint(first.checkpoint());
  bool params_equal = true;
  const NamedTensors a = first.model().parameters(), b = resumed.model().parameters();
  for (std::size_t i = 0; i < a.size(); ++i) {
    params_equal = params_equal && selrcn::testing::bit_equal(a[i].tensor.data(), b[i].tensor.data());
  }
  const bool pass = metrics_identical && checkpoints_identical && resume_metrics && resume_state && params_equal;
  return {pass, std::string("repeat run: metrics ") + (metrics_identical ? "identical" : "DIFFER") + ", checkpoint bytes " +
                    (checkpoints_identical ? "identical" : "DIFFER") + "; 2+2 resumed vs 4 epochs (f64): parameters " +
                    (params_equal ? "bit-identical" : "DIFFER") + ", optimizer/config " +
                    (resume_state ? "identical" : "DIFFER") + ", metrics " + (resume_metrics ? "identical" : "DIFFER")};
}

// ---------------------------------------------------------------------------
// Checkpoint format

template <typename E>
std::string expect_error(std::span<const std::uint8_t> bytes, bool& ok) {
  try {
    decode_checkpoint(bytes);
  } catch (const E& e) {
    return e.what();
  } catch (const std::exception& e) {
    ok = false;
    return std::string("wrong error: ") + e.what();
  }
  ok = false;
  return "accepted";
}

Outcome checkpoint_format() {
  Rng rng(8);
  Checkpoint original;
  original.tensors.push_back({"weights", random_tensor({3, 4, 5}, rng)});
  original.tensors.push_back({"float_exact", Tensor(Shape{4}, {0.5, -2.0, 1e30f, 0.0})});
  Tensor awkward(Shape{5}, {1.0 / 3.0, 1e-300, -0.0, 123456789.123456789, 2.0e-310});
  original.tensors.push_back({"awkward", awkward});
  original.optimizer.push_back({"adam.step", Tensor(Shape{1}, 17.0)});
  original.config.push_back({"config.seed", Tensor(Shape{4}, {1.0, 2.0, 3.0, 4.0})});

  bool round_trip = true;
  const std::vector<std::uint8_t> bytes = encode_checkpoint(original);
  const Checkpoint loaded = decode_checkpoint(bytes);
  auto same = [&](const NamedTensors& x, const NamedTensors& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i].name != y[i].name || x[i].tensor.shape() != y[i].tensor.shape() ||
          !selrcn::testing::bit_equal(x[i].tensor.data(), y[i].tensor.data())) {
        return false;
      }
    }
    return true;
  };
  round_trip = same(original.tensors, loaded.tensors) && same(original.optimizer, loaded.optimizer) &&
               same(original.config, loaded.config);

  bool errors_ok = true;
  std::vector<std::uint8_t> bad_magic = bytes;
  bad_magic[0] = 'X';
  const std::string magic_msg = expect_error<FormatError>(bad_magic, errors_ok);

  std::size_t truncations = 0;
  for (std::size_t cut : {std::size_t{2}, std::size_t{6}, bytes.size() / 2, bytes.size() - 1}) {
    bool ok = true;
    expect_error<FormatError>(std::span(bytes).first(cut), ok);
    truncations += ok ? 1 : 0;
  }
  errors_ok = errors_ok && truncations == 4;

  std::vector<std::uint8_t> v2 = bytes;
  v2[4] = 2;
  const std::string version_msg = expect_error<UnsupportedVersionError>(v2, errors_ok);
  return {round_trip && errors_ok, std::string("round trip ") + (round_trip ? "bit-exact" : "MISMATCH") +
                                       "; bad magic -> \"" + magic_msg + "\"; truncations rejected " +
                                       std::to_string(truncations) + "/4; version 2 -> \"" + version_msg + "\""};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {"gradient-suite", gradient_suite},       {"equation-oracles", equation_oracles},
      {"shape-contract", shape_contract},       {"pipeline-contract", pipeline_contract},
      {"synthetic-ablation", synthetic_ablation}, {"determinism-resume", determinism_resume},
      {"checkpoint-format", checkpoint_format},
  };
  std::vector<std::string> selected(argv + 1, argv + argc);
  bool all_pass = true;
  for (const Criterion& c : criteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.key) == selected.end()) continue;
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    all_pass = all_pass && outcome.pass;
    std::cout << (outcome.pass ? "PASS " : "FAIL ") << c.key << ": " << outcome.detail << std::endl;
  }
  return all_pass ? 0 : 1;
}
