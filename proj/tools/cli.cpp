#include "cli.hpp"

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>

#include "selrcn/checkpoint.hpp"
#include "selrcn/errors.hpp"
#include "selrcn/manifest.hpp"
#include "selrcn/synth.hpp"
#include "selrcn/train.hpp"

namespace selrcn::cli {

namespace {

struct Options {
  std::string manifest;
  std::string eval_manifest;
  std::string preset = "tiny";
  bool se_spatial = true;
  bool se_temporal = true;
  std::string squeeze_axis = "frame";
  std::string reweight = "residual";
  std::string precision = "f32";
  bool final_frame_only = false;
  std::size_t layers = 0;
  std::size_t hidden = 0;
  std::size_t epochs = 0;
  double lr = 0.0;
  std::size_t batch = 0;
  std::size_t classes = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::string checkpoint;
  std::string resume;
  std::string init_weights;

  std::vector<std::string> axes{"se"};
  std::vector<std::size_t> layer_grid{2, 3, 4};
  std::vector<std::size_t> hidden_grid{256, 512, 1024};

  std::size_t synth_samples = 400;
  std::size_t synth_frames = 10;
  std::size_t synth_frame_size = 18;
  double synth_noise = 0.1;

  std::string video;
};

void add_model_options(CLI::App* sub, Options& o) {
  sub->add_option("--preset", o.preset, "Model preset")->check(CLI::IsMember({"full", "tiny"}))->capture_default_str();
  sub->add_flag("--se-spatial,!--no-se-spatial", o.se_spatial, "SE block in the CNN (default on)");
  sub->add_flag("--se-temporal,!--no-se-temporal", o.se_temporal, "SE block before the LSTM (default on)");
  sub->add_option("--squeeze-axis", o.squeeze_axis,
                  "Sequence squeeze: 'frame' pools channels to one value per frame, "
                  "'channel' pools frames to one value per channel")
      ->check(CLI::IsMember({"frame", "channel"}))
      ->capture_default_str();
  sub->add_option("--reweight", o.reweight, "Excitation reweighting")
      ->check(CLI::IsMember({"residual", "scale"}))
      ->capture_default_str();
  sub->add_option("--layers", o.layers, "LSTM layers")->check(CLI::PositiveNumber);
  sub->add_option("--hidden", o.hidden, "LSTM hidden units")->check(CLI::PositiveNumber);
  sub->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  sub->add_option("--classes", o.classes, "Class count (default: largest label + 1)")->check(CLI::PositiveNumber);
}

void add_train_options(CLI::App* sub, Options& o) {
  add_model_options(sub, o);
  sub->add_option("--eval-manifest", o.eval_manifest,
                  "Evaluation manifest (default: every 4th video of each class is held out)");
  sub->add_option("--epochs", o.epochs, "Training epochs")->check(CLI::PositiveNumber);
  sub->add_option("--lr", o.lr, "Initial learning rate")->check(CLI::PositiveNumber);
  sub->add_option("--batch", o.batch, "Segments per batch")->check(CLI::PositiveNumber);
  sub->add_option("--precision", o.precision, "Arithmetic precision")
      ->check(CLI::IsMember({"f32", "f64"}))
      ->capture_default_str();
  sub->add_flag("--final-frame-only", o.final_frame_only, "Supervise only the last frame of each segment");
}

struct Data {
  std::vector<VideoSample> train;
  std::vector<VideoSample> eval;
  std::size_t classes = 0;
};

std::size_t max_label(std::span<const VideoSample> videos) {
  std::size_t top = 0;
  for (const VideoSample& v : videos) top = std::max(top, v.label);
  return top;
}

Data load_data(const Options& o) {
  std::vector<VideoSample> videos = load_videos(load_manifest(o.manifest));
  if (videos.empty()) throw InputError("manifest '" + o.manifest + "' lists no videos");
  Data data;
  if (!o.eval_manifest.empty()) {
    data.train = std::move(videos);
    data.eval = load_videos(load_manifest(o.eval_manifest));
  } else {
    DatasetSplit split = holdout_split(std::move(videos));
    data.train = std::move(split.train);
    data.eval = std::move(split.eval);
  }
  data.classes = o.classes != 0 ? o.classes : std::max(max_label(data.train), max_label(data.eval)) + 1;
  return data;
}

TrainConfig make_config(const Options& o, std::size_t classes) {
  TrainConfig c = TrainConfig::for_preset(parse_preset(o.preset));
  c.se_spatial = o.se_spatial;
  c.se_temporal = o.se_temporal;
  c.squeeze_axis = o.squeeze_axis == "frame" ? SqueezeAxis::channel : SqueezeAxis::time;
  c.reweight_mode = o.reweight == "residual" ? ReweightMode::residual : ReweightMode::scale_only;
  c.precision = o.precision == "f64" ? Precision::f64 : Precision::f32;
  c.final_frame_only = o.final_frame_only;
  if (o.layers != 0) c.lstm_layers = o.layers;
  if (o.hidden != 0) c.hidden_units = o.hidden;
  if (o.epochs != 0) c.epochs = o.epochs;
  if (o.lr != 0.0) c.learning_rate = o.lr;
  if (o.batch != 0) c.batch_size = o.batch;
  c.seed = o.seed;
  c.class_count = classes;
  c.validate();
  return c;
}

/// Writes to --out when given, otherwise to `fallback`.
template <typename Fn>
void emit(const std::string& path, std::ostream& fallback, Fn&& write) {
  if (path.empty()) {
    write(fallback);
    return;
  }
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot write '" + path + "'");
  write(file);
}

int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
  const Data data = load_data(o);
  std::unique_ptr<Trainer> trainer;
  if (!o.resume.empty()) {
    trainer = std::make_unique<Trainer>(Trainer::resume(checkpoint_load(o.resume)));
    if (o.epochs != 0) trainer->set_epochs(o.epochs);
  } else {
    trainer = std::make_unique<Trainer>(make_config(o, data.classes));
    if (!o.init_weights.empty()) {
      const std::size_t n = import_weights(trainer->model(), checkpoint_load(o.init_weights).tensors, "cnn.");
      if (n == 0) throw InputError("'" + o.init_weights + "' holds no CNN tensors matching the model");
      err << "imported " << n << " CNN tensors\n";
    }
  }
  Metrics metrics;
  metrics.epochs = trainer->history();
  while (trainer->epochs_completed() < trainer->config().epochs) {
    const std::size_t e = trainer->epochs_completed();
    const EpochMetrics m = trainer->train_epoch(data.train, data.eval);
    err << "epoch " << m.epoch << " lr " << trainer->config().learning_rate_at(e) << " loss " << m.train_loss
        << " train_acc " << m.train_accuracy << " eval_acc " << m.eval_accuracy << '\n';
    metrics.epochs.push_back(m);
    if (!o.checkpoint.empty()) checkpoint_save(o.checkpoint, trainer->checkpoint());
  }
  if (!o.checkpoint.empty()) checkpoint_save(o.checkpoint, trainer->checkpoint());
  emit(o.out, out, [&](std::ostream& s) { write_metrics_csv(s, metrics); });
  return 0;
}

int cmd_eval(const Options& o, std::ostream& out) {
  LoadedModel loaded = load_model(checkpoint_load(o.checkpoint));
  const std::vector<VideoSample> videos = load_videos(load_manifest(o.manifest));
  if (max_label(videos) >= loaded.config.class_count) {
    throw InputError("manifest labels exceed the checkpoint's " + std::to_string(loaded.config.class_count) +
                     " classes");
  }
  const EvalResult result = evaluate(loaded.model, loaded.config, videos);
  emit(o.out, out, [&](std::ostream& s) { write_eval_csv(s, result); });
  return 0;
}

int cmd_ablate(const Options& o, std::ostream& out, std::ostream& err) {
  const Data data = load_data(o);
  const TrainConfig base = make_config(o, data.classes);
  AblationAxes axes;
  axes.se = false;
  for (const std::string& axis : o.axes) {
    if (axis == "se") axes.se = true;
    if (axis == "layers") axes.layers = o.layer_grid;
    if (axis == "hidden") axes.hidden = o.hidden_grid;
  }
  err << "running " << (axes.se ? 4 : 1) * std::max<std::size_t>(1, axes.layers.size()) *
                           std::max<std::size_t>(1, axes.hidden.size())
      << " configurations\n";
  const std::vector<AblationRow> rows = ablation_grid(base, axes, data.train, data.eval);
  emit(o.out, out, [&](std::ostream& s) { write_ablation_csv(s, rows); });
  return 0;
}

int cmd_gradcheck(const Options& o, std::ostream& out) {
  CompositeCheckConfig config;
  config.preset = parse_preset(o.preset);
  if (config.preset == ModelPreset::full) {
    config.image = 32;
    config.clips = 1;
    config.options.max_coords_per_tensor = 2;
  }
  if (o.layers != 0) config.layers = o.layers;
  if (o.hidden != 0) config.hidden = o.hidden;
  config.options.seed = o.seed;
  const GradCheckResult result = composite_grad_check(config, o.seed);
  out << "max relative error: " << std::scientific << std::setprecision(3) << result.max_relative_error << '\n'
      << "coordinates checked: " << result.coords_checked << '\n';
  return result.max_relative_error < 1e-4 ? 0 : 2;
}

int cmd_synth(const Options& o, std::ostream& out) {
  SynthConfig config;
  config.classes = o.classes != 0 ? o.classes : 4;
  config.samples = o.synth_samples;
  config.frames = o.synth_frames;
  config.frame_size = o.synth_frame_size;
  config.noise = o.synth_noise;
  config.seed = o.seed;
  const std::vector<VideoSample> videos = synth_generate(config);
  out << write_dataset(o.out, videos).string() << '\n';
  return 0;
}

int cmd_features(const Options& o, std::ostream& out) {
  const std::vector<VideoDescriptor> descriptors = load_manifest(o.manifest);
  if (descriptors.empty()) throw InputError("manifest '" + o.manifest + "' lists no videos");
  const VideoDescriptor* chosen = &descriptors.front();
  if (!o.video.empty()) {
    chosen = nullptr;
    for (const VideoDescriptor& d : descriptors) {
      if (d.id == o.video) chosen = &d;
    }
    if (chosen == nullptr) throw InputError("video '" + o.video + "' is not in the manifest");
  }
  const VideoSample video = load_video(*chosen);

  std::unique_ptr<LoadedModel> loaded;
  if (!o.checkpoint.empty()) {
    loaded = std::make_unique<LoadedModel>(load_model(checkpoint_load(o.checkpoint)));
  } else {
    const TrainConfig config = make_config(o, o.classes != 0 ? o.classes : std::max<std::size_t>(2, video.label + 1));
    loaded = std::make_unique<LoadedModel>(LoadedModel{config, SELRCN(config.model_config(), config.seed)});
  }
  AugmentConfig test = loaded->config.augment;
  test.mode = AugmentMode::test;
  Rng unused(0);
  const Tensor frames = prepare_segment(video.frames, test, unused);
  Tape tape(loaded->config.precision);
  tape.set_grad_enabled(false);
  const FeatureSequence features = extract_video_features(tape, frames, loaded->model.cnn(), false);

  emit(o.out, out, [&](std::ostream& s) {
    s << std::setprecision(9);
    for (std::size_t t = 0; t < features.frames(); ++t) {
      for (std::size_t c = 0; c < features.channels(); ++c) {
        s << (c ? "," : "") << features.values().at({t, c});
      }
      s << '\n';
    }
  });
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"SE-LRCN video action recognition"};
  app.name("selrcn");
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "Train a model and write per-epoch metrics CSV");
  train->add_option("--manifest", o.manifest, "Training manifest CSV")->required();
  add_train_options(train, o);
  train->add_option("--out", o.out, "Metrics CSV (default: standard output)");
  train->add_option("--checkpoint", o.checkpoint, "Checkpoint written after every epoch");
  train->add_option("--resume", o.resume, "Continue training from a checkpoint");
  train->add_option("--init-weights", o.init_weights, "Initialize CNN tensors from a checkpoint file")
      ->excludes("--resume");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint and write per-class accuracy CSV");
  eval->add_option("--manifest", o.manifest, "Evaluation manifest CSV")->required();
  eval->add_option("--checkpoint", o.checkpoint, "Trained checkpoint")->required();
  eval->add_option("--out", o.out, "Accuracy CSV (default: standard output)");

  auto* ablate = app.add_subcommand("ablate", "Train a grid of configurations and write an ablation CSV");
  ablate->add_option("--manifest", o.manifest, "Training manifest CSV")->required();
  add_train_options(ablate, o);
  ablate->add_option("--axes", o.axes, "Grid axes: se, layers, hidden")
      ->delimiter(',')
      ->check(CLI::IsMember({"se", "layers", "hidden"}));
  ablate->add_option("--layer-grid", o.layer_grid, "Layer counts for the layers axis")->delimiter(',');
  ablate->add_option("--hidden-grid", o.hidden_grid, "Hidden sizes for the hidden axis")->delimiter(',');
  ablate->add_option("--out", o.out, "Ablation CSV (default: standard output)");

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of the full network");
  gradcheck->add_option("--preset", o.preset, "Model preset")->check(CLI::IsMember({"full", "tiny"}));
  gradcheck->add_option("--layers", o.layers, "LSTM layers")->check(CLI::PositiveNumber);
  gradcheck->add_option("--hidden", o.hidden, "LSTM hidden units")->check(CLI::PositiveNumber);
  gradcheck->add_option("--seed", o.seed, "Random seed");

  auto* synth = app.add_subcommand("synth-gen", "Write a synthetic moving-square dataset");
  synth->add_option("--out", o.out, "Output directory")->required();
  synth->add_option("--classes", o.classes, "Class count (default 4)")->check(CLI::Range(2, 1 << 20));
  synth->add_option("--samples", o.synth_samples, "Number of videos")->capture_default_str();
  synth->add_option("--frames", o.synth_frames, "Frames per video")->capture_default_str();
  synth->add_option("--frame-size", o.synth_frame_size, "Frame side in pixels")->capture_default_str();
  synth->add_option("--noise", o.synth_noise, "Gaussian noise σ")->capture_default_str();
  synth->add_option("--seed", o.seed, "Random seed")->capture_default_str();

  auto* features = app.add_subcommand("features", "Dump per-frame CNN features of one video as CSV");
  features->add_option("--manifest", o.manifest, "Manifest CSV")->required();
  features->add_option("--video", o.video, "Video id (default: first in the manifest)");
  features->add_option("--checkpoint", o.checkpoint, "Trained checkpoint (default: freshly initialized model)");
  features->add_option("--out", o.out, "Feature CSV (default: standard output)");
  add_model_options(features, o);

  std::vector<std::string> argv_storage{"selrcn"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const std::string& a : argv_storage) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    err << app.help();
    return 1;
  }

  try {
    if (train->parsed()) return cmd_train(o, out, err);
    if (eval->parsed()) return cmd_eval(o, out);
    if (ablate->parsed()) return cmd_ablate(o, out, err);
    if (gradcheck->parsed()) return cmd_gradcheck(o, out);
    if (synth->parsed()) return cmd_synth(o, out);
    if (features->parsed()) return cmd_features(o, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace selrcn::cli
