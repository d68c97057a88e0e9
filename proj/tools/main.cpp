/*
 * Copyright 2026 The gaitphase Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// gaitphase: synthesize corpora, train, evaluate and inspect gait models.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gaitphase/error.hpp"
#include "gaitphase/runner.hpp"

namespace {

namespace fs = std::filesystem;
using namespace gaitphase;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

void add_model_flags(CLI::App* cmd, ModelConfig& m) {
  cmd->add_option("--layers", m.layers, "Spatial graph-convolution layers")->check(CLI::PositiveNumber);
  cmd->add_option("--hidden", m.hidden, "Hidden width of the spatial branch")->check(CLI::PositiveNumber);
  cmd->add_option("--channels", m.channels, "Latent periodic channels K")->check(CLI::PositiveNumber);
  cmd->add_option("--window", m.window, "Window length T in velocity frames")->check(CLI::Range(4, 100000));
  cmd->add_option("--lambda", m.lambda, "Weight of the reconstruction loss")->check(CLI::NonNegativeNumber);
  const std::map<std::string, SpatialInput> spatial{{"velocity", SpatialInput::kVelocity},
                                                    {"position", SpatialInput::kPosition}};
  cmd->add_option("--spatial-input", m.spatial_input, "Per-node graph input: velocity or position")
      ->transform(CLI::CheckedTransformer(spatial, CLI::ignore_case).description(""))
      ->option_text("velocity|position");
  const std::map<std::string, ReconTarget> recon{{"velocity", ReconTarget::kVelocity},
                                                 {"position", ReconTarget::kPosition}};
  cmd->add_option("--recon-target", m.recon_target, "Reconstruction target: velocity or position")
      ->transform(CLI::CheckedTransformer(recon, CLI::ignore_case).description(""))
      ->option_text("velocity|position");
  const std::map<std::string, FusionSource> fusion{{"phase_params", FusionSource::kPhaseParams},
                                                   {"latent", FusionSource::kLatent}};
  cmd->add_option("--fusion-source", m.fusion_source, "Fused periodic features: phase_params or latent")
      ->transform(CLI::CheckedTransformer(fusion, CLI::ignore_case).description(""))
      ->option_text("phase_params|latent");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Skeleton gait recognition with a learned periodic phase manifold and dense multi-scale graphs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "gaitphase 0.1.0");

  // ---- synth ----
  cli::SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic gait corpus");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--classes", synth.spec.classes, "Number of subjects")->check(CLI::Range(2, 1000));
  synth_cmd->add_option("--per-class", synth.spec.per_class, "Sequences per subject")->check(CLI::Range(2, 100000));
  synth_cmd->add_option("--frames", synth.spec.frames, "Frames per sequence")->check(CLI::Range(2, 10000000));
  synth_cmd->add_option("--fps", synth.spec.fps, "Frame rate")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--noise", synth.spec.noise, "Gaussian noise sigma in metres")->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--freq-min", synth.spec.freq_min, "Lowest class stride frequency (Hz)")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--freq-max", synth.spec.freq_max, "Highest class stride frequency (Hz)")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_flag("--frequency-only", synth.spec.frequency_only, "Classes differ only in stride frequency");
  synth_cmd->add_option("--frequency-jitter", synth.spec.frequency_jitter, "Per-sequence stride frequency jitter")
      ->check(CLI::Range(0.0, 0.5));
  synth_cmd->add_option("--amplitude-jitter", synth.spec.amplitude_jitter, "Per-sequence limb amplitude jitter")
      ->check(CLI::Range(0.0, 0.9));
  synth_cmd->add_option("--split", synth.split_ratio, "Training fraction per subject")->check(CLI::Range(0.0, 1.0));
  synth_cmd->add_option("--seed", synth.seed, "Random seed");

  // ---- train ----
  cli::RunConfig run;
  double split_ratio = 0.0;
  auto* train_cmd = app.add_subcommand("train", "Train a model on a corpus directory");
  train_cmd->add_option("--data", run.data, "Corpus directory holding manifest.json")->required();
  train_cmd->add_option("--out", run.out, "Run directory")->required();
  train_cmd->add_option("--epochs", run.epochs, "Training epochs")->check(CLI::PositiveNumber);
  train_cmd->add_option("--batch", run.batch, "Mini-batch size")->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", run.lr, "Initial learning rate")->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--seed", run.seed, "Random seed");
  train_cmd->add_option("--stride", run.stride, "Window stride in frames")->check(CLI::PositiveNumber);
  auto* split_opt =
      train_cmd->add_option("--split", split_ratio, "Re-split stratified with this training fraction")
          ->check(CLI::Range(0.0, 1.0));
  auto* env_flag = train_cmd->add_flag("--split-by-environment", run.split_by_environment,
                                       "Hold out the last environment tag for validation");
  split_opt->excludes(env_flag);
  add_model_flags(train_cmd, run.model);
  bool no_temporal = false;
  bool no_residual = false;
  train_cmd->add_flag("--no-temporal", no_temporal, "Disable the periodic features in the fusion");
  train_cmd->add_flag("--no-residual", no_residual, "Disable residual connections in the spatial branch");

  // ---- eval ----
  cli::EvalOptions eval;
  fs::path eval_out;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a corpus");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--data", eval.data, "Corpus directory holding manifest.json")->required();
  eval_cmd->add_option("--split", eval.split, "Sequences to score: train, val or all");
  eval_cmd->add_option("--stride", eval.stride, "Window stride in frames")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--out", eval_out, "Also write the metrics JSON to this file");
  std::size_t ov_layers = 0, ov_hidden = 0, ov_channels = 0, ov_window = 0;
  auto* ov_layers_opt = eval_cmd->add_option("--layers", ov_layers, "Expected layer count");
  auto* ov_hidden_opt = eval_cmd->add_option("--hidden", ov_hidden, "Expected hidden width");
  auto* ov_channels_opt = eval_cmd->add_option("--channels", ov_channels, "Expected channel count");
  auto* ov_window_opt = eval_cmd->add_option("--window", ov_window, "Expected window length");
  bool ov_no_temporal = false;
  bool ov_no_residual = false;
  eval_cmd->add_flag("--no-temporal", ov_no_temporal, "Expect a model without temporal fusion");
  eval_cmd->add_flag("--no-residual", ov_no_residual, "Expect a model without residuals");

  // ---- inspect ----
  cli::InspectOptions inspect;
  std::optional<fs::path> inspect_sequence;
  auto* inspect_cmd = app.add_subcommand("inspect", "Export learned adjacencies and phase descriptors");
  inspect_cmd->add_option("--checkpoint", inspect.checkpoint, "Checkpoint file")->required();
  inspect_cmd->add_option("--layers", inspect.layers, "Comma-separated 1-based layer indices")
      ->delimiter(',')
      ->required();
  inspect_cmd->add_option("--out", inspect.out, "Output directory")->required();
  inspect_cmd->add_option("--sequence", inspect_sequence, "Sequence CSV whose phase descriptors to dump");
  inspect_cmd->add_option("--stride", inspect.stride, "Window stride in frames")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*synth_cmd) {
      cli::cmd_synth(synth, std::cout);
    } else if (*train_cmd) {
      if (*split_opt) run.split_ratio = split_ratio;
      run.model.use_temporal = !no_temporal;
      run.model.residual = !no_residual;
      const cli::TrainResult result = cli::cmd_train(run, std::cout);
      std::cout << "best epoch " << result.best_epoch << ": " << cli::to_json(result.best_val).dump() << '\n';
    } else if (*eval_cmd) {
      if (*ov_layers_opt) eval.overrides.layers = ov_layers;
      if (*ov_hidden_opt) eval.overrides.hidden = ov_hidden;
      if (*ov_channels_opt) eval.overrides.channels = ov_channels;
      if (*ov_window_opt) eval.overrides.window = ov_window;
      if (ov_no_temporal) eval.overrides.use_temporal = false;
      if (ov_no_residual) eval.overrides.residual = false;
      const std::string json = cli::to_json(cli::cmd_eval(eval)).dump(2);
      std::cout << json << '\n';
      if (!eval_out.empty()) {
        std::ofstream out(eval_out, std::ios::binary);
        out << json << '\n';
        if (!out) throw DataError("cannot write " + eval_out.string());
      }
    } else if (*inspect_cmd) {
      inspect.sequence = inspect_sequence;
      for (const auto& path : cli::cmd_inspect(inspect)) std::cout << "wrote " << path.string() << '\n';
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}
