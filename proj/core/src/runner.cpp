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

#include "gaitphase/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>

#include "gaitphase/error.hpp"
#include "gaitphase/optim.hpp"
#include "gaitphase/random.hpp"

namespace gaitphase::cli {
namespace {

namespace fs = std::filesystem;

constexpr std::size_t kInferenceChunk = 64;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError("cannot create directory " + dir.string());
}

struct WindowSet {
  std::vector<GaitWindow> windows;
  std::vector<int> labels;
};

WindowSet windows_of(const Corpus& corpus, const std::vector<std::size_t>& items, std::size_t window,
                     std::size_t stride) {
  WindowSet set;
  for (std::size_t i : items) {
    auto w = make_windows(corpus.sequences[i], window, stride, i);
    for (auto& win : w) {
      set.windows.push_back(std::move(win));
      set.labels.push_back(corpus.labels[i]);
    }
  }
  return set;
}

std::vector<std::size_t> tagged(const Corpus& corpus, const std::string& split) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < corpus.manifest.items.size(); ++i) {
    if (split == "all" || corpus.manifest.items[i].split == split) out.push_back(i);
  }
  return out;
}

bool fully_tagged(const Corpus& corpus) {
  return std::all_of(corpus.manifest.items.begin(), corpus.manifest.items.end(),
                     [](const ManifestItem& item) { return !item.split.empty(); });
}

double sequence_nll(const NDArray& scores, std::span<const int> labels) {
  const std::size_t z = scores.dim(1);
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    total -= std::log(std::max(scores[i * z + static_cast<std::size_t>(labels[i])], 1e-300));
  }
  return total / static_cast<double>(labels.size());
}

}  // namespace

Corpus load_corpus(const fs::path& data_dir, const MultiScaleGraph& graph) {
  Corpus corpus;
  corpus.root = data_dir;
  corpus.manifest = load_manifest(data_dir / kManifestName);
  if (corpus.manifest.items.empty()) throw DataError("manifest lists no sequences");
  for (const auto& item : corpus.manifest.items) {
    SkeletonSequence seq = load_sequence(data_dir / item.path, graph.fine_count());
    if (seq.subject_id != item.subject) {
      throw DataError(item.path + ": file subject '" + seq.subject_id + "' disagrees with manifest '" +
                      item.subject + "'");
    }
    corpus.sequences.push_back(normalize(seq, graph));
    corpus.labels.push_back(corpus.manifest.class_of(item.subject));
  }
  return corpus;
}

NDArray score_sequences(const GaitModel& model, const std::vector<const SkeletonSequence*>& sequences,
                        std::size_t stride) {
  const std::size_t z = model.config().classes;
  NDArray scores({sequences.size(), z});
  std::vector<GaitWindow> windows;
  std::vector<std::size_t> owner;
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    auto w = make_windows(*sequences[s], model.config().window, stride, s);
    if (w.empty()) {
      throw DataError("sequence of subject '" + sequences[s]->subject_id + "' is shorter than one window");
    }
    for (auto& win : w) {
      windows.push_back(std::move(win));
      owner.push_back(s);
    }
  }
  std::vector<std::size_t> counts(sequences.size(), 0);
  for (std::size_t start = 0; start < windows.size(); start += kInferenceChunk) {
    const std::size_t end = std::min(windows.size(), start + kInferenceChunk);
    std::vector<const GaitWindow*> chunk;
    for (std::size_t i = start; i < end; ++i) chunk.push_back(&windows[i]);
    const NDArray probs = model.predict_proba(make_batch(model.config(), model.graph(), chunk, {}));
    for (std::size_t i = start; i < end; ++i) {
      const std::size_t s = owner[i];
      for (std::size_t c = 0; c < z; ++c) scores[s * z + c] += probs[(i - start) * z + c];
      ++counts[s];
    }
  }
  for (std::size_t s = 0; s < sequences.size(); ++s)
    for (std::size_t c = 0; c < z; ++c) scores[s * z + c] /= static_cast<double>(counts[s]);
  return scores;
}

// ---- synth ------------------------------------------------------------------

std::size_t cmd_synth(const SynthOptions& options, std::ostream& report) {
  const auto sequences = synth_generate(options.spec, options.seed);
  ensure_dir(options.out);
  DatasetManifest manifest;
  for (std::size_t c = 0; c < options.spec.classes; ++c) manifest.classes[subject_name(c)] = static_cast<int>(c);
  std::vector<std::size_t> per_subject(options.spec.classes, 0);
  for (const auto& seq : sequences) {
    const int cls = manifest.class_of(seq.subject_id);
    const std::string name = seq.subject_id + "_" + std::to_string(per_subject[static_cast<std::size_t>(cls)]++) + ".csv";
    write_sequence(seq, options.out / name);
    manifest.items.push_back({name, seq.subject_id, ""});
  }
  const SplitResult split = split_stratified(manifest, options.split_ratio, options.seed);
  for (std::size_t i : split.train) manifest.items[i].split = "train";
  for (std::size_t i : split.val) manifest.items[i].split = "val";
  write_manifest(manifest, options.out / kManifestName);
  report << "wrote " << sequences.size() << " sequences (" << options.spec.classes << " classes x "
         << options.spec.per_class << ", " << options.spec.frames << " frames at " << options.spec.fps
         << " fps) to " << options.out.string() << "; train " << split.train.size() << ", val " << split.val.size()
         << '\n';
  return sequences.size();
}

// ---- train ------------------------------------------------------------------

nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["data"] = c.data.string();
  j["epochs"] = c.epochs;
  j["batch"] = c.batch;
  j["lr"] = c.lr;
  j["lr_schedule"] = "cosine";
  j["lr_min"] = 0.0;
  j["optimizer"] = "adam";
  j["seed"] = c.seed;
  j["split"] = c.split_by_environment ? nlohmann::ordered_json("environment")
                                      : (c.split_ratio ? nlohmann::ordered_json(*c.split_ratio)
                                                       : nlohmann::ordered_json("manifest"));
  j["stride"] = c.stride;
  j["model"] = to_json(c.model);
  return j;
}

TrainResult cmd_train(const RunConfig& config, std::ostream& progress) {
  if (config.epochs < 1) throw UsageError("epochs must be >= 1");
  if (config.batch < 1) throw UsageError("batch must be >= 1");
  if (!(config.lr >= 0.0)) throw UsageError("lr must be >= 0");
  if (config.stride < 1) throw UsageError("stride must be >= 1");

  const MultiScaleGraph graph = build_multiscale_graph();
  const Corpus corpus = load_corpus(config.data, graph);

  SplitResult split;
  if (config.split_by_environment) {
    std::vector<std::string> envs;
    for (const auto& s : corpus.sequences) envs.push_back(s.environment);
    split = split_by_environment(envs);
  } else if (config.split_ratio || !fully_tagged(corpus)) {
    split = split_stratified(corpus.manifest, config.split_ratio.value_or(0.75), config.seed);
  } else {
    split.train = tagged(corpus, "train");
    split.val = tagged(corpus, "val");
  }
  if (split.train.empty()) throw DataError("training split is empty");
  if (split.val.empty()) throw DataError("validation split is empty");

  ModelConfig mc = config.model;
  mc.classes = corpus.manifest.class_count();
  mc.seed = config.seed;
  GaitModel model(mc);

  RunConfig resolved = config;
  resolved.model = mc;
  ensure_dir(config.out);
  write_text(config.out / "config.json", to_json(resolved).dump(2) + "\n");

  const WindowSet train = windows_of(corpus, split.train, mc.window, config.stride);
  if (train.windows.empty()) throw DataError("no training windows; sequences shorter than window + 1 frames");
  std::vector<const SkeletonSequence*> val_seqs;
  std::vector<int> val_labels;
  for (std::size_t i : split.val) {
    val_seqs.push_back(&corpus.sequences[i]);
    val_labels.push_back(corpus.labels[i]);
  }

  std::ofstream log(config.out / "train_log.csv", std::ios::binary);
  if (!log) throw DataError("cannot write training log");
  log << "epoch,lr,train_loss,train_ce,train_mse,val_accuracy,val_f1,val_auc,val_loss\n";

  progress << "training " << train.windows.size() << " windows from " << split.train.size() << " sequences, "
           << val_seqs.size() << " validation sequences, " << model.params().scalar_count() << " parameters\n";

  TrainResult result;
  AdamState adam;
  double best_acc = -1.0;
  double best_loss = 0.0;
  std::vector<std::size_t> order(train.windows.size());
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = cosine_lr(epoch, config.epochs, config.lr);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle(derive_seed(config.seed, 0x10000 + static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle);
    try {
      for (std::size_t start = 0; start < order.size(); start += config.batch) {
        const std::size_t end = std::min(order.size(), start + config.batch);
        std::vector<const GaitWindow*> windows;
        std::vector<int> labels;
        for (std::size_t i = start; i < end; ++i) {
          windows.push_back(&train.windows[order[i]]);
          labels.push_back(train.labels[order[i]]);
        }
        const Batch batch = make_batch(mc, graph, windows, labels);
        Tape tape;
        ParamBinder bind(tape, model.params());
        const ForwardResult fwd = model.forward(bind, batch);
        const double n = static_cast<double>(batch.size());
        rec.train_loss += fwd.total.value().item() * n;
        rec.train_ce += fwd.ce.value().item() * n;
        rec.train_mse += fwd.mse.value().item() * n;
        tape.backward(fwd.total);
        adam_step(model.params(), adam, rec.lr);
      }
    } catch (const NumericalError& e) {
      throw NumericalError("diverged in epoch " + std::to_string(epoch) + ": " + e.what());
    }
    const double total = static_cast<double>(order.size());
    rec.train_loss /= total;
    rec.train_ce /= total;
    rec.train_mse /= total;
    if (!std::isfinite(rec.train_loss)) throw NumericalError("diverged in epoch " + std::to_string(epoch));

    const NDArray scores = score_sequences(model, val_seqs, config.stride);
    const EvalResult val = evaluate(scores, val_labels);
    rec.val_accuracy = val.accuracy;
    rec.val_f1 = val.f1_macro;
    rec.val_auc = val.auc_macro;
    rec.val_loss = sequence_nll(scores, val_labels);
    result.history.push_back(rec);
    result.final_val = val;

    log << rec.epoch << ',' << fmt(rec.lr) << ',' << fmt(rec.train_loss) << ',' << fmt(rec.train_ce) << ','
        << fmt(rec.train_mse) << ',' << fmt(rec.val_accuracy) << ',' << fmt(rec.val_f1) << ',' << fmt(rec.val_auc)
        << ',' << fmt(rec.val_loss) << '\n';
    log.flush();

    if (rec.val_accuracy > best_acc || (rec.val_accuracy == best_acc && rec.val_loss < best_loss)) {
      best_acc = rec.val_accuracy;
      best_loss = rec.val_loss;
      result.best_epoch = epoch;
      result.best_val = val;
      save_checkpoint(model, config.out / "best.ckpt");
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    char line[160];
    std::snprintf(line, sizeof line, "epoch %3d  lr %.3e  loss %.5f (ce %.5f mse %.5f)  val acc %.4f auc %.4f  %.1fs\n",
                  epoch, rec.lr, rec.train_loss, rec.train_ce, rec.train_mse, rec.val_accuracy, rec.val_auc, secs);
    progress << line << std::flush;
  }
  save_checkpoint(model, config.out / "final.ckpt");

  nlohmann::ordered_json results;
  results["best_epoch"] = result.best_epoch;
  results["best_val"] = to_json(result.best_val);
  results["final_val"] = to_json(result.final_val);
  write_text(config.out / "results.json", results.dump(2) + "\n");
  return result;
}

// ---- eval -------------------------------------------------------------------

nlohmann::ordered_json to_json(const EvalResult& r) {
  nlohmann::ordered_json j;
  j["accuracy"] = r.accuracy;
  j["f1"] = r.f1_macro;
  j["auc"] = r.auc_macro;
  j["f1_average"] = "macro";
  j["auc_average"] = "macro-ovr";
  j["confusion"] = r.confusion;
  j["n_samples"] = r.n_samples;
  return j;
}

EvalResult cmd_eval(const EvalOptions& options) {
  if (options.split != "train" && options.split != "val" && options.split != "all") {
    throw UsageError("--split must be train, val or all");
  }
  const GaitModel model = load_checkpoint(options.checkpoint);
  check_overrides(model.config(), options.overrides);
  const Corpus corpus = load_corpus(options.data, model.graph());
  if (corpus.manifest.class_count() != model.config().classes) {
    throw DataError("class-count mismatch: data has " + std::to_string(corpus.manifest.class_count()) +
                    " classes, checkpoint " + std::to_string(model.config().classes));
  }
  const std::string split = fully_tagged(corpus) ? options.split : "all";
  std::vector<const SkeletonSequence*> seqs;
  std::vector<int> labels;
  for (std::size_t i : tagged(corpus, split)) {
    seqs.push_back(&corpus.sequences[i]);
    labels.push_back(corpus.labels[i]);
  }
  if (seqs.empty()) throw DataError("no sequences in split '" + split + "'");
  return evaluate(score_sequences(model, seqs, options.stride), labels);
}

// ---- inspect ----------------------------------------------------------------

std::string format_phase_csv(const std::vector<PhaseParams>& params) {
  std::string out = "window";
  const std::size_t k = params.empty() ? 0 : params.front().amplitude.size();
  for (const char* prefix : {"A", "F", "O", "P"})
    for (std::size_t c = 0; c < k; ++c) out += std::string(",") + prefix + std::to_string(c);
  out += '\n';
  for (std::size_t w = 0; w < params.size(); ++w) {
    out += std::to_string(w);
    for (const auto* field : {&params[w].amplitude, &params[w].frequency, &params[w].offset, &params[w].phase})
      for (double v : *field) out += "," + fmt(v);
    out += '\n';
  }
  return out;
}

std::vector<fs::path> cmd_inspect(const InspectOptions& options) {
  const GaitModel model = load_checkpoint(options.checkpoint);
  for (std::size_t layer : options.layers) model.adjacency(layer);
  ensure_dir(options.out);
  std::vector<fs::path> written;
  const auto names = model.graph().node_names();
  for (std::size_t layer : options.layers) {
    const fs::path stem = options.out / ("adjacency_layer" + std::to_string(layer));
    export_adjacency(model.adjacency(layer), names, stem);
    written.push_back(fs::path(stem).concat(".csv"));
    written.push_back(fs::path(stem).concat(".pgm"));
  }
  if (options.sequence) {
    const SkeletonSequence seq = normalize(load_sequence(*options.sequence, model.graph().fine_count()), model.graph());
    const auto windows = make_windows(seq, model.config().window, options.stride);
    if (windows.empty()) throw DataError("sequence is shorter than one window");
    std::vector<const GaitWindow*> ptrs;
    for (const auto& w : windows) ptrs.push_back(&w);
    const auto params = model.phase_params(make_batch(model.config(), model.graph(), ptrs, {}));
    const fs::path path = options.out / "phase.csv";
    write_text(path, format_phase_csv(params));
    written.push_back(path);
  }
  return written;
}

}  // namespace gaitphase::cli
