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

// Microbenchmarks for the hot paths: spectral parameters, dense graph
// layers, sequence parsing and one full training step.

#include <vector>

#include <benchmark/benchmark.h>

#include "gaitphase/data.hpp"
#include "gaitphase/dft.hpp"
#include "gaitphase/graph.hpp"
#include "gaitphase/model.hpp"
#include "gaitphase/ops.hpp"
#include "gaitphase/optim.hpp"
#include "gaitphase/periodic.hpp"
#include "gaitphase/random.hpp"

namespace {

using namespace gaitphase;

void BM_RealDft(benchmark::State& state) {
  Rng rng(1);
  const NDArray signal = uniform_array({static_cast<std::size_t>(state.range(0))}, 1.0, rng);
  for (auto _ : state) benchmark::DoNotOptimize(real_dft(signal.data()));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_RealDft)->Arg(60)->Arg(64)->Arg(256);

// Amplitude/frequency/offset of a (16, 8, 60) latent batch, forward and backward.
void BM_SpectralParams(benchmark::State& state) {
  Rng rng(2);
  ParamStore store;
  Parameter& latent = store.add("latent", uniform_array({16, 8, 60}, 1.0, rng));
  for (auto _ : state) {
    Tape tape;
    const SpectralParams s = parameterize_fft(tape.param(latent));
    Var loss = ops::sum_all(ops::add(ops::add(s.amplitude, s.frequency), s.offset));
    tape.backward(loss);
    benchmark::DoNotOptimize(latent.grad.raw());
  }
}
BENCHMARK(BM_SpectralParams)->Unit(benchmark::kMicrosecond);

// One dense graph layer on (16, 23, hidden) node features.
void BM_GraphLayer(benchmark::State& state) {
  const auto hidden = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  const NDArray h = uniform_array({16, 23, hidden}, 1.0, rng);
  const NDArray a = init_adjacency(23, 4);
  const NDArray w = uniform_array({hidden, hidden}, 0.05, rng);
  for (auto _ : state) {
    Tape tape;
    Var out = mgd_gcl_forward(tape.constant(h), tape.constant(a), tape.constant(w), Activation::kTanh, true);
    benchmark::DoNotOptimize(out.value().raw());
  }
}
BENCHMARK(BM_GraphLayer)->Arg(64)->Arg(512)->Unit(benchmark::kMicrosecond);

void BM_ParseSequence(benchmark::State& state) {
  SynthSpec spec;
  spec.classes = 2;
  spec.per_class = 2;
  const std::string text = format_sequence(synth_generate(spec, 5).front());
  for (auto _ : state) benchmark::DoNotOptimize(parse_sequence(text));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_ParseSequence)->Unit(benchmark::kMicrosecond);

// Forward, backward and Adam update for one batch of default-size windows.
void BM_TrainStep(benchmark::State& state) {
  ModelConfig config;
  config.classes = 6;
  config.layers = static_cast<std::size_t>(state.range(0));
  GaitModel model(config);
  SynthSpec spec;
  const MultiScaleGraph& graph = model.graph();
  std::vector<GaitWindow> windows;
  std::vector<int> labels;
  const auto seqs = synth_generate(spec, 6);
  for (std::size_t i = 0; i < seqs.size() && windows.size() < 16; i += 3) {
    auto w = make_windows(normalize(seqs[i], graph), config.window, 60);
    windows.push_back(std::move(w.front()));
    labels.push_back(static_cast<int>(i / spec.per_class));
  }
  std::vector<const GaitWindow*> ptrs;
  for (const auto& w : windows) ptrs.push_back(&w);
  const Batch batch = make_batch(config, graph, ptrs, labels);
  AdamState adam;
  for (auto _ : state) {
    Tape tape;
    ParamBinder bind(tape, model.params());
    tape.backward(model.forward(bind, batch).total);
    adam_step(model.params(), adam, 1e-5);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.size()));
}
BENCHMARK(BM_TrainStep)->Arg(2)->Arg(12)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
