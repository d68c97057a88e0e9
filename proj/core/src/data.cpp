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

#include "gaitphase/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string_view>

#include <nlohmann/json.hpp>

#include "gaitphase/error.hpp"
#include "gaitphase/random.hpp"

namespace gaitphase {
namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

bool parse_double(std::string_view text, double& out) {
  if (text.empty()) return false;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

bool parse_size(std::string_view text, std::size_t& out) {
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double median(std::vector<double> values) {
  const std::size_t n = values.size();
  std::sort(values.begin(), values.end());
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

// ---- sequence files ---------------------------------------------------------

std::string format_sequence(const SkeletonSequence& seq) {
  if (seq.frames.rank() != 3 || seq.frames.dim(2) != 3) {
    throw ShapeError("format_sequence: frames must be (T, J, 3), got " + shape_str(seq.frames.shape()));
  }
  if (seq.subject_id.empty() || seq.subject_id.find_first_of(",=\n\r") != std::string::npos) {
    throw UsageError("format_sequence: subject id '" + seq.subject_id + "' is empty or contains , = or newline");
  }
  std::string out = "#gaitseq,v1,subject=" + seq.subject_id + ",fps=" + format_double(seq.fps) +
                    ",joints=" + std::to_string(seq.joint_count()) + ",frames=" + std::to_string(seq.frame_count());
  if (!seq.environment.empty()) out += ",env=" + seq.environment;
  out += '\n';
  const std::size_t row = seq.joint_count() * 3;
  for (std::size_t t = 0; t < seq.frame_count(); ++t) {
    for (std::size_t i = 0; i < row; ++i) {
      if (i) out += ',';
      out += format_double(seq.frames[t * row + i]);
    }
    out += '\n';
  }
  return out;
}

void write_sequence(const SkeletonSequence& seq, const std::filesystem::path& path) {
  const std::string text = format_sequence(seq);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

SkeletonSequence parse_sequence(const std::string& text, std::size_t expected_joints) {
  if (text.empty()) throw ParseError(ParseErrorKind::kTruncated, 1, "empty file");
  if (text.back() != '\n') {
    const std::size_t lines = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) + 1;
    throw ParseError(ParseErrorKind::kTruncated, lines, "last line is not newline-terminated");
  }
  std::vector<std::string_view> lines;
  {
    std::string_view rest(text);
    while (!rest.empty()) {
      const std::size_t nl = rest.find('\n');
      std::string_view line = rest.substr(0, nl);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      lines.push_back(line);
      rest.remove_prefix(nl + 1);
    }
  }

  SkeletonSequence seq;
  const auto header = split_fields(lines[0]);
  if (header.size() < 2 || header[0] != "#gaitseq") {
    throw ParseError(ParseErrorKind::kMalformedHeader, 1, "expected '#gaitseq' magic");
  }
  if (header[1] != "v1") {
    throw ParseError(ParseErrorKind::kMalformedHeader, 1, "unsupported version '" + std::string(header[1]) + "'");
  }
  std::optional<std::size_t> joints;
  std::optional<std::size_t> declared_frames;
  bool have_subject = false;
  bool have_fps = false;
  std::set<std::string_view> seen;
  for (std::size_t i = 2; i < header.size(); ++i) {
    const std::size_t eq = header[i].find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(ParseErrorKind::kMalformedHeader, 1, "field '" + std::string(header[i]) + "' is not key=value");
    }
    const std::string_view key = header[i].substr(0, eq);
    const std::string_view value = header[i].substr(eq + 1);
    if (!seen.insert(key).second) {
      throw ParseError(ParseErrorKind::kMalformedHeader, 1, "duplicate key '" + std::string(key) + "'");
    }
    if (key == "subject") {
      if (value.empty()) throw ParseError(ParseErrorKind::kMalformedHeader, 1, "empty subject");
      seq.subject_id = std::string(value);
      have_subject = true;
    } else if (key == "fps") {
      if (!parse_double(value, seq.fps) || !std::isfinite(seq.fps) || seq.fps <= 0.0) {
        throw ParseError(ParseErrorKind::kMalformedHeader, 1, "bad fps '" + std::string(value) + "'");
      }
      have_fps = true;
    } else if (key == "joints") {
      std::size_t j = 0;
      if (!parse_size(value, j) || j == 0) {
        throw ParseError(ParseErrorKind::kMalformedHeader, 1, "bad joint count '" + std::string(value) + "'");
      }
      joints = j;
    } else if (key == "frames") {
      std::size_t f = 0;
      if (!parse_size(value, f)) {
        throw ParseError(ParseErrorKind::kMalformedHeader, 1, "bad frame count '" + std::string(value) + "'");
      }
      declared_frames = f;
    } else if (key == "env") {
      seq.environment = std::string(value);
    } else {
      throw ParseError(ParseErrorKind::kMalformedHeader, 1, "unknown key '" + std::string(key) + "'");
    }
  }
  if (!have_subject || !have_fps || !joints) {
    throw ParseError(ParseErrorKind::kMalformedHeader, 1, "header needs subject=, fps= and joints=");
  }
  if (*joints != expected_joints) {
    throw ParseError(ParseErrorKind::kJointMismatch, 1,
                     "file has " + std::to_string(*joints) + " joints, expected " + std::to_string(expected_joints));
  }

  const std::size_t row = *joints * 3;
  const std::size_t frames = lines.size() - 1;
  if (declared_frames && *declared_frames != frames) {
    throw ParseError(ParseErrorKind::kFrameCount, lines.size(),
                     "header declares " + std::to_string(*declared_frames) + " frames, found " +
                         std::to_string(frames));
  }
  if (frames == 0) throw ParseError(ParseErrorKind::kFrameCount, 2, "no frames");
  seq.frames = NDArray({frames, *joints, 3});
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t line_no = t + 2;
    const auto fields = split_fields(lines[t + 1]);
    if (fields.size() != row) {
      throw ParseError(ParseErrorKind::kRowArity, line_no,
                       "expected " + std::to_string(row) + " values, found " + std::to_string(fields.size()));
    }
    for (std::size_t i = 0; i < row; ++i) {
      double v = 0.0;
      if (!parse_double(fields[i], v)) {
        throw ParseError(ParseErrorKind::kBadNumber, line_no,
                         "field " + std::to_string(i + 1) + " '" + std::string(fields[i]) + "' is not a number");
      }
      if (!std::isfinite(v)) {
        throw ParseError(ParseErrorKind::kNonFinite, line_no, "field " + std::to_string(i + 1) + " is not finite");
      }
      seq.frames[t * row + i] = v;
    }
  }
  return seq;
}

SkeletonSequence load_sequence(const std::filesystem::path& path, std::size_t expected_joints) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(ParseErrorKind::kIo, 0, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_sequence(buf.str(), expected_joints);
  } catch (const ParseError& e) {
    throw ParseError(e.kind(), e.line(), path.filename().string() + ": " + e.what());
  }
}

// ---- manifest ---------------------------------------------------------------

int DatasetManifest::class_of(const std::string& subject) const {
  auto it = classes.find(subject);
  if (it == classes.end()) throw DataError("manifest: subject '" + subject + "' has no class index");
  return it->second;
}

void DatasetManifest::validate() const {
  std::vector<int> seen(classes.size(), 0);
  for (const auto& [name, idx] : classes) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= classes.size() || seen[static_cast<std::size_t>(idx)]++) {
      throw DataError("manifest: class indices must be contiguous from 0 (subject '" + name + "')");
    }
  }
  for (const auto& item : items) {
    class_of(item.subject);
    if (!item.split.empty() && item.split != "train" && item.split != "val") {
      throw DataError("manifest: split must be train or val, got '" + item.split + "'");
    }
  }
  // Once split tags are used, every subject needs training data.
  const bool tagged = std::any_of(items.begin(), items.end(), [](const ManifestItem& i) { return !i.split.empty(); });
  if (!tagged) return;
  for (const auto& [name, idx] : classes) {
    const bool trained = std::any_of(items.begin(), items.end(), [&](const ManifestItem& i) {
      return i.subject == name && i.split == "train";
    });
    if (!trained) throw DataError("manifest: subject '" + name + "' has no training sequence");
  }
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read manifest " + path.string());
  DatasetManifest m;
  try {
    const auto j = nlohmann::json::parse(in);
    for (const auto& [name, idx] : j.at("classes").items()) m.classes[name] = idx.get<int>();
    for (const auto& item : j.at("items")) {
      m.items.push_back({item.at("path").get<std::string>(), item.at("subject").get<std::string>(),
                         item.value("split", std::string())});
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("manifest " + path.string() + ": " + e.what());
  }
  m.validate();
  return m;
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["classes"] = nlohmann::ordered_json::object();
  for (const auto& [name, idx] : manifest.classes) j["classes"][name] = idx;
  j["items"] = nlohmann::ordered_json::array();
  for (const auto& item : manifest.items) {
    j["items"].push_back({{"path", item.path}, {"subject", item.subject}, {"split", item.split}});
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// ---- preprocessing ----------------------------------------------------------

SkeletonSequence normalize(const SkeletonSequence& seq, const MultiScaleGraph& graph) {
  if (seq.frames.rank() != 3 || seq.joint_count() != graph.fine_count() || seq.frames.dim(2) != 3) {
    throw ShapeError("normalize: frames " + shape_str(seq.frames.shape()) + " do not match the " +
                     std::to_string(graph.fine_count()) + "-joint convention");
  }
  const std::size_t root = graph.joint_index("pelvis");
  const std::size_t thorax = graph.joint_index("thorax");
  const std::size_t joints = seq.joint_count();
  const std::size_t frames = seq.frame_count();
  std::vector<double> torso(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    double sq = 0.0;
    for (std::size_t a = 0; a < 3; ++a) {
      const double d = seq.frames[(t * joints + thorax) * 3 + a] - seq.frames[(t * joints + root) * 3 + a];
      sq += d * d;
    }
    torso[t] = std::sqrt(sq);
  }
  const double scale = frames ? median(torso) : 0.0;
  if (!(scale > 0.0)) throw DataError("normalize: zero torso length in sequence '" + seq.subject_id + "'");
  SkeletonSequence out = seq;
  for (std::size_t t = 0; t < frames; ++t) {
    double origin[3];
    for (std::size_t a = 0; a < 3; ++a) origin[a] = seq.frames[(t * joints + root) * 3 + a];
    for (std::size_t j = 0; j < joints; ++j)
      for (std::size_t a = 0; a < 3; ++a) {
        const std::size_t i = (t * joints + j) * 3 + a;
        out.frames[i] = (seq.frames[i] - origin[a]) / scale;
      }
  }
  return out;
}

std::vector<GaitWindow> make_windows(const SkeletonSequence& seq, std::size_t window, std::size_t stride,
                                     std::size_t sequence_index) {
  if (stride == 0) throw UsageError("make_windows: stride must be positive");
  std::vector<GaitWindow> out;
  const std::size_t span = window + 1;
  const std::size_t frames = seq.frame_count();
  if (span > frames) {
    std::cerr << "warning: sequence '" << seq.subject_id << "' has " << frames << " frames, fewer than " << span
              << "; no windows\n";
    return out;
  }
  const std::size_t row = seq.joint_count() * 3;
  for (std::size_t start = 0; start + span <= frames; start += stride) {
    GaitWindow w;
    w.frames = NDArray({span, row});
    std::copy_n(seq.frames.raw() + start * row, span * row, w.frames.raw());
    w.fps = seq.fps;
    w.subject_id = seq.subject_id;
    w.sequence_index = sequence_index;
    w.start_frame = start;
    out.push_back(std::move(w));
  }
  return out;
}

SplitResult split_stratified(const DatasetManifest& manifest, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw UsageError("split ratio must be in (0, 1)");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < manifest.items.size(); ++i) {
    by_class[manifest.class_of(manifest.items[i].subject)].push_back(i);
  }
  SplitResult out;
  for (auto& [cls, items] : by_class) {
    if (items.size() < 2) {
      throw DataError("split: subject of class " + std::to_string(cls) + " has only " +
                      std::to_string(items.size()) + " sequence(s); need at least 2");
    }
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(cls)));
    std::shuffle(items.begin(), items.end(), rng);
    const auto n = static_cast<long>(items.size());
    const long n_train = std::clamp(std::lround(ratio * static_cast<double>(n)), 1L, n - 1);
    out.train.insert(out.train.end(), items.begin(), items.begin() + n_train);
    out.val.insert(out.val.end(), items.begin() + n_train, items.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  return out;
}

SplitResult split_by_environment(const std::vector<std::string>& environments) {
  if (environments.empty()) throw DataError("split: no sequences");
  const std::string held_out = *std::max_element(environments.begin(), environments.end());
  SplitResult out;
  for (std::size_t i = 0; i < environments.size(); ++i) {
    (environments[i] == held_out ? out.val : out.train).push_back(i);
  }
  if (out.train.empty()) throw DataError("split: only one environment ('" + held_out + "') present");
  return out;
}

// ---- synthetic corpus -------------------------------------------------------

std::string subject_name(std::size_t class_index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "s%02zu", class_index);
  return buf;
}

std::vector<ClassSignature> synth_signatures(const SynthSpec& spec, std::uint64_t seed) {
  if (!spec.signatures.empty()) {
    if (spec.signatures.size() != spec.classes) {
      throw UsageError("synth: " + std::to_string(spec.signatures.size()) + " signatures for " +
                       std::to_string(spec.classes) + " classes");
    }
    return spec.signatures;
  }
  Rng rng(derive_seed(seed, 0x5167));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  std::vector<ClassSignature> out(spec.classes);
  for (std::size_t c = 0; c < spec.classes; ++c) {
    ClassSignature& s = out[c];
    const double frac = spec.classes > 1 ? static_cast<double>(c) / static_cast<double>(spec.classes - 1) : 0.0;
    s.stride_hz = spec.freq_min + (spec.freq_max - spec.freq_min) * frac;
    if (spec.frequency_only) continue;
    s.leg_amplitude = draw(0.75, 1.25);
    s.arm_amplitude = draw(0.5, 1.5);
    s.knee_amplitude = draw(0.75, 1.25);
    s.arm_phase = draw(-0.4, 0.4);
    s.lean = draw(-0.06, 0.06);
    s.stance = draw(-0.03, 0.03);
  }
  return out;
}

std::vector<SkeletonSequence> synth_generate(const SynthSpec& spec, std::uint64_t seed) {
  if (spec.classes == 0 || spec.per_class == 0) throw UsageError("synth: need at least one class and sequence");
  if (!(spec.fps > 0.0)) throw UsageError("synth: fps must be positive");
  if (!(spec.noise >= 0.0)) throw UsageError("synth: noise must be >= 0");
  if (spec.frames < 2) throw UsageError("synth: need at least 2 frames");
  if (spec.environment_noise.empty()) throw UsageError("synth: need at least one environment");
  if (spec.frequency_jitter < 0.0 || spec.frequency_jitter >= 1.0 || spec.amplitude_jitter < 0.0) {
    throw UsageError("synth: jitter fractions must be in [0, 1)");
  }
  const auto signatures = synth_signatures(spec, seed);
  const double nyquist = spec.fps / 2.0;
  for (std::size_t c = 0; c < signatures.size(); ++c) {
    const double top = signatures[c].stride_hz * (1.0 + spec.frequency_jitter);
    if (!(signatures[c].stride_hz > 0.0) || top >= nyquist) {
      throw UsageError("synth: class " + std::to_string(c) + " stride frequency " +
                       std::to_string(signatures[c].stride_hz) + " Hz (with jitter) is not below Nyquist " +
                       std::to_string(nyquist) + " Hz");
    }
  }

  const MultiScaleGraph graph = build_multiscale_graph();
  // Standing pose in metres: x lateral (left positive), y up, z forward.
  static constexpr double kPose[17][3] = {
      {0.00, 1.00, 0.0},  {-0.10, 0.95, 0.0}, {-0.10, 0.52, 0.0}, {-0.10, 0.10, 0.0}, {0.10, 0.95, 0.0},
      {0.10, 0.52, 0.0},  {0.10, 0.10, 0.0},  {0.00, 1.25, 0.0},  {0.00, 1.50, 0.0},  {0.00, 1.60, 0.0},
      {0.00, 1.75, 0.0},  {0.18, 1.50, 0.0},  {0.20, 1.22, 0.0},  {0.20, 0.97, 0.0},  {-0.18, 1.50, 0.0},
      {-0.20, 1.22, 0.0}, {-0.20, 0.97, 0.0}};
  enum Limb { kNone, kRightLeg, kLeftLeg, kLeftArm, kRightArm };
  static constexpr Limb kLimb[17] = {kNone,    kRightLeg, kRightLeg, kRightLeg, kLeftLeg, kLeftLeg,
                                     kLeftLeg, kNone,     kNone,     kNone,     kNone,    kLeftArm,
                                     kLeftArm, kLeftArm,  kRightArm, kRightArm, kRightArm};
  // Forward swing (z) and vertical lift (y) per joint, metres at unit scale.
  static constexpr double kSwing[17] = {0, 0.05, 0.15, 0.25, 0.05, 0.15, 0.25, 0, 0, 0, 0, 0.02, 0.08, 0.15,
                                        0.02, 0.08, 0.15};
  static constexpr double kLift[17] = {0, 0, 0.03, 0.05, 0, 0.03, 0.05, 0, 0, 0, 0, 0, 0.01, 0.02, 0, 0.01, 0.02};

  std::vector<SkeletonSequence> out;
  out.reserve(spec.classes * spec.per_class);
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t c = 0; c < spec.classes; ++c) {
    const ClassSignature& sig = signatures[c];
    for (std::size_t k = 0; k < spec.per_class; ++k) {
      Rng rng(derive_seed(seed, 1000 + c * spec.per_class + k));
      std::uniform_real_distribution<double> unit(-1.0, 1.0);
      const double freq = sig.stride_hz * (1.0 + spec.frequency_jitter * unit(rng));
      const double amp = 1.0 + spec.amplitude_jitter * unit(rng);
      const double phase0 = std::numbers::pi * unit(rng);
      const std::size_t env = k % spec.environment_noise.size();
      const double sigma = spec.noise * spec.environment_noise[env];
      std::normal_distribution<double> noise(0.0, 1.0);

      SkeletonSequence seq;
      seq.subject_id = subject_name(c);
      seq.fps = spec.fps;
      seq.environment = "env" + std::to_string(env);
      seq.frames = NDArray({spec.frames, graph.fine_count(), 3});
      for (std::size_t t = 0; t < spec.frames; ++t) {
        const double phi = two_pi * freq * static_cast<double>(t) / spec.fps + phase0;
        const double bob = 0.02 * std::sin(2.0 * phi);
        for (std::size_t j = 0; j < graph.fine_count(); ++j) {
          double x = kPose[j][0];
          double y = kPose[j][1] + bob;
          double z = 0.0;
          double limb_phase = 0.0;
          double gain = 0.0;
          double lift_gain = 0.0;
          switch (kLimb[j]) {
            case kRightLeg: limb_phase = phi; gain = sig.leg_amplitude; lift_gain = sig.knee_amplitude; break;
            case kLeftLeg: limb_phase = phi + std::numbers::pi; gain = sig.leg_amplitude; lift_gain = sig.knee_amplitude; break;
            case kRightArm: limb_phase = phi + std::numbers::pi + sig.arm_phase; gain = sig.arm_amplitude; lift_gain = sig.arm_amplitude; break;
            case kLeftArm: limb_phase = phi + sig.arm_phase; gain = sig.arm_amplitude; lift_gain = sig.arm_amplitude; break;
            case kNone: break;
          }
          if (kLimb[j] == kRightLeg) x -= sig.stance;
          if (kLimb[j] == kLeftLeg) x += sig.stance;
          z += amp * gain * kSwing[j] * std::sin(limb_phase);
          y += amp * lift_gain * kLift[j] * std::sin(limb_phase + std::numbers::pi / 2.0);
          const double height = kPose[j][1] - kPose[0][1];
          if (height > 0.0) z += sig.lean * height / 0.75;
          double* dst = &seq.frames[(t * graph.fine_count() + j) * 3];
          dst[0] = x + sigma * noise(rng);
          dst[1] = y + sigma * noise(rng);
          dst[2] = z + sigma * noise(rng);
        }
      }
      out.push_back(std::move(seq));
    }
  }
  return out;
}

}  // namespace gaitphase
