// Copyright 2026 The mpelu-kernels Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mpelu/data.hpp"
#include "mpelu/network.hpp"

namespace mpelu {

enum class ScheduleUnit { Epoch, Iteration };

struct ScheduleStep {
  long boundary = 0;
  double factor = 0.1;
};

struct SgdConfig {
  double base_lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  std::vector<ScheduleStep> schedule;
  ScheduleUnit schedule_unit = ScheduleUnit::Epoch;
  std::size_t batch_size = 128;
  int epochs = 1;
  std::uint64_t seed = 0;
  double warmup_lr = 0.0;
  int warmup_epochs = 0;

  /// Throws InvalidArgument when a field is out of range.
  void validate() const;
  /// Rate for the given 0-based epoch and iteration: warm-up rate inside the
  /// warm-up prefix, else base_lr times every factor whose boundary has been
  /// reached.
  double lr_at(int epoch, long iteration) const;
};

/// "81:0.1,122:0.1" -> {{81, 0.1}, {122, 0.1}}
std::vector<ScheduleStep> parse_schedule(const std::string& text);
std::string format_schedule(const std::vector<ScheduleStep>& schedule);

struct ParamGroup {
  std::string name;
  Param* param = nullptr;
  Tensor velocity;
};

std::vector<ParamGroup> make_param_groups(NetworkGraph& net);

/// g = grad + wd_mult * weight_decay * theta; v = momentum * v + g;
/// theta -= lr_mult * lr * v; positive parameters are clamped to kMinBeta.
/// Throws DivergenceError on a non-finite gradient before touching anything.
void sgd_step(std::vector<ParamGroup>& groups, const SgdConfig& cfg,
              double lr);

// Run configuration: flat "key = value" text with '#' comments.

struct RunConfig {
  std::string arch = "resnet:20:mpelu-non-bottleneck";
  std::string init = "taylor";
  std::string fan_mode = "fan_in";
  std::string data_dir;        // CIFAR-10 binary directory
  bool strict_cifar = true;    // require 10000 records per file
  std::size_t train_subset = 0;  // 0: all
  std::size_t test_subset = 0;
  std::string preproc = "standardize";
  double zca_eps = 0.1;
  bool augment = true;
  std::size_t pad = 4;
  std::size_t crop = 32;
  bool identity_init = false;
  std::size_t lsuv_probe = 64;
  SgdConfig sgd;
  std::string out_dir = "run";
  bool record_wall_time = true;

  std::string to_text() const;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

// Checkpoints.

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double train_err = 0.0;
  double test_err = 0.0;
  double wall_seconds = 0.0;
};

struct TrainState {
  int epoch = 0;        // completed epochs
  long iteration = 0;   // completed minibatch steps
  Rng rng{0};
  std::vector<EpochRecord> log;
};

struct Checkpoint {
  std::string arch;
  std::string arch_dump;  // one describe() line per node
  std::string config_text;
  TrainState state;
  std::vector<std::pair<std::string, Tensor>> tensors;  // params, buffers, velocities
  std::vector<std::pair<std::string, Tensor>> preprocessing;
};

/// Container: 8-byte magic, u64 manifest length, JSON manifest (format
/// version, architecture dump, tensor table, RNG state, epoch, config),
/// then the tensor payloads in table order.
void save_checkpoint(const std::string& path, NetworkGraph& net,
                     const std::vector<ParamGroup>& groups,
                     const TrainState& state, const std::string& config_text,
                     const Preprocessor& preproc);
/// Reads a container without applying it.
Checkpoint read_checkpoint(const std::string& path);
/// Restores parameters, buffers and (if given) velocities. Throws SchemaError
/// if the network's architecture dump or tensor names differ.
void apply_checkpoint(const Checkpoint& ckpt, NetworkGraph& net,
                      std::vector<ParamGroup>* groups);

// Training.

struct EvalResult {
  double loss = 0.0;
  double error = 0.0;
};

/// Single-view inference-mode evaluation; images larger than `crop` are
/// centre-cropped.
EvalResult evaluate(NetworkGraph& net, const Dataset& data,
                    std::size_t batch_size, std::size_t crop = 0);

/// Divergence threshold on the minibatch loss.
inline constexpr double kDivergenceLoss = 1e4;

struct TrainOptions {
  SgdConfig sgd;
  bool augment = true;
  AugmentOptions augment_options;
  bool record_wall_time = true;
  std::string out_dir;       // empty: no checkpoints or log file
  std::string config_text;   // embedded in checkpoints
  std::string arch;          // embedded in checkpoints
  bool quiet = true;
};

struct TrainResult {
  std::vector<EpochRecord> log;
  std::vector<std::string> checkpoints;
};

/// Shuffled minibatch SGD. Writes `<out_dir>/log.csv` after every epoch and
/// checkpoints `<out_dir>/epoch_<e>.ckpt` before each schedule boundary and
/// at the end. When `resume` is given, training continues from its state
/// (parameters must already be restored).
TrainResult train(NetworkGraph& net, const Dataset& train_set,
                  const Dataset& test_set, const TrainOptions& options,
                  const Preprocessor& preproc = {},
                  const Checkpoint* resume = nullptr);

void write_log_csv(const std::string& path,
                   const std::vector<EpochRecord>& log);
std::string format_log_csv(const std::vector<EpochRecord>& log);

/// Builds, initialises (using `cfg.sgd.seed`), loads data and trains.
TrainResult run_training(const RunConfig& cfg,
                         const std::string& resume_path = "",
                         bool verbose = false);

}  // namespace mpelu
