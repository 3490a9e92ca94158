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

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "mpelu/errors.hpp"
#include "mpelu/init.hpp"
#include "mpelu/layers.hpp"
#include "mpelu/models.hpp"
#include "mpelu/train.hpp"

namespace mpelu {

namespace {

constexpr std::uint64_t kTrainStream = 0x747261696e5f7267ULL;

Tensor eval_view(const Tensor& x, std::size_t crop) {
  if (crop == 0 || (x.dim(2) == crop && x.dim(3) == crop)) return x;
  return center_crop(x, crop);
}

bool is_boundary(const SgdConfig& cfg, int completed_epochs) {
  if (cfg.schedule_unit != ScheduleUnit::Epoch) return false;
  for (const auto& s : cfg.schedule)
    if (s.boundary == completed_epochs) return true;
  return false;
}

}  // namespace

EvalResult evaluate(NetworkGraph& net, const Dataset& data,
                    std::size_t batch_size, std::size_t crop) {
  data.validate();
  if (data.size() == 0) throw InvalidArgument("evaluate: empty dataset");
  if (batch_size == 0) throw InvalidArgument("evaluate: batch_size must be >= 1");
  double loss = 0.0;
  std::size_t errors = 0;
  std::vector<std::size_t> idx;
  for (std::size_t lo = 0; lo < data.size(); lo += batch_size) {
    const std::size_t hi = std::min(data.size(), lo + batch_size);
    idx.resize(hi - lo);
    std::iota(idx.begin(), idx.end(), lo);
    const Tensor x = eval_view(gather(data.images, idx), crop);
    const std::vector<int> y = gather(data.labels, idx);
    const auto r = softmax_loss(net.forward(x, Phase::Inference), y);
    loss += r.loss * static_cast<double>(idx.size());
    errors += r.errors;
  }
  const double n = static_cast<double>(data.size());
  return {loss / n, static_cast<double>(errors) / n};
}

std::string format_log_csv(const std::vector<EpochRecord>& log) {
  std::ostringstream os;
  os.precision(17);
  os << "epoch,lr,train_loss,train_err,test_err,wall_seconds\n";
  for (const auto& r : log)
    os << r.epoch << ',' << r.lr << ',' << r.train_loss << ',' << r.train_err
       << ',' << r.test_err << ',' << r.wall_seconds << '\n';
  return os.str();
}

void write_log_csv(const std::string& path,
                   const std::vector<EpochRecord>& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create log " + path);
  out << format_log_csv(log);
  if (!out) throw IoError("write failed: " + path);
}

TrainResult train(NetworkGraph& net, const Dataset& train_set,
                  const Dataset& test_set, const TrainOptions& o,
                  const Preprocessor& preproc, const Checkpoint* resume) {
  o.sgd.validate();
  train_set.validate();
  test_set.validate();
  if (train_set.size() < 2)
    throw InvalidArgument("train: need at least 2 training images");
  const std::size_t eval_crop = o.augment_options.crop;
  const std::size_t eval_batch = std::max<std::size_t>(o.sgd.batch_size, 100);

  std::vector<ParamGroup> groups = make_param_groups(net);
  TrainState st;
  st.rng = Rng(o.sgd.seed ^ kTrainStream);
  TrainResult result;
  auto flush = [&] {
    if (!o.out_dir.empty())
      write_log_csv((std::filesystem::path(o.out_dir) / "log.csv").string(),
                    st.log);
  };
  if (!o.out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(o.out_dir, ec);
    if (ec) throw IoError("cannot create " + o.out_dir + ": " + ec.message());
  }

  if (resume) {
    apply_checkpoint(*resume, net, &groups);
    st = resume->state;
  } else {
    const auto t0 = std::chrono::steady_clock::now();
    const EvalResult tr = evaluate(net, train_set, eval_batch, eval_crop);
    const EvalResult te = evaluate(net, test_set, eval_batch, eval_crop);
    const double wall =
        o.record_wall_time
            ? std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                  .count()
            : 0.0;
    st.log.push_back({0, o.sgd.lr_at(0, 0), tr.loss, tr.error, te.error, wall});
  }
  flush();

  const std::size_t n = train_set.size();
  std::vector<std::size_t> perm(n);
  for (int e = st.epoch; e < o.sgd.epochs; ++e) {
    const auto t0 = std::chrono::steady_clock::now();
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = n; i-- > 1;)
      std::swap(perm[i], perm[st.rng.uniform_int(i + 1)]);
    const double epoch_lr = o.sgd.lr_at(e, st.iteration);
    double loss_sum = 0.0;
    std::size_t errors = 0, seen = 0;
    for (std::size_t lo = 0; lo < n; lo += o.sgd.batch_size) {
      const std::size_t hi = std::min(n, lo + o.sgd.batch_size);
      if (hi - lo < 2) break;  // train-mode BN needs two samples
      const std::span<const std::size_t> idx(perm.data() + lo, hi - lo);
      Tensor x = gather(train_set.images, idx);
      x = o.augment ? augment(x, st.rng, o.augment_options)
                    : eval_view(x, eval_crop);
      const std::vector<int> y = gather(train_set.labels, idx);
      const double lr = o.sgd.lr_at(e, st.iteration);

      net.zero_grad();
      SoftmaxLossResult r;
      try {
        r = softmax_loss(net.forward(x, Phase::Train), y);
      } catch (const OverflowError& err) {
        flush();
        throw DivergenceError("train: epoch " + std::to_string(e + 1) +
                              " iteration " + std::to_string(st.iteration) +
                              ": " + err.what());
      }
      if (!(r.loss <= kDivergenceLoss)) {
        flush();
        throw DivergenceError("train: loss " + std::to_string(r.loss) +
                              " exceeds " + std::to_string(kDivergenceLoss) +
                              " at epoch " + std::to_string(e + 1) +
                              " iteration " + std::to_string(st.iteration));
      }
      net.backward(r.grad);
      try {
        sgd_step(groups, o.sgd, lr);
      } catch (const DivergenceError&) {
        flush();
        throw;
      }
      ++st.iteration;
      loss_sum += r.loss * static_cast<double>(idx.size());
      errors += r.errors;
      seen += idx.size();
    }
    const EvalResult te = evaluate(net, test_set, eval_batch, eval_crop);
    const double wall =
        o.record_wall_time
            ? std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                  .count()
            : 0.0;
    st.log.push_back({e + 1, epoch_lr, loss_sum / static_cast<double>(seen),
                      static_cast<double>(errors) / static_cast<double>(seen),
                      te.error, wall});
    st.epoch = e + 1;
    flush();
    if (!o.quiet) {
      const auto& r = st.log.back();
      std::cerr << "epoch " << r.epoch << " lr " << r.lr << " loss "
                << r.train_loss << " train_err " << r.train_err << " test_err "
                << r.test_err << '\n';
    }
    if (!o.out_dir.empty() &&
        (is_boundary(o.sgd, st.epoch) || st.epoch == o.sgd.epochs)) {
      const std::string path =
          (std::filesystem::path(o.out_dir) /
           ("epoch_" + std::to_string(st.epoch) + ".ckpt"))
              .string();
      save_checkpoint(path, net, groups, st, o.config_text, preproc);
      result.checkpoints.push_back(path);
    }
  }
  result.log = st.log;
  return result;
}

TrainResult run_training(const RunConfig& cfg, const std::string& resume_path,
                         bool verbose) {
  cfg.sgd.validate();
  if (cfg.data_dir.empty())
    throw InvalidArgument("config: data_dir is required for training");
  NetworkGraph net = build_from_spec(cfg.arch);
  if (cfg.identity_init) set_identity_mpelu_after_add(net);

  CifarSplits data = load_cifar10(cfg.data_dir, cfg.strict_cifar);
  if (cfg.train_subset > 0) data.train = data.train.head(cfg.train_subset);
  if (cfg.test_subset > 0) data.test = data.test.head(cfg.test_subset);
  Preprocessor pre;
  pre.kind = parse_preproc(cfg.preproc);
  pre.zca_eps = cfg.zca_eps;
  pre.fit(data.train.images);
  const Dataset train_set = pre.apply(data.train);
  const Dataset test_set = pre.apply(data.test);

  Rng init_rng(cfg.sgd.seed);
  const InitMethod method = parse_init(cfg.init);
  if (const auto* l = std::get_if<LsuvInit>(&method)) {
    init_network(net, GaussianInit{0.01}, init_rng);
    std::vector<std::size_t> idx(std::min(cfg.lsuv_probe, train_set.size()));
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const Tensor probe = eval_view(gather(train_set.images, idx), cfg.crop);
    lsuv_init(net, probe, l->tol, l->max_iter, l->orthonormal, &init_rng);
  } else {
    init_network(net, method, init_rng,
                 InitOptions{parse_fan_mode(cfg.fan_mode)});
  }

  TrainOptions o;
  o.sgd = cfg.sgd;
  o.augment = cfg.augment;
  o.augment_options.pad = cfg.pad;
  o.augment_options.crop = cfg.crop;
  o.record_wall_time = cfg.record_wall_time;
  o.out_dir = cfg.out_dir;
  o.config_text = cfg.to_text();
  o.arch = cfg.arch;
  o.quiet = !verbose;
  if (!resume_path.empty()) {
    const Checkpoint ckpt = read_checkpoint(resume_path);
    return train(net, train_set, test_set, o, pre, &ckpt);
  }
  return train(net, train_set, test_set, o, pre);
}

}  // namespace mpelu
