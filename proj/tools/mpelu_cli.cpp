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

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>

#include "mpelu/analysis.hpp"
#include "mpelu/errors.hpp"
#include "mpelu/init.hpp"
#include "mpelu/layers.hpp"
#include "mpelu/models.hpp"
#include "mpelu/train.hpp"

namespace {

using namespace mpelu;

enum Exit { kOk = 0, kValidation = 1, kDivergence = 2, kIo = 3 };

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot create " + path);
  return out;
}

void close_out(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

bool parse_on_off(const std::string& v) {
  if (v == "on") return true;
  if (v == "off") return false;
  throw InvalidArgument("--augment expects on or off, got '" + v + "'");
}

// train

struct TrainArgs {
  std::string config, resume, data_dir, preproc, augment, out_dir;
  int epochs = -1;
  bool verbose = false;
};

int cmd_train(const TrainArgs& a) {
  RunConfig cfg = load_run_config(a.config);
  if (!a.data_dir.empty()) cfg.data_dir = a.data_dir;
  if (!a.preproc.empty()) cfg.preproc = a.preproc;
  if (!a.augment.empty()) cfg.augment = parse_on_off(a.augment);
  if (!a.out_dir.empty()) cfg.out_dir = a.out_dir;
  if (a.epochs >= 0) cfg.sgd.epochs = a.epochs;
  const TrainResult r = run_training(cfg, a.resume, a.verbose);
  const EpochRecord& last = r.log.back();
  std::cout << "epochs " << last.epoch << " train_loss " << last.train_loss
            << " train_err " << last.train_err << " test_err " << last.test_err
            << "\nlog " << cfg.out_dir << "/log.csv\n";
  for (const auto& c : r.checkpoints) std::cout << "checkpoint " << c << '\n';
  return kOk;
}

// eval

struct EvalArgs {
  std::string checkpoint, data_dir;
  bool lenient = false;
  std::size_t subset = 0;
  std::size_t batch = 100;
};

int cmd_eval(const EvalArgs& a) {
  const Checkpoint ckpt = read_checkpoint(a.checkpoint);
  const RunConfig cfg = parse_run_config(ckpt.config_text);
  NetworkGraph net = build_from_spec(ckpt.arch);
  if (cfg.identity_init) set_identity_mpelu_after_add(net);
  apply_checkpoint(ckpt, net, nullptr);
  Preprocessor pre;
  pre.kind = parse_preproc(cfg.preproc);
  pre.zca_eps = cfg.zca_eps;
  pre.load_state(ckpt.preprocessing);
  CifarSplits data = load_cifar10(a.data_dir, !a.lenient);
  if (a.subset > 0) data.test = data.test.head(a.subset);
  const EvalResult r = evaluate(net, pre.apply(data.test), a.batch, cfg.crop);
  std::cout << std::setprecision(6) << "images " << data.test.size() << " loss "
            << r.loss << " top1_err " << r.error << '\n';
  return kOk;
}

// analyze-init

struct AnalyzeArgs {
  std::string arch, init = "taylor", out, fan_mode = "fan_in";
  std::size_t batch = 64, size = 32;
  std::uint64_t seed = 0;
};

// Nearest activation downstream of a weight layer, following BN and
// single-consumer chains.
int downstream_activation(const NetworkGraph& net, int node) {
  int cur = node;
  for (int hops = 0; hops < 4; ++hops) {
    const auto next = net.consumers(cur);
    if (next.size() != 1) return -1;
    cur = next[0];
    const Node& nd = net.node(cur);
    if (nd.layer && dynamic_cast<const ActivationLayer*>(nd.layer.get()))
      return cur;
    if (nd.layer && nd.layer->type() != "bn") return -1;
  }
  return -1;
}

int cmd_analyze(const AnalyzeArgs& a) {
  NetworkGraph net = build_from_spec(a.arch);
  Rng rng(a.seed);
  const InitMethod method = parse_init(a.init);
  std::size_t in_channels = 3;
  for (const auto& nd : net.nodes())
    if (auto* c = dynamic_cast<const Conv2d*>(nd.layer.get())) {
      in_channels = c->in_channels();
      break;
    }
  Tensor probe({a.batch, in_channels, a.size, a.size});
  Rng probe_rng(a.seed ^ 0x70726f6265ULL);
  gaussian_fill(probe, 0.0, 1.0, probe_rng);

  std::vector<InitRecord> records;
  const bool lsuv = std::holds_alternative<LsuvInit>(method);
  if (lsuv) {
    records = init_network(net, GaussianInit{0.01}, rng);
    const auto& l = std::get<LsuvInit>(method);
    lsuv_init(net, probe, l.tol, l.max_iter, l.orthonormal, &rng);
  } else {
    records = init_network(net, method, rng, InitOptions{parse_fan_mode(a.fan_mode)});
  }

  std::map<int, Moments> node_moments;
  net.forward(probe, Phase::Inference, [&](int node, const Tensor& out) {
    if (!all_finite(out))
      throw OverflowError("analyze-init: non-finite output at node " +
                          net.node(node).name);
    node_moments[node] = moments(out);
  });

  std::ofstream out = open_out(a.out);
  out << std::setprecision(10) << "layer_index,name,fan,init_std,act_mean,act_var\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const InitRecord& r = records[i];
    double std = r.std;
    if (lsuv) {
      auto params = net.node(r.node).layer->params();
      std = std::sqrt(moments(params[0]->value).variance);
    }
    const int act = downstream_activation(net, r.node);
    const Moments& m = node_moments.at(act >= 0 ? act : r.node);
    out << i << ',' << r.name << ',' << r.fan << ',' << std << ',' << m.mean
        << ',' << m.variance << '\n';
  }
  close_out(out, a.out);
  std::cout << "wrote " << records.size() << " layers to " << a.out << '\n';
  return kOk;
}

// residuals

struct ResidualArgs {
  double alpha = 1.0, beta = 1.0;
  std::size_t samples = 1000000;
  std::string out;
  std::uint64_t seed = 0;
  std::vector<double> thresholds;
};

int cmd_residuals(const ResidualArgs& a) {
  std::vector<double> th = a.thresholds;
  if (th.empty()) {
    const double unit = a.alpha * a.beta * a.beta;
    th = {0.01, 0.5 * unit, 2.0 * unit, 4.5 * unit};
    std::sort(th.begin(), th.end());
    th.erase(std::unique(th.begin(), th.end()), th.end());
  }
  Rng rng(a.seed);
  const StatsReport rep = residual_histogram(standard_normal_sampler(), a.samples,
                                             rng, a.alpha, a.beta, th);
  std::ofstream out = open_out(a.out);
  write_stats_csv(out, rep);
  close_out(out, a.out);
  for (const auto& b : rep.histogram)
    std::cout << "residual < " << b.threshold << ": " << b.fraction << '\n';
  return kOk;
}

// gradcheck

struct GradArgs {
  std::string arch, layer;
  std::size_t batch = 2, size = 8, coords = 20;
  std::uint64_t seed = 0;
  double tol = 1e-5;
};

int cmd_gradcheck(const GradArgs& a) {
  NetworkGraph net = build_from_spec(a.arch);
  Rng rng(a.seed);
  init_network(net, TaylorInit{}, rng);
  std::size_t in_channels = 3;
  for (const auto& nd : net.nodes())
    if (auto* c = dynamic_cast<const Conv2d*>(nd.layer.get())) {
      in_channels = c->in_channels();
      break;
    }
  Tensor x({a.batch, in_channels, a.size, a.size});
  gaussian_fill(x, 0.0, 1.0, rng);
  for (double& v : x.values())
    if (std::abs(v) < 1e-4) v = v < 0.0 ? -2e-4 : 2e-4;
  GradCheckOptions o;
  o.seed = a.seed;
  o.max_coords = a.coords;
  o.only = a.layer;
  o.check_input = a.layer.empty() || a.layer == "input";
  const GradCheckReport r = grad_check(net, x, o);
  std::cout << r.table() << "max relative error " << r.max_rel_error()
            << " over " << r.checked() << " coordinates (tolerance " << a.tol
            << ")\n";
  if (r.max_rel_error() >= a.tol) {
    std::cerr << "gradcheck: tolerance exceeded\n";
    return kValidation;
  }
  return kOk;
}

// params

int cmd_params(const std::string& arch, bool dump) {
  NetworkGraph net = build_from_spec(arch);
  if (dump) std::cout << architecture_dump(net);
  std::cout << arch << ' ' << count_params(net) << '\n';
  return kOk;
}

// synth-cifar

struct SynthArgs {
  std::string dir;
  std::size_t train = 5000, test = 1000;
  std::uint64_t seed = 0;
};

int cmd_synth(const SynthArgs& a) {
  write_synthetic_cifar(a.dir, a.train, a.test, a.seed);
  std::cout << "wrote " << a.train << " train and " << a.test
            << " test records to " << a.dir << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MPELU networks: training, initialisation analysis and checks"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train from a run-config file");
  train->add_option("--config", ta.config, "key = value run config")->required();
  train->add_option("--resume", ta.resume, "Checkpoint to continue from");
  train->add_option("--data-dir", ta.data_dir, "CIFAR-10 binary directory");
  train->add_option("--preproc", ta.preproc, "gcn-zca | standardize | none");
  train->add_option("--augment", ta.augment, "on | off");
  train->add_option("--out-dir", ta.out_dir, "Log and checkpoint directory");
  train->add_option("--epochs", ta.epochs, "Override the epoch count");
  train->add_flag("-v,--verbose", ta.verbose, "Print one line per epoch");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Single-view test error of a checkpoint");
  eval->add_option("--checkpoint", ea.checkpoint)->required();
  eval->add_option("--data-dir", ea.data_dir)->required();
  eval->add_option("--subset", ea.subset, "Evaluate the first N test images");
  eval->add_option("--batch", ea.batch);
  eval->add_flag("--lenient", ea.lenient, "Accept files with fewer than 10000 records");

  AnalyzeArgs aa;
  auto* analyze = app.add_subcommand("analyze-init", "Per-layer init std and signal moments");
  analyze->add_option("--arch", aa.arch)->required();
  analyze->add_option("--init", aa.init);
  analyze->add_option("--out", aa.out)->required();
  analyze->add_option("--fan-mode", aa.fan_mode, "fan_in | fan_out | average");
  analyze->add_option("--batch", aa.batch);
  analyze->add_option("--size", aa.size, "Probe height and width");
  analyze->add_option("--seed", aa.seed);

  ResidualArgs ra;
  auto* residuals = app.add_subcommand("residuals", "Taylor-residual histogram on N(0,1) input");
  residuals->add_option("--alpha", ra.alpha);
  residuals->add_option("--beta", ra.beta);
  residuals->add_option("--samples", ra.samples);
  residuals->add_option("--out", ra.out)->required();
  residuals->add_option("--seed", ra.seed);
  residuals->add_option("--thresholds", ra.thresholds)->delimiter(',');

  GradArgs ga;
  auto* grad = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  grad->add_option("--arch", ga.arch)->required();
  grad->add_option("--layer", ga.layer, "Parameter-name prefix, or 'input'");
  grad->add_option("--batch", ga.batch);
  grad->add_option("--size", ga.size);
  grad->add_option("--coords", ga.coords, "Coordinates per tensor");
  grad->add_option("--seed", ga.seed);
  grad->add_option("--tol", ga.tol);

  std::string params_arch;
  bool dump = false;
  auto* params = app.add_subcommand("params", "Parameter count of an architecture");
  params->add_option("--arch", params_arch)->required();
  params->add_flag("--dump", dump, "Print one line per node");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth-cifar", "Write a synthetic CIFAR-format dataset");
  synth->add_option("--dir", sa.dir)->required();
  synth->add_option("--train", sa.train);
  synth->add_option("--test", sa.test);
  synth->add_option("--seed", sa.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*train) return cmd_train(ta);
    if (*eval) return cmd_eval(ea);
    if (*analyze) return cmd_analyze(aa);
    if (*residuals) return cmd_residuals(ra);
    if (*grad) return cmd_gradcheck(ga);
    if (*params) return cmd_params(params_arch, dump);
    if (*synth) return cmd_synth(sa);
  } catch (const DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return kDivergence;
  } catch (const OverflowError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return kDivergence;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const FormatError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  }
  return kValidation;
}
