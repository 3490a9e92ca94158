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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mpelu/errors.hpp"
#include "mpelu/init.hpp"
#include "mpelu/layers.hpp"
#include "mpelu/models.hpp"
#include "mpelu/train.hpp"
#include "oracles.hpp"

using namespace mpelu;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mpelu_train_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Param make_param(double value, double grad, double lr_mult = 1.0,
                 double wd_mult = 1.0) {
  Param p("p", Tensor({1}, value));
  p.grad[0] = grad;
  p.lr_mult = lr_mult;
  p.wd_mult = wd_mult;
  return p;
}

SgdConfig plain_sgd(double momentum, double wd) {
  SgdConfig c;
  c.base_lr = 0.1;
  c.momentum = momentum;
  c.weight_decay = wd;
  return c;
}

RunConfig tiny_run(const fs::path& data, const fs::path& out) {
  RunConfig c;
  c.arch = "plain:2:4:mpelu";
  c.init = "taylor";
  c.data_dir = data.string();
  c.strict_cifar = false;
  c.train_subset = 40;
  c.test_subset = 20;
  c.sgd.batch_size = 16;
  c.sgd.epochs = 3;
  c.sgd.base_lr = 0.05;
  c.sgd.schedule = {{2, 0.1}};
  c.sgd.seed = 11;
  c.out_dir = out.string();
  c.record_wall_time = false;
  return c;
}

}  // namespace

TEST_CASE("sgd step semantics") {
  Param p = make_param(1.5, 0.0);
  std::vector<ParamGroup> g{{"p", &p, Tensor({1})}};
  sgd_step(g, plain_sgd(0.9, 0.0), 0.1);
  CHECK(p.value[0] == 1.5);

  Param q = make_param(1.0, 1.0, 5.0);
  std::vector<ParamGroup> gq{{"q", &q, Tensor({1})}};
  sgd_step(gq, plain_sgd(0.0, 0.0), 0.1);
  CHECK(q.value[0] == doctest::Approx(1.0 - 0.1 * 5.0));

  // With momentum the velocity accumulates.
  Param m = make_param(0.0, 1.0);
  std::vector<ParamGroup> gm{{"m", &m, Tensor({1})}};
  sgd_step(gm, plain_sgd(0.9, 0.0), 0.1);
  sgd_step(gm, plain_sgd(0.9, 0.0), 0.1);
  CHECK(m.value[0] == doctest::Approx(-0.1 - 0.1 * 1.9));
}

TEST_CASE("weight-decay multiplier zero removes the decay term exactly") {
  Param decayed = make_param(2.0, 0.0, 1.0, 1.0);
  Param kept = make_param(2.0, 0.0, 1.0, 0.0);
  std::vector<ParamGroup> g{{"a", &decayed, Tensor({1})}, {"b", &kept, Tensor({1})}};
  sgd_step(g, plain_sgd(0.0, 1e-4), 0.1);
  CHECK(kept.value[0] == 2.0);
  CHECK(g[1].velocity[0] == 0.0);
  CHECK(g[0].velocity[0] == 1e-4 * 2.0);
  CHECK(decayed.value[0] == 2.0 - 0.1 * (1e-4 * 2.0));
}

TEST_CASE("learning-rate multiplier scales the step by exactly five") {
  NetworkGraph net = build_plain_stack(1, 4, ActivationKind::mpelu(), PlainOptions{});
  Rng rng(1);
  init_network(net, TaylorInit{}, rng);
  net.zero_grad();
  const Tensor x = oracle::random({4, 3, 4, 4}, 2);
  net.forward(x, Phase::Train);
  net.backward(oracle::random({4, 4, 4, 4}, 3));
  std::vector<ParamGroup> groups = make_param_groups(net);
  std::vector<Tensor> before;
  for (auto& gr : groups) before.push_back(gr.param->value);
  sgd_step(groups, plain_sgd(0.0, 0.0), 0.01);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const Param& p = *groups[i].param;
    for (std::size_t k = 0; k < p.value.numel(); ++k) {
      const double step = before[i][k] - p.value[k];
      if (p.positive && p.value[k] == kMinBeta) continue;
      CHECK(step == doctest::Approx(p.lr_mult * 0.01 * p.grad[k]).epsilon(1e-12));
    }
  }
  CHECK(groups.back().param->lr_mult == 5.0);
}

TEST_CASE("beta is clamped and bad gradients abort before any update") {
  Param beta = make_param(0.01, 10.0);
  beta.positive = true;
  std::vector<ParamGroup> g{{"beta", &beta, Tensor({1})}};
  sgd_step(g, plain_sgd(0.0, 0.0), 0.1);
  CHECK(beta.value[0] == kMinBeta);

  Param ok = make_param(1.0, 1.0);
  Param bad = make_param(1.0, std::nan(""));
  std::vector<ParamGroup> gb{{"ok", &ok, Tensor({1})}, {"bad", &bad, Tensor({1})}};
  CHECK_THROWS_WITH_AS(sgd_step(gb, plain_sgd(0.9, 0.0), 0.1),
                       doctest::Contains("bad"), DivergenceError);
  CHECK(ok.value[0] == 1.0);
}

TEST_CASE("schedules") {
  SgdConfig c;
  c.schedule = parse_schedule("81:0.1, 122:0.1");
  CHECK(format_schedule(c.schedule) == "81:0.10000000000000001,122:0.10000000000000001");
  CHECK(c.lr_at(0, 0) == 0.1);
  CHECK(c.lr_at(80, 0) == 0.1);
  CHECK(c.lr_at(81, 0) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(c.lr_at(121, 0) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(c.lr_at(122, 0) == doctest::Approx(0.001).epsilon(1e-15));
  c.warmup_epochs = 1;
  c.warmup_lr = 0.01;
  CHECK(c.lr_at(0, 0) == 0.01);
  CHECK(c.lr_at(1, 0) == 0.1);
  c.schedule = parse_schedule("122:0.1,81:0.1");
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  CHECK_THROWS_AS(parse_schedule("81"), InvalidArgument);
  SgdConfig bad;
  bad.momentum = 1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = SgdConfig{};
  bad.base_lr = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("run config text") {
  const RunConfig c = parse_run_config(
      "# comment\narch = resnet:20:nopre-no-bn\nseed = 9 # trailing\n"
      "schedule = 2:0.5\naugment = off\n");
  CHECK(c.arch == "resnet:20:nopre-no-bn");
  CHECK(c.sgd.seed == 9);
  CHECK_FALSE(c.augment);
  CHECK(parse_run_config(c.to_text()).to_text() == c.to_text());
  CHECK_THROWS_WITH_AS(parse_run_config("colour = blue"), doctest::Contains("colour"),
                       InvalidArgument);
  CHECK_THROWS_AS(parse_run_config("augment = maybe"), InvalidArgument);
  CHECK_THROWS_AS(parse_run_config("batch_size = -3"), InvalidArgument);
  CHECK_THROWS_AS(parse_run_config("just words"), InvalidArgument);
  CHECK_THROWS_AS(load_run_config("/nonexistent/run.cfg"), IoError);
}

TEST_CASE("checkpoint round trip") {
  const fs::path dir = scratch("ckpt");
  NetworkGraph net = build_resnet(20, BlockVariant::MpeluNonBottleneck);
  Rng rng(3);
  init_network(net, TaylorInit{}, rng);
  net.forward(oracle::random({2, 3, 32, 32}, 4), Phase::Train);  // moves BN stats
  auto groups = make_param_groups(net);
  for (auto& g : groups) gaussian_fill(g.velocity, 0.0, 1.0, rng);
  TrainState st;
  st.epoch = 4;
  st.iteration = 77;
  st.rng = Rng(99);
  st.rng.normal();
  st.log = {{0, 0.1, 2.3, 0.9, 0.9, 0.0}, {1, 0.1, 1.7, 0.6, 0.65, 0.0}};
  Preprocessor pre;
  pre.kind = Preproc::Standardize;
  pre.fit(oracle::random({4, 3, 2, 2}, 5));
  const std::string path = (dir / "a.ckpt").string();
  save_checkpoint(path, net, groups, st, "seed = 1\n", pre);

  const Checkpoint c = read_checkpoint(path);
  CHECK(c.state.epoch == 4);
  CHECK(c.state.iteration == 77);
  CHECK(c.config_text == "seed = 1\n");
  CHECK(c.state.log.size() == 2);
  CHECK(c.state.log[1].train_loss == 1.7);
  Rng a = c.state.rng, b = st.rng;
  CHECK(a.normal() == b.normal());

  NetworkGraph other = build_resnet(20, BlockVariant::MpeluNonBottleneck);
  auto og = make_param_groups(other);
  apply_checkpoint(c, other, &og);
  auto p1 = net.params(), p2 = other.params();
  for (std::size_t i = 0; i < p1.size(); ++i) CHECK(p1[i].param->value == p2[i].param->value);
  auto b1 = net.buffers(), b2 = other.buffers();
  for (std::size_t i = 0; i < b1.size(); ++i) CHECK(*b1[i].tensor == *b2[i].tensor);
  for (std::size_t i = 0; i < og.size(); ++i) CHECK(og[i].velocity == groups[i].velocity);
  Preprocessor back;
  back.kind = Preproc::Standardize;
  back.load_state(c.preprocessing);
  CHECK(back.standardizer.mean == pre.standardizer.mean);

  const std::string again = (dir / "b.ckpt").string();
  save_checkpoint(again, other, og, c.state, c.config_text, back);
  CHECK(slurp(path) == slurp(again));

  NetworkGraph wrong = build_resnet(20, BlockVariant::NonBottleneck);
  CHECK_THROWS_AS(apply_checkpoint(c, wrong, nullptr), SchemaError);

  std::string bytes = slurp(path);
  bytes[0] = 'X';
  std::ofstream(dir / "bad.ckpt", std::ios::binary) << bytes;
  CHECK_THROWS_AS(read_checkpoint((dir / "bad.ckpt").string()), FormatError);
  CHECK_THROWS_AS(read_checkpoint((dir / "none.ckpt").string()), IoError);
}

TEST_CASE("evaluate") {
  Dataset balanced;
  balanced.images = oracle::random({300, 3, 8, 8}, 6);
  for (int i = 0; i < 300; ++i) balanced.labels.push_back(i % 10);
  PlainOptions po;
  po.classes = 10;
  NetworkGraph net = build_plain_stack(2, 8, ActivationKind::mpelu(), po);
  Rng rng(7);
  init_network(net, TaylorInit{}, rng);
  const EvalResult r = evaluate(net, balanced, 64);
  CHECK(std::abs(r.error - 0.9) <= 0.03 + 1e-12);
  const EvalResult again = evaluate(net, balanced, 64);
  CHECK(again.loss == r.loss);
  CHECK(again.error == r.error);

  // A dense layer that copies one-hot inputs memorises them perfectly.
  Dataset toy;
  toy.images = Tensor({4, 4, 1, 1});
  for (std::size_t i = 0; i < 4; ++i) toy.images[i * 4 + i] = 1.0;
  toy.labels = {0, 1, 2, 3};
  toy.classes = 4;
  NetworkGraph id;
  id.add("fc", std::make_unique<Dense>(4, 4, false), NetworkGraph::kGraphInput);
  auto& w = dynamic_cast<Dense&>(*id.node(0).layer).weight().value;
  for (std::size_t i = 0; i < 4; ++i) w[i * 4 + i] = 5.0;
  CHECK(evaluate(id, toy, 3).error == 0.0);
  CHECK_THROWS_AS(evaluate(id, Dataset{}, 3), InvalidArgument);
}

TEST_CASE("training runs are reproducible and resumable") {
  const fs::path root = scratch("runs");
  write_synthetic_cifar((root / "data").string(), 40, 20, 1);

  RunConfig zero = tiny_run(root / "data", root / "zero");
  zero.sgd.epochs = 0;
  CHECK(run_training(zero).log.size() == 1);

  const TrainResult a = run_training(tiny_run(root / "data", root / "a"));
  const TrainResult b = run_training(tiny_run(root / "data", root / "b"));
  REQUIRE(a.log.size() == 4);
  CHECK(slurp(root / "a" / "log.csv") == slurp(root / "b" / "log.csv"));
  CHECK(a.checkpoints.size() == 2);
  CHECK(fs::exists(root / "a" / "epoch_2.ckpt"));
  CHECK(a.log[3].lr == doctest::Approx(0.005));
  CHECK(a.log[1].wall_seconds == 0.0);

  const TrainResult r = run_training(tiny_run(root / "data", root / "r"),
                                     (root / "a" / "epoch_2.ckpt").string());
  CHECK(slurp(root / "a" / "log.csv") == slurp(root / "r" / "log.csv"));
  const Checkpoint ca = read_checkpoint((root / "a" / "epoch_3.ckpt").string());
  const Checkpoint cr = read_checkpoint((root / "r" / "epoch_3.ckpt").string());
  REQUIRE(ca.tensors.size() == cr.tensors.size());
  for (std::size_t i = 0; i < ca.tensors.size(); ++i)
    CHECK(ca.tensors[i].second == cr.tensors[i].second);
  CHECK(r.log.size() == a.log.size());

  RunConfig wild = tiny_run(root / "data", root / "wild");
  wild.sgd.base_lr = 1e6;
  wild.init = "gaussian:10";
  CHECK_THROWS_AS(run_training(wild), DivergenceError);
  CHECK(fs::exists(root / "wild" / "log.csv"));

  RunConfig nodata = tiny_run(root / "missing", root / "x");
  CHECK_THROWS_AS(run_training(nodata), IoError);
}
