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

#include <cctype>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "mpelu/errors.hpp"
#include "mpelu/train.hpp"

namespace mpelu {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "off" || v == "no" || v == "0") return false;
  throw InvalidArgument("config: " + key + " expects a boolean, got '" + v + "'");
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw InvalidArgument("config: " + key + " expects a number, got '" + v + "'");
}

long to_long(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long d = std::stol(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw InvalidArgument("config: " + key + " expects an integer, got '" + v +
                        "'");
}

std::size_t to_size(const std::string& key, const std::string& v) {
  const long n = to_long(key, v);
  if (n < 0) throw InvalidArgument("config: " + key + " must be >= 0");
  return static_cast<std::size_t>(n);
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  RunConfig c;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"arch", [&](auto&, auto& v) { c.arch = v; }},
      {"init", [&](auto&, auto& v) { c.init = v; }},
      {"fan_mode", [&](auto&, auto& v) { c.fan_mode = v; }},
      {"data_dir", [&](auto&, auto& v) { c.data_dir = v; }},
      {"strict_cifar", [&](auto& k, auto& v) { c.strict_cifar = to_bool(k, v); }},
      {"train_subset", [&](auto& k, auto& v) { c.train_subset = to_size(k, v); }},
      {"test_subset", [&](auto& k, auto& v) { c.test_subset = to_size(k, v); }},
      {"preproc", [&](auto&, auto& v) { c.preproc = v; }},
      {"zca_eps", [&](auto& k, auto& v) { c.zca_eps = to_double(k, v); }},
      {"augment", [&](auto& k, auto& v) { c.augment = to_bool(k, v); }},
      {"pad", [&](auto& k, auto& v) { c.pad = to_size(k, v); }},
      {"crop", [&](auto& k, auto& v) { c.crop = to_size(k, v); }},
      {"identity_init", [&](auto& k, auto& v) { c.identity_init = to_bool(k, v); }},
      {"lsuv_probe", [&](auto& k, auto& v) { c.lsuv_probe = to_size(k, v); }},
      {"base_lr", [&](auto& k, auto& v) { c.sgd.base_lr = to_double(k, v); }},
      {"momentum", [&](auto& k, auto& v) { c.sgd.momentum = to_double(k, v); }},
      {"weight_decay",
       [&](auto& k, auto& v) { c.sgd.weight_decay = to_double(k, v); }},
      {"schedule", [&](auto&, auto& v) { c.sgd.schedule = parse_schedule(v); }},
      {"schedule_unit",
       [&](auto& k, auto& v) {
         if (v == "epoch") c.sgd.schedule_unit = ScheduleUnit::Epoch;
         else if (v == "iteration") c.sgd.schedule_unit = ScheduleUnit::Iteration;
         else
           throw InvalidArgument("config: " + k +
                                 " expects epoch or iteration, got '" + v + "'");
       }},
      {"batch_size", [&](auto& k, auto& v) { c.sgd.batch_size = to_size(k, v); }},
      {"epochs",
       [&](auto& k, auto& v) { c.sgd.epochs = static_cast<int>(to_long(k, v)); }},
      {"seed",
       [&](auto& k, auto& v) {
         c.sgd.seed = static_cast<std::uint64_t>(to_size(k, v));
       }},
      {"warmup_lr", [&](auto& k, auto& v) { c.sgd.warmup_lr = to_double(k, v); }},
      {"warmup_epochs",
       [&](auto& k, auto& v) {
         c.sgd.warmup_epochs = static_cast<int>(to_long(k, v));
       }},
      {"out_dir", [&](auto&, auto& v) { c.out_dir = v; }},
      {"record_wall_time",
       [&](auto& k, auto& v) { c.record_wall_time = to_bool(k, v); }},
  };

  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidArgument("config line " + std::to_string(lineno) +
                            ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end())
      throw InvalidArgument("config line " + std::to_string(lineno) +
                            ": unknown key '" + key + "'");
    it->second(key, value);
  }
  c.sgd.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  os.precision(17);
  auto b = [](bool v) { return v ? "true" : "false"; };
  os << "arch = " << arch << '\n'
     << "init = " << init << '\n'
     << "fan_mode = " << fan_mode << '\n'
     << "data_dir = " << data_dir << '\n'
     << "strict_cifar = " << b(strict_cifar) << '\n'
     << "train_subset = " << train_subset << '\n'
     << "test_subset = " << test_subset << '\n'
     << "preproc = " << preproc << '\n'
     << "zca_eps = " << zca_eps << '\n'
     << "augment = " << b(augment) << '\n'
     << "pad = " << pad << '\n'
     << "crop = " << crop << '\n'
     << "identity_init = " << b(identity_init) << '\n'
     << "lsuv_probe = " << lsuv_probe << '\n'
     << "base_lr = " << sgd.base_lr << '\n'
     << "momentum = " << sgd.momentum << '\n'
     << "weight_decay = " << sgd.weight_decay << '\n'
     << "schedule = " << format_schedule(sgd.schedule) << '\n'
     << "schedule_unit = "
     << (sgd.schedule_unit == ScheduleUnit::Epoch ? "epoch" : "iteration") << '\n'
     << "batch_size = " << sgd.batch_size << '\n'
     << "epochs = " << sgd.epochs << '\n'
     << "seed = " << sgd.seed << '\n'
     << "warmup_lr = " << sgd.warmup_lr << '\n'
     << "warmup_epochs = " << sgd.warmup_epochs << '\n'
     << "out_dir = " << out_dir << '\n'
     << "record_wall_time = " << b(record_wall_time) << '\n';
  return os.str();
}

}  // namespace mpelu
