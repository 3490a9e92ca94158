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

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mpelu/activations.hpp"
#include "mpelu/errors.hpp"
#include "mpelu/train.hpp"

namespace mpelu {

void SgdConfig::validate() const {
  if (!(base_lr > 0.0)) throw InvalidArgument("sgd: base_lr must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0))
    throw InvalidArgument("sgd: momentum must be in [0, 1)");
  if (!(weight_decay >= 0.0))
    throw InvalidArgument("sgd: weight_decay must be >= 0");
  if (batch_size == 0) throw InvalidArgument("sgd: batch_size must be >= 1");
  if (epochs < 0) throw InvalidArgument("sgd: epochs must be >= 0");
  if (warmup_epochs < 0)
    throw InvalidArgument("sgd: warmup_epochs must be >= 0");
  if (warmup_epochs > 0 && !(warmup_lr > 0.0))
    throw InvalidArgument("sgd: warmup_lr must be > 0 when warming up");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (!(schedule[i].factor > 0.0))
      throw InvalidArgument("sgd: schedule factors must be > 0");
    if (schedule[i].boundary < 0)
      throw InvalidArgument("sgd: schedule boundaries must be >= 0");
    if (i > 0 && schedule[i].boundary <= schedule[i - 1].boundary)
      throw InvalidArgument("sgd: schedule boundaries must be strictly increasing");
  }
}

double SgdConfig::lr_at(int epoch, long iteration) const {
  if (epoch < warmup_epochs) return warmup_lr;
  const long t = schedule_unit == ScheduleUnit::Epoch ? epoch : iteration;
  double lr = base_lr;
  for (const auto& s : schedule)
    if (t >= s.boundary) lr *= s.factor;
  return lr;
}

std::vector<ScheduleStep> parse_schedule(const std::string& text) {
  std::vector<ScheduleStep> out;
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw InvalidArgument("schedule: expected boundary:factor, got '" + item +
                            "'");
    try {
      out.push_back({std::stol(item.substr(0, colon)),
                     std::stod(item.substr(colon + 1))});
    } catch (const std::exception&) {
      throw InvalidArgument("schedule: bad entry '" + item + "'");
    }
  }
  return out;
}

std::string format_schedule(const std::vector<ScheduleStep>& schedule) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < schedule.size(); ++i)
    os << (i ? "," : "") << schedule[i].boundary << ':' << schedule[i].factor;
  return os.str();
}

std::vector<ParamGroup> make_param_groups(NetworkGraph& net) {
  std::vector<ParamGroup> groups;
  for (auto& p : net.params())
    groups.push_back({p.name, p.param, Tensor(p.param->value.shape())});
  return groups;
}

void sgd_step(std::vector<ParamGroup>& groups, const SgdConfig& cfg,
              double lr) {
  for (const auto& g : groups)
    if (!all_finite(g.param->grad))
      throw DivergenceError("sgd: non-finite gradient in " + g.name);
  for (auto& g : groups) {
    Param& p = *g.param;
    const double wd = p.wd_mult * cfg.weight_decay;
    const double step = p.lr_mult * lr;
    double* theta = p.value.data();
    const double* grad = p.grad.data();
    double* v = g.velocity.data();
    for (std::size_t i = 0; i < p.value.numel(); ++i) {
      const double d = grad[i] + wd * theta[i];
      v[i] = cfg.momentum * v[i] + d;
      theta[i] -= step * v[i];
    }
    if (p.positive)
      for (double& t : p.value.values()) t = std::max(t, kMinBeta);
  }
}

}  // namespace mpelu
