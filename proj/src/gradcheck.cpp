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
#include <iomanip>
#include <numeric>
#include <sstream>

#include "mpelu/analysis.hpp"
#include "mpelu/errors.hpp"
#include "mpelu/layers.hpp"

namespace mpelu {

namespace {

struct Target {
  std::string name;
  Tensor* value;
  const Tensor* grad;
};

// Uniform view over a whole network or a single layer.
struct Model {
  std::function<Tensor(const Tensor&)> forward;
  std::function<Tensor(const Tensor&)> backward;
  std::function<void()> zero_grad;
  std::function<std::vector<std::int64_t>()> regime;
  std::vector<std::pair<std::string, Param*>> params;
  std::vector<Tensor*> buffers;
};

class LossHeadEval {
 public:
  LossHeadEval(const GradCheckOptions& o, const Tensor& out)
      : head_(o.head), labels_(o.labels) {
    Rng rng(o.seed ^ 0x9e3779b97f4a7c15ULL);
    if (head_ == LossHead::Projection) {
      r_ = Tensor(out.shape());
      gaussian_fill(r_, 0.0, 1.0, rng);
    } else if (head_ == LossHead::SoftmaxCE) {
      if (out.rank() != 2)
        throw InvalidArgument("grad_check: softmax head needs [N, K] output");
      if (labels_.empty())
        for (std::size_t n = 0; n < out.dim(0); ++n)
          labels_.push_back(static_cast<int>(rng.uniform_int(out.dim(1))));
    }
  }

  Tensor grad(const Tensor& out) const {
    switch (head_) {
      case LossHead::Projection: return r_;
      case LossHead::Quadratic: return out;
      case LossHead::SoftmaxCE: return softmax_loss(out, labels_).grad;
    }
    return {};
  }

  double value(const Tensor& out) const {
    switch (head_) {
      case LossHead::Projection: return dot(out, r_);
      case LossHead::Quadratic: return 0.5 * dot(out, out);
      case LossHead::SoftmaxCE: return softmax_loss(out, labels_).loss;
    }
    return 0.0;
  }

  /// (L(plus) - L(minus)), formed elementwise where the head allows it to
  /// avoid cancellation in two large sums.
  double difference(const Tensor& plus, const Tensor& minus) const {
    double d = 0.0;
    switch (head_) {
      case LossHead::Projection:
        for (std::size_t i = 0; i < plus.numel(); ++i)
          d += (plus[i] - minus[i]) * r_[i];
        break;
      case LossHead::Quadratic:
        for (std::size_t i = 0; i < plus.numel(); ++i)
          d += 0.5 * (plus[i] - minus[i]) * (plus[i] + minus[i]);
        break;
      case LossHead::SoftmaxCE:
        d = value(plus) - value(minus);
        break;
    }
    if (!std::isfinite(d)) throw OverflowError("grad_check: non-finite loss");
    return d;
  }

 private:
  LossHead head_;
  std::vector<int> labels_;
  Tensor r_;
};

std::vector<std::size_t> pick_coords(std::size_t numel, std::size_t max_coords,
                                     Rng& rng) {
  std::vector<std::size_t> idx(numel);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (numel <= max_coords) return idx;
  for (std::size_t i = 0; i < max_coords; ++i)
    std::swap(idx[i], idx[i + rng.uniform_int(numel - i)]);
  idx.resize(max_coords);
  std::sort(idx.begin(), idx.end());
  return idx;
}

GradCheckReport run(Model& m, const Tensor& input, const GradCheckOptions& o) {
  if (!(o.eps > 0.0)) throw InvalidArgument("grad_check: eps must be > 0");
  if (o.max_coords == 0)
    throw InvalidArgument("grad_check: max_coords must be >= 1");

  std::vector<Tensor> saved_buffers;
  for (Tensor* b : m.buffers) saved_buffers.push_back(*b);
  auto restore = [&] {
    for (std::size_t i = 0; i < m.buffers.size(); ++i)
      *m.buffers[i] = saved_buffers[i];
  };

  Tensor x = input;
  m.zero_grad();
  const Tensor out = m.forward(x);
  if (!all_finite(out)) throw OverflowError("grad_check: non-finite output");
  const LossHeadEval head(o, out);
  if (!std::isfinite(head.value(out)))
    throw OverflowError("grad_check: non-finite loss");
  const auto base_regime = m.regime();
  const Tensor grad_in = m.backward(head.grad(out));

  std::vector<Target> targets;
  if (o.check_input && (o.only.empty() || o.only == "input"))
    targets.push_back({"input", &x, &grad_in});
  // Parameter grads are snapshotted because probes re-run forward only.
  std::vector<Tensor> grads;
  grads.reserve(m.params.size());
  for (auto& [name, p] : m.params) grads.push_back(p->grad);
  for (std::size_t i = 0; i < m.params.size(); ++i)
    if (o.only.empty() || m.params[i].first.rfind(o.only, 0) == 0)
      targets.push_back({m.params[i].first, &m.params[i].second->value,
                         &grads[i]});
  if (targets.empty())
    throw InvalidArgument("grad_check: nothing matches '" + o.only + "'");

  Rng rng(o.seed);
  GradCheckReport report;
  for (Target& t : targets) {
    GradCheckRecord rec;
    rec.name = t.name;
    rec.eps = o.eps;
    for (std::size_t i : pick_coords(t.value->numel(), o.max_coords, rng)) {
      double& v = (*t.value)[i];
      const double keep = v;
      v = keep + o.eps;
      restore();
      const Tensor plus = m.forward(x);
      const bool same_plus = m.regime() == base_regime;
      v = keep - o.eps;
      restore();
      const Tensor minus = m.forward(x);
      const bool same_minus = m.regime() == base_regime;
      v = keep;
      if (!same_plus || !same_minus) {
        ++rec.skipped;
        continue;
      }
      const double numeric = head.difference(plus, minus) / (2.0 * o.eps);
      const double analytic = (*t.grad)[i];
      const double err = relative_error(analytic, numeric);
      if (rec.checked == 0 || err > rec.max_rel_error) {
        rec.max_rel_error = err;
        rec.argmax = i;
        rec.analytic = analytic;
        rec.numeric = numeric;
      }
      ++rec.checked;
    }
    report.records.push_back(rec);
  }
  restore();
  return report;
}

}  // namespace

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), 1e-12});
}

double GradCheckReport::max_rel_error() const {
  double m = 0.0;
  for (const auto& r : records) m = std::max(m, r.max_rel_error);
  return m;
}

std::size_t GradCheckReport::checked() const {
  std::size_t n = 0;
  for (const auto& r : records) n += r.checked;
  return n;
}

std::string GradCheckReport::table() const {
  std::ostringstream os;
  os << std::left << std::setw(36) << "tensor" << std::setw(14) << "max_rel_err"
     << std::setw(10) << "argmax" << std::setw(9) << "checked" << std::setw(9)
     << "skipped" << "eps\n";
  for (const auto& r : records)
    os << std::left << std::setw(36) << r.name << std::setw(14)
       << std::setprecision(3) << std::scientific << r.max_rel_error
       << std::defaultfloat << std::setw(10) << r.argmax << std::setw(9)
       << r.checked << std::setw(9) << r.skipped << r.eps << '\n';
  return os.str();
}

GradCheckReport grad_check(NetworkGraph& net, const Tensor& input,
                           const GradCheckOptions& options) {
  Model m;
  m.forward = [&](const Tensor& x) { return net.forward(x, options.phase); };
  m.backward = [&](const Tensor& g) { return net.backward(g); };
  m.zero_grad = [&] { net.zero_grad(); };
  m.regime = [&] { return net.regime(); };
  for (auto& p : net.params()) m.params.emplace_back(p.name, p.param);
  for (auto& b : net.buffers()) m.buffers.push_back(b.tensor);
  return run(m, input, options);
}

GradCheckReport grad_check(Layer& layer, const Tensor& input,
                           const GradCheckOptions& options) {
  Model m;
  m.forward = [&](const Tensor& x) { return layer.forward(x, options.phase); };
  m.backward = [&](const Tensor& g) { return layer.backward(g); };
  m.zero_grad = [&] { layer.zero_grad(); };
  m.regime = [&] {
    std::vector<std::int64_t> sig;
    layer.regime(sig);
    return sig;
  };
  for (Param* p : layer.params()) m.params.emplace_back(p->name, p);
  for (auto& [name, t] : layer.buffers()) m.buffers.push_back(t);
  return run(m, input, options);
}

}  // namespace mpelu
