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

#include "mpelu/activations.hpp"

#include <cmath>
#include <sstream>

#include "mpelu/errors.hpp"

namespace mpelu {

namespace {

// Iteration geometry of an [N, C, ...] tensor.
struct Layout {
  std::size_t batch = 1;
  std::size_t channels = 1;
  std::size_t inner = 1;
};

Layout layout_of(const Tensor& t) {
  if (t.rank() < 2)
    throw InvalidArgument("activation: expected [N, C, ...] input, got " +
                          shape_str(t.shape()));
  Layout l;
  l.batch = t.dim(0);
  l.channels = t.dim(1);
  for (std::size_t i = 2; i < t.rank(); ++i) l.inner *= t.dim(i);
  return l;
}

std::size_t param_index(const ActivationLayerState& s, std::size_t c) {
  return s.mode == ParamMode::ChannelShared ? 0 : c;
}

void check_channels(const ActivationLayerState& s, const Layout& l) {
  const std::size_t m = s.alpha.value.numel();
  const std::size_t want = s.mode == ParamMode::ChannelShared ? 1 : l.channels;
  if (m != want)
    throw InvalidArgument("activation: layer holds " + std::to_string(m) +
                          " parameters but input has " +
                          std::to_string(l.channels) + " channels (" +
                          to_string(s.mode) + ")");
}

}  // namespace

std::string ActivationKind::name() const {
  std::ostringstream os;
  switch (type) {
    case ActivationType::ReLU: return "relu";
    case ActivationType::LReLU: os << "lrelu=" << slope; return os.str();
    case ActivationType::PReLU: return "prelu";
    case ActivationType::ELU: os << "elu=" << alpha0; return os.str();
    case ActivationType::MPELU: return "mpelu";
  }
  return "?";
}

ActivationKind ActivationKind::parse(const std::string& text) {
  const auto eq = text.find('=');
  const std::string head = text.substr(0, eq);
  std::optional<double> arg;
  if (eq != std::string::npos) {
    try {
      arg = std::stod(text.substr(eq + 1));
    } catch (const std::exception&) {
      throw InvalidArgument("activation: bad numeric argument in '" + text +
                            "'");
    }
  }
  if (head == "relu") return relu();
  if (head == "lrelu") return lrelu(arg.value_or(0.01));
  if (head == "prelu") return prelu();
  if (head == "elu") return elu(arg.value_or(1.0));
  if (head == "mpelu") return mpelu();
  throw InvalidArgument("unknown activation '" + text +
                        "' (expected relu, lrelu[=a], prelu, elu[=a], mpelu)");
}

const char* to_string(ParamMode mode) {
  return mode == ParamMode::ChannelShared ? "shared" : "channel";
}

ActivationLayerState ActivationLayerState::make(ActivationType type,
                                                ParamMode mode,
                                                std::size_t channels,
                                                double alpha0, double beta0,
                                                double lr_mult,
                                                double wd_mult) {
  ActivationLayerState s;
  s.mode = mode;
  const std::size_t m = mode == ParamMode::ChannelShared ? 1 : channels;
  if (type == ActivationType::PReLU || type == ActivationType::MPELU) {
    s.alpha = Param("alpha", Tensor({m}, alpha0));
    s.alpha.lr_mult = lr_mult;
    s.alpha.wd_mult = wd_mult;
  }
  if (type == ActivationType::MPELU) {
    if (!(beta0 > 0.0))
      throw InvalidArgument("mpelu: beta must be > 0, got " +
                            std::to_string(beta0));
    s.beta = Param("beta", Tensor({m}, beta0));
    s.beta.lr_mult = lr_mult;
    s.beta.wd_mult = wd_mult;
    s.beta.positive = true;
  }
  return s;
}

double mpelu_value(double y, double alpha, double beta) {
  return y > 0.0 ? y : alpha * std::expm1(beta * y);
}

Tensor mpelu_forward(const Tensor& y, ActivationLayerState& state) {
  const Layout l = layout_of(y);
  check_channels(state, l);
  for (double b : state.beta.value.values())
    if (!(b > 0.0))
      throw InvalidArgument("mpelu: beta must be > 0, got " +
                            std::to_string(b));
  Tensor out(y.shape());
  const double* in = y.data();
  double* o = out.data();
  for (std::size_t n = 0; n < l.batch; ++n) {
    for (std::size_t c = 0; c < l.channels; ++c) {
      const std::size_t p = param_index(state, c);
      const double a = state.alpha.value[p];
      const double b = state.beta.value[p];
      const std::size_t base = (n * l.channels + c) * l.inner;
      for (std::size_t s = 0; s < l.inner; ++s) {
        const double v = in[base + s];
        o[base + s] = v > 0.0 ? v : a * std::expm1(b * v);
      }
    }
  }
  state.saved_output = out;
  state.has_saved_output = true;
  return out;
}

ActivationGrads mpelu_backward(const ActivationLayerState& state,
                               const Tensor& y, const Tensor& grad_out) {
  if (!state.has_saved_output)
    throw StateError("mpelu_backward: no saved output; call forward first");
  if (y.shape() != grad_out.shape() ||
      y.shape() != state.saved_output.shape())
    throw InvalidArgument("mpelu_backward: shape mismatch between input " +
                          shape_str(y.shape()) + ", grad " +
                          shape_str(grad_out.shape()) + " and saved output " +
                          shape_str(state.saved_output.shape()));
  const Layout l = layout_of(y);
  check_channels(state, l);
  const std::size_t m = state.size();
  ActivationGrads g{Tensor(y.shape()), Tensor({m}), Tensor({m})};
  const double* in = y.data();
  const double* f = state.saved_output.data();
  const double* go = grad_out.data();
  double* gi = g.grad_in.data();
  for (std::size_t n = 0; n < l.batch; ++n) {
    for (std::size_t c = 0; c < l.channels; ++c) {
      const std::size_t p = param_index(state, c);
      const double a = state.alpha.value[p];
      const double b = state.beta.value[p];
      const std::size_t base = (n * l.channels + c) * l.inner;
      double da = 0.0, db = 0.0;
      for (std::size_t s = 0; s < l.inner; ++s) {
        const std::size_t i = base + s;
        if (in[i] > 0.0) {
          gi[i] = go[i];
          continue;
        }
        const double top = f[i] + a;  // a * exp(b * y)
        gi[i] = go[i] * b * top;
        da += go[i] * std::expm1(b * in[i]);
        db += go[i] * in[i] * top;
      }
      g.d_alpha[p] += da;
      g.d_beta[p] += db;
    }
  }
  return g;
}

Tensor activation_forward(const ActivationKind& kind, const Tensor& y,
                          ActivationLayerState& state) {
  if (kind.type == ActivationType::MPELU) return mpelu_forward(y, state);
  const Layout l = layout_of(y);
  Tensor out(y.shape());
  const double* in = y.data();
  double* o = out.data();
  switch (kind.type) {
    case ActivationType::ReLU:
      for (std::size_t i = 0; i < y.numel(); ++i)
        o[i] = in[i] > 0.0 ? in[i] : 0.0;
      break;
    case ActivationType::LReLU:
      for (std::size_t i = 0; i < y.numel(); ++i)
        o[i] = in[i] > 0.0 ? in[i] : kind.slope * in[i];
      break;
    case ActivationType::ELU:
      for (std::size_t i = 0; i < y.numel(); ++i)
        o[i] = in[i] > 0.0 ? in[i] : kind.alpha0 * std::expm1(in[i]);
      break;
    case ActivationType::PReLU: {
      check_channels(state, l);
      for (std::size_t n = 0; n < l.batch; ++n)
        for (std::size_t c = 0; c < l.channels; ++c) {
          const double a = state.alpha.value[param_index(state, c)];
          const std::size_t base = (n * l.channels + c) * l.inner;
          for (std::size_t s = 0; s < l.inner; ++s) {
            const double v = in[base + s];
            o[base + s] = v > 0.0 ? v : a * v;
          }
        }
      break;
    }
    case ActivationType::MPELU:
      break;
  }
  state.saved_output = out;
  state.has_saved_output = true;
  return out;
}

ActivationGrads activation_backward(const ActivationKind& kind,
                                    const ActivationLayerState& state,
                                    const Tensor& y, const Tensor& grad_out) {
  if (kind.type == ActivationType::MPELU)
    return mpelu_backward(state, y, grad_out);
  if (!state.has_saved_output)
    throw StateError("activation_backward: no saved output; call forward "
                     "first");
  if (y.shape() != grad_out.shape())
    throw InvalidArgument("activation_backward: shape mismatch " +
                          shape_str(y.shape()) + " vs " +
                          shape_str(grad_out.shape()));
  ActivationGrads g{Tensor(y.shape()), {}, {}};
  const double* in = y.data();
  const double* go = grad_out.data();
  double* gi = g.grad_in.data();
  switch (kind.type) {
    case ActivationType::ReLU:
      for (std::size_t i = 0; i < y.numel(); ++i)
        gi[i] = in[i] > 0.0 ? go[i] : 0.0;
      break;
    case ActivationType::LReLU:
      for (std::size_t i = 0; i < y.numel(); ++i)
        gi[i] = in[i] > 0.0 ? go[i] : kind.slope * go[i];
      break;
    case ActivationType::ELU: {
      const double* f = state.saved_output.data();
      for (std::size_t i = 0; i < y.numel(); ++i)
        gi[i] = in[i] > 0.0 ? go[i] : go[i] * (f[i] + kind.alpha0);
      break;
    }
    case ActivationType::PReLU: {
      const Layout l = layout_of(y);
      check_channels(state, l);
      g.d_alpha = Tensor({state.size()});
      for (std::size_t n = 0; n < l.batch; ++n)
        for (std::size_t c = 0; c < l.channels; ++c) {
          const std::size_t p = param_index(state, c);
          const double a = state.alpha.value[p];
          const std::size_t base = (n * l.channels + c) * l.inner;
          double da = 0.0;
          for (std::size_t s = 0; s < l.inner; ++s) {
            const std::size_t i = base + s;
            if (in[i] > 0.0) {
              gi[i] = go[i];
            } else {
              gi[i] = a * go[i];
              da += go[i] * in[i];
            }
          }
          g.d_alpha[p] += da;
        }
      break;
    }
    case ActivationType::MPELU:
      break;
  }
  return g;
}

Tensor decompose_check(const Tensor& x, double alpha, double beta) {
  if (!(beta > 0.0))
    throw InvalidArgument("decompose_check: beta must be > 0");
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double v = x[i];
    const double z = v > 0.0 ? v : beta * v;         // PReLU, slope beta
    out[i] = z > 0.0 ? z : alpha * std::expm1(z);   // ELU with learnable alpha
  }
  return out;
}

// ---------------------------------------------------------------------------

ActivationLayer::ActivationLayer(ActivationKind kind, std::size_t channels,
                                 ParamMode mode, double alpha0, double beta0,
                                 double lr_mult, double wd_mult)
    : kind_(kind), channels_(channels), alpha0_(alpha0), beta0_(beta0) {
  if (kind_.type == ActivationType::PReLU) beta0_ = 1.0;
  state_ = ActivationLayerState::make(kind_.type, mode, channels, alpha0_,
                                      beta0_, lr_mult, wd_mult);
}

std::string ActivationLayer::config() const {
  std::ostringstream os;
  os << kind_.name();
  if (kind_.learnable()) {
    os << " mode=" << to_string(state_.mode) << " alpha0=" << alpha0_;
    if (kind_.type == ActivationType::MPELU) os << " beta0=" << beta0_;
    os << " lr_mult=" << state_.alpha.lr_mult
       << " wd_mult=" << state_.alpha.wd_mult;
  }
  return os.str();
}

Tensor ActivationLayer::forward(const Tensor& x, Phase) {
  input_ = x;
  has_input_ = true;
  return activation_forward(kind_, x, state_);
}

Tensor ActivationLayer::backward(const Tensor& grad_out) {
  if (!has_input_) throw StateError("activation: backward before forward");
  ActivationGrads g = activation_backward(kind_, state_, input_, grad_out);
  if (!g.d_alpha.empty()) axpy(1.0, g.d_alpha, state_.alpha.grad);
  if (!g.d_beta.empty()) axpy(1.0, g.d_beta, state_.beta.grad);
  return std::move(g.grad_in);
}

std::vector<Param*> ActivationLayer::params() {
  std::vector<Param*> out;
  if (!state_.alpha.value.empty()) out.push_back(&state_.alpha);
  if (!state_.beta.value.empty()) out.push_back(&state_.beta);
  return out;
}

void ActivationLayer::regime(std::vector<std::int64_t>& out) const {
  if (!has_input_) return;
  for (double v : input_.values()) out.push_back(v > 0.0 ? 1 : 0);
}

void ActivationLayer::set_initial(double alpha0, double beta0) {
  if (kind_.type == ActivationType::MPELU && !(beta0 > 0.0))
    throw InvalidArgument("mpelu: initial beta must be > 0");
  alpha0_ = alpha0;
  beta0_ = kind_.type == ActivationType::PReLU ? 1.0 : beta0;
  reset_parameters();
}

void ActivationLayer::reset_parameters() {
  state_.alpha.value.fill(alpha0_);
  state_.beta.value.fill(beta0_);
}

double ActivationLayer::initial_negative_gain() const {
  switch (kind_.type) {
    case ActivationType::ReLU: return 0.0;
    case ActivationType::LReLU: return kind_.slope;
    case ActivationType::PReLU: return alpha0_;
    case ActivationType::ELU: return kind_.alpha0;
    case ActivationType::MPELU: return alpha0_ * beta0_;
  }
  return 0.0;
}

}  // namespace mpelu
