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

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "mpelu/data.hpp"
#include "mpelu/errors.hpp"

namespace mpelu {

namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void require_batch(const Tensor& images, const char* who) {
  if (images.rank() < 2 || images.dim(0) == 0)
    throw InvalidArgument(std::string(who) +
                          ": expected a non-empty [N, ...] batch, got " +
                          shape_str(images.shape()));
}

}  // namespace

Tensor gcn(const Tensor& images) {
  require_batch(images, "gcn");
  Tensor out = images;
  const std::size_t n = images.dim(0);
  const std::size_t per = images.numel() / n;
  for (std::size_t i = 0; i < n; ++i) {
    std::span<double> img(out.data() + i * per, per);
    const Moments m = moments(std::span<const double>(img));
    const double s = std::max(std::sqrt(m.variance), 1e-8);
    for (double& v : img) v = (v - m.mean) / s;
  }
  return out;
}

ChannelStandardizer fit_standardizer(const Tensor& images) {
  if (images.rank() != 4 || images.dim(0) == 0)
    throw InvalidArgument("standardize: expected non-empty [N, C, H, W]");
  const std::size_t n = images.dim(0), c = images.dim(1);
  const std::size_t hw = images.dim(2) * images.dim(3);
  ChannelStandardizer s;
  s.mean.assign(c, 0.0);
  s.std.assign(c, 0.0);
  const double count = static_cast<double>(n * hw);
  for (std::size_t ch = 0; ch < c; ++ch) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* p = images.data() + (i * c + ch) * hw;
      for (std::size_t k = 0; k < hw; ++k) sum += p[k];
    }
    const double mean = sum / count;
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* p = images.data() + (i * c + ch) * hw;
      for (std::size_t k = 0; k < hw; ++k) sq += (p[k] - mean) * (p[k] - mean);
    }
    s.mean[ch] = mean;
    s.std[ch] = std::sqrt(sq / count);
  }
  return s;
}

Tensor apply_standardizer(const ChannelStandardizer& s, const Tensor& images) {
  if (images.rank() != 4 || images.dim(1) != s.mean.size())
    throw InvalidArgument("standardize: channel count mismatch");
  Tensor out = images;
  const std::size_t n = images.dim(0), c = images.dim(1);
  const std::size_t hw = images.dim(2) * images.dim(3);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t ch = 0; ch < c; ++ch) {
      double* p = out.data() + (i * c + ch) * hw;
      const double sd = std::max(s.std[ch], 1e-8);
      for (std::size_t k = 0; k < hw; ++k) p[k] = (p[k] - s.mean[ch]) / sd;
    }
  return out;
}

ZcaTransform zca_fit(const Tensor& images, double eps) {
  require_batch(images, "zca_fit");
  if (!(eps > 0.0)) throw InvalidArgument("zca_fit: eps must be > 0");
  const auto n = static_cast<Eigen::Index>(images.dim(0));
  const auto d = static_cast<Eigen::Index>(images.numel() / images.dim(0));
  Eigen::Map<const RowMatrix> x(images.data(), n, d);
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const RowMatrix centered = x.rowwise() - mean;
  const Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success)
    throw NumericError("zca_fit: eigendecomposition did not converge");
  const Eigen::VectorXd scale =
      (eig.eigenvalues().array().max(0.0) + eps).rsqrt().matrix();
  const Eigen::MatrixXd& u = eig.eigenvectors();
  Eigen::MatrixXd w = u * scale.asDiagonal() * u.transpose();
  w = 0.5 * (w + w.transpose()).eval();

  ZcaTransform t;
  t.eps = eps;
  t.mean = Tensor({static_cast<std::size_t>(d)});
  t.w = Tensor({static_cast<std::size_t>(d), static_cast<std::size_t>(d)});
  for (Eigen::Index j = 0; j < d; ++j) t.mean[static_cast<std::size_t>(j)] = mean(j);
  Eigen::Map<RowMatrix>(t.w.data(), d, d) = w;
  return t;
}

Tensor zca_apply(const ZcaTransform& t, const Tensor& images) {
  require_batch(images, "zca_apply");
  const auto n = static_cast<Eigen::Index>(images.dim(0));
  const auto d = static_cast<Eigen::Index>(images.numel() / images.dim(0));
  if (static_cast<std::size_t>(d) != t.mean.numel())
    throw InvalidArgument("zca_apply: transform fitted on dimension " +
                          std::to_string(t.mean.numel()) + ", images have " +
                          std::to_string(d));
  Eigen::Map<const RowMatrix> x(images.data(), n, d);
  Eigen::Map<const Eigen::RowVectorXd> mean(t.mean.data(), d);
  Eigen::Map<const RowMatrix> w(t.w.data(), d, d);
  Tensor out(images.shape());
  Eigen::Map<RowMatrix>(out.data(), n, d) = (x.rowwise() - mean) * w;
  return out;
}

const char* to_string(Preproc p) {
  switch (p) {
    case Preproc::None: return "none";
    case Preproc::Standardize: return "standardize";
    case Preproc::GcnZca: return "gcn-zca";
  }
  return "?";
}

Preproc parse_preproc(const std::string& text) {
  if (text == "none") return Preproc::None;
  if (text == "standardize") return Preproc::Standardize;
  if (text == "gcn-zca") return Preproc::GcnZca;
  throw InvalidArgument("unknown preprocessing '" + text +
                        "' (expected none, standardize or gcn-zca)");
}

void Preprocessor::fit(const Tensor& train_images) {
  switch (kind) {
    case Preproc::None: break;
    case Preproc::Standardize:
      standardizer = fit_standardizer(train_images);
      break;
    case Preproc::GcnZca: zca = zca_fit(gcn(train_images), zca_eps); break;
  }
}

Dataset Preprocessor::apply(const Dataset& data) const {
  Dataset out = data;
  switch (kind) {
    case Preproc::None: return out;
    case Preproc::Standardize:
      out.images = apply_standardizer(standardizer, data.images);
      break;
    case Preproc::GcnZca: out.images = zca_apply(zca, gcn(data.images)); break;
  }
  out.preprocessing.push_back(to_string(kind));
  return out;
}

std::vector<std::pair<std::string, Tensor>> Preprocessor::state() const {
  std::vector<std::pair<std::string, Tensor>> s;
  if (kind == Preproc::Standardize) {
    s.emplace_back("standardize.mean",
                   Tensor({standardizer.mean.size()}, standardizer.mean));
    s.emplace_back("standardize.std",
                   Tensor({standardizer.std.size()}, standardizer.std));
  } else if (kind == Preproc::GcnZca) {
    s.emplace_back("zca.mean", zca.mean);
    s.emplace_back("zca.w", zca.w);
    s.emplace_back("zca.eps", Tensor({1}, std::vector<double>{zca.eps}));
  }
  return s;
}

void Preprocessor::load_state(
    const std::vector<std::pair<std::string, Tensor>>& state) {
  auto find = [&](const std::string& name) -> const Tensor& {
    for (const auto& [n, t] : state)
      if (n == name) return t;
    throw SchemaError("preprocessing state lacks " + name);
  };
  if (kind == Preproc::Standardize) {
    const Tensor& m = find("standardize.mean");
    const Tensor& s = find("standardize.std");
    standardizer.mean.assign(m.values().begin(), m.values().end());
    standardizer.std.assign(s.values().begin(), s.values().end());
  } else if (kind == Preproc::GcnZca) {
    zca.mean = find("zca.mean");
    zca.w = find("zca.w");
    zca.eps = find("zca.eps")[0];
  }
}

}  // namespace mpelu
