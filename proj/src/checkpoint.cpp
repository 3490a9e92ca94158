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

#include <cstring>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "mpelu/errors.hpp"
#include "mpelu/train.hpp"

namespace mpelu {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'M', 'P', 'E', 'L', 'U', 'C', 'K', '1'};
constexpr int kFormatVersion = 1;

struct Entry {
  std::string name;
  const Tensor* tensor;
};

json log_to_json(const std::vector<EpochRecord>& log) {
  json rows = json::array();
  for (const auto& r : log)
    rows.push_back({r.epoch, r.lr, r.train_loss, r.train_err, r.test_err,
                    r.wall_seconds});
  return rows;
}

std::vector<EpochRecord> log_from_json(const json& rows) {
  std::vector<EpochRecord> log;
  for (const auto& r : rows)
    log.push_back({r.at(0).get<int>(), r.at(1).get<double>(),
                   r.at(2).get<double>(), r.at(3).get<double>(),
                   r.at(4).get<double>(), r.at(5).get<double>()});
  return log;
}

}  // namespace

void save_checkpoint(const std::string& path, NetworkGraph& net,
                     const std::vector<ParamGroup>& groups,
                     const TrainState& state, const std::string& config_text,
                     const Preprocessor& preproc) {
  std::vector<Entry> entries;
  for (const auto& p : net.params())
    entries.push_back({"param:" + p.name, &p.param->value});
  for (const auto& b : net.buffers())
    entries.push_back({"buffer:" + b.name, b.tensor});
  for (const auto& g : groups)
    entries.push_back({"velocity:" + g.name, &g.velocity});
  const auto pre = preproc.state();
  for (const auto& [name, t] : pre) entries.push_back({"preproc:" + name, &t});

  json manifest;
  manifest["format"] = "mpelu-checkpoint";
  manifest["version"] = kFormatVersion;
  manifest["arch"] = net.label;
  manifest["architecture"] = net.describe();
  manifest["config"] = config_text;
  manifest["preproc"] = to_string(preproc.kind);
  manifest["epoch"] = state.epoch;
  manifest["iteration"] = state.iteration;
  manifest["rng"] = state.rng.serialize();
  manifest["log"] = log_to_json(state.log);
  json table = json::array();
  std::uint64_t offset = 0;
  for (const auto& e : entries) {
    table.push_back({{"name", e.name},
                     {"shape", e.tensor->shape()},
                     {"offset", offset}});
    offset += e.tensor->numel() * sizeof(double);
  }
  manifest["tensors"] = table;
  const std::string text = manifest.dump();

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot create checkpoint " + tmp);
    out.write(kMagic, sizeof(kMagic));
    const std::uint64_t len = text.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& e : entries)
      out.write(reinterpret_cast<const char*>(e.tensor->data()),
                static_cast<std::streamsize>(e.tensor->numel() * sizeof(double)));
    out.flush();
    if (!out) throw IoError("write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at " + path + ": " +
                        ec.message());
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw FormatError("checkpoint: " + path + " lacks the container magic");
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || len > (std::uint64_t{1} << 32))
    throw FormatError("checkpoint: bad manifest length in " + path);
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw FormatError("checkpoint: truncated manifest in " + path);

  json m;
  try {
    m = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: manifest is not JSON: ") +
                      e.what());
  }
  Checkpoint c;
  try {
    if (m.at("format") != "mpelu-checkpoint" ||
        m.at("version").get<int>() != kFormatVersion)
      throw SchemaError("checkpoint: unsupported format or version in " + path);
    c.arch = m.at("arch").get<std::string>();
    c.config_text = m.at("config").get<std::string>();
    c.state.epoch = m.at("epoch").get<int>();
    c.state.iteration = m.at("iteration").get<long>();
    c.state.rng = Rng::deserialize(m.at("rng").get<std::string>());
    c.state.log = log_from_json(m.at("log"));
    const std::uint64_t base = sizeof(kMagic) + sizeof(len) + len;
    for (const auto& e : m.at("tensors")) {
      Tensor t(e.at("shape").get<Shape>());
      in.seekg(static_cast<std::streamoff>(base + e.at("offset").get<std::uint64_t>()));
      in.read(reinterpret_cast<char*>(t.data()),
              static_cast<std::streamsize>(t.numel() * sizeof(double)));
      if (!in) throw FormatError("checkpoint: truncated payload in " + path);
      std::string name = e.at("name").get<std::string>();
      if (name.rfind("preproc:", 0) == 0)
        c.preprocessing.emplace_back(name.substr(8), std::move(t));
      else
        c.tensors.emplace_back(std::move(name), std::move(t));
    }
    for (const auto& line : m.at("architecture"))
      c.arch_dump += line.get<std::string>() + '\n';
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: malformed manifest: ") + e.what());
  }
  return c;
}

void apply_checkpoint(const Checkpoint& ckpt, NetworkGraph& net,
                      std::vector<ParamGroup>* groups) {
  std::string dump;
  for (const auto& line : net.describe()) dump += line + '\n';
  if (dump != ckpt.arch_dump) {
    std::istringstream a(dump), b(ckpt.arch_dump);
    std::string la, lb;
    int line = 0;
    while (true) {
      const bool ga = static_cast<bool>(std::getline(a, la));
      const bool gb = static_cast<bool>(std::getline(b, lb));
      ++line;
      if (!ga || !gb || la != lb)
        throw SchemaError("checkpoint: architecture mismatch at node line " +
                          std::to_string(line) + ": network has '" +
                          (ga ? la : "<end>") + "', checkpoint has '" +
                          (gb ? lb : "<end>") + "'");
    }
  }
  auto find = [&](const std::string& name, const Shape& shape) -> const Tensor& {
    for (const auto& [n, t] : ckpt.tensors)
      if (n == name) {
        if (t.shape() != shape)
          throw SchemaError("checkpoint: " + name + " has shape " +
                            shape_str(t.shape()) + ", network expects " +
                            shape_str(shape));
        return t;
      }
    throw SchemaError("checkpoint: missing tensor " + name);
  };
  for (auto& p : net.params())
    p.param->value = find("param:" + p.name, p.param->value.shape());
  for (auto& b : net.buffers())
    *b.tensor = find("buffer:" + b.name, b.tensor->shape());
  if (groups)
    for (auto& g : *groups)
      g.velocity = find("velocity:" + g.name, g.velocity.shape());
}

}  // namespace mpelu
