// Copyright 2026 The aad-bench Authors
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

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "aad/eegwavenet.hpp"

namespace aad {

namespace {

using nlohmann::json;

template <class Fn>
void for_each_tensor(ModelParams& p, Fn&& fn) {
  fn("conv_kernel", p.conv_kernel);
  fn("conv_bias", p.conv_bias);
  fn("bn_gamma", p.bn_gamma);
  fn("bn_beta", p.bn_beta);
  fn("bn_running_mean", p.bn_running_mean);
  fn("bn_running_var", p.bn_running_var);
  fn("prelu_alpha", p.prelu_alpha);
  fn("linear_w", p.linear_w);
  fn("linear_b", p.linear_b);
}

}  // namespace

std::string encode_checkpoint(const ModelParams& params) {
  ModelParams p = params;
  json header;
  header["format"] = "AADCKPT";
  header["version"] = 1;
  header["shape"] = {{"c_in", p.shape.c_in}, {"t_w", p.shape.t_w}, {"f", p.shape.f}, {"filters", NetShape::kFilters}};
  header["config"] = {{"bn_momentum", p.config.bn_momentum},
                      {"bn_eps", p.config.bn_eps},
                      {"prelu_init", p.config.prelu_init}};
  header["seed"] = p.seed;
  json tensors = json::array();
  for_each_tensor(p, [&](const char* name, std::vector<double>& v) {
    tensors.push_back({{"name", name}, {"size", v.size()}});
  });
  header["tensors"] = std::move(tensors);

  std::string out = header.dump();
  out.push_back('\n');
  for_each_tensor(p, [&](const char*, std::vector<double>& v) {
    for (double d : v) {
      const auto f = static_cast<float>(d);
      if (!std::isfinite(f)) throw std::invalid_argument("non-finite parameter in checkpoint");
      char bytes[sizeof f];
      std::memcpy(bytes, &f, sizeof f);
      out.append(bytes, sizeof f);
    }
  });
  return out;
}

void write_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

ModelParams read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto nl = bytes.find('\n');
  if (nl == std::string::npos) throw std::runtime_error("malformed checkpoint header");
  const json header = json::parse(bytes.substr(0, nl));
  if (header.at("format") != "AADCKPT" || header.at("version") != 1)
    throw std::runtime_error("not an AADCKPT v1 checkpoint");

  const auto& shape = header.at("shape");
  NetConfig cfg;
  cfg.bn_momentum = header.at("config").at("bn_momentum").get<double>();
  cfg.bn_eps = header.at("config").at("bn_eps").get<double>();
  cfg.prelu_init = header.at("config").at("prelu_init").get<double>();
  ModelParams p = init_params(shape.at("c_in").get<std::size_t>(), shape.at("t_w").get<std::size_t>(),
                              shape.at("f").get<std::size_t>(), header.at("seed").get<std::uint64_t>(), cfg);

  std::size_t offset = nl + 1;
  for_each_tensor(p, [&](const char* name, std::vector<double>& v) {
    if (offset + v.size() * sizeof(float) > bytes.size())
      throw std::runtime_error(std::string("checkpoint truncated in tensor ") + name);
    for (auto& d : v) {
      float f;
      std::memcpy(&f, bytes.data() + offset, sizeof f);
      offset += sizeof f;
      d = f;
    }
  });
  if (offset != bytes.size()) throw std::runtime_error("checkpoint has trailing bytes");
  return p;
}

}  // namespace aad
