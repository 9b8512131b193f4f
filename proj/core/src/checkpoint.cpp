// Copyright 2026 The oproute Authors
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

#include "oproute/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "oproute/errors.hpp"

namespace oproute {

using nlohmann::json;

std::string checkpoint_to_json(const GnnParams& params) {
  params.validate();
  json j;
  j["format"] = "oproute-checkpoint";
  j["format_version"] = kCheckpointVersion;
  j["architecture"] = {{"widths", params.arch.widths},
                       {"taps", params.arch.taps},
                       {"activation", to_string(params.arch.activation)},
                       {"normalize_gso", params.arch.normalize_gso}};
  json tensors = json::array();
  const auto names = params.names();
  const auto flat = params.flatten();
  for (std::size_t i = 0; i < flat.size(); ++i)
    tensors.push_back({{"name", names[i]}, {"shape", flat[i].shape()}, {"data", flat[i].values()}});
  j["tensors"] = std::move(tensors);
  return j.dump(1);
}

GnnParams checkpoint_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("checkpoint: ") + e.what(), 0);
  }
  try {
    if (j.at("format").get<std::string>() != "oproute-checkpoint") {
      throw ContractError("checkpoint: not an oproute checkpoint");
    }
    const int version = j.at("format_version").get<int>();
    if (version != kCheckpointVersion) {
      throw ContractError("checkpoint: unsupported format_version " + std::to_string(version));
    }
    GnnArchitecture arch;
    const json& a = j.at("architecture");
    arch.widths = a.at("widths").get<std::vector<std::size_t>>();
    arch.taps = a.at("taps").get<std::vector<std::size_t>>();
    arch.activation = activation_from_string(a.at("activation").get<std::string>());
    arch.normalize_gso = a.at("normalize_gso").get<bool>();
    arch.validate();
    GnnParams p = zero_params(arch);
    const auto names = p.names();
    const json& tensors = j.at("tensors");
    if (tensors.size() != names.size()) {
      throw ContractError("checkpoint: expected " + std::to_string(names.size()) + " tensors");
    }
    std::vector<Tensor> flat;
    for (std::size_t i = 0; i < names.size(); ++i) {
      const json& t = tensors.at(i);
      if (t.at("name").get<std::string>() != names[i]) {
        throw ContractError("checkpoint: tensor " + std::to_string(i) + " should be " +
                            names[i]);
      }
      flat.emplace_back(t.at("shape").get<Shape>(), t.at("data").get<std::vector<double>>());
    }
    p.assign(std::move(flat));
    return p;
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what(), 0);
  }
}

void save_checkpoint(const GnnParams& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << checkpoint_to_json(params) << '\n';
}

GnnParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("checkpoint " + path.string() +
                " not found; run `oproute train` first or fix the path");
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_json(buf.str());
}

}  // namespace oproute
