// Copyright 2026 The HCEP Authors.
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

#include "hcep/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "hcep/errors.hpp"
#include "hcep/manifest.hpp"

namespace hcep {

namespace {

constexpr char kMagic[8] = {'H', 'C', 'E', 'P', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T get(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw IoError("checkpoint is truncated");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Model& model, const nlohmann::json& meta) {
  nlohmann::json params = nlohmann::json::array();
  std::size_t offset = 0;
  for (const Parameter& p : model.params()) {
    params.push_back({{"name", p.name}, {"rows", p.value.rows()}, {"cols", p.value.cols()}, {"offset", offset}});
    offset += static_cast<std::size_t>(p.value.size());
  }
  const nlohmann::json header = {{"net_config", model.config().to_json()},
                                 {"hierarchy", model.hierarchy().to_json()},
                                 {"hierarchy_hash", model.hierarchy().spec_hash()},
                                 {"meta", meta},
                                 {"params", params}};
  const std::string text = header.dump();
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, text.size());
  out += text;
  out.reserve(out.size() + offset * sizeof(float));
  for (const Parameter& p : model.params())
    for (ad::Index i = 0; i < p.value.size(); ++i) put<float>(out, static_cast<float>(p.value.data()[i]));
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  atomic_write(path, out);
}

Model load_checkpoint(const std::filesystem::path& path, nlohmann::json* meta) {
  if (!std::filesystem::exists(path)) throw MissingInputError("checkpoint not found: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string data = ss.str();
  if (data.size() < sizeof(kMagic) || std::memcmp(data.data(), kMagic, sizeof(kMagic)) != 0)
    throw IoError("not a checkpoint: " + path.string());
  std::size_t pos = sizeof(kMagic);
  const auto version = get<std::uint32_t>(data, pos);
  if (version != kCheckpointVersion)
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  const auto header_len = get<std::uint64_t>(data, pos);
  if (pos + header_len > data.size()) throw IoError("checkpoint header is truncated");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(data.substr(pos, header_len));
  } catch (const nlohmann::json::exception& ex) {
    throw IoError(std::string("checkpoint header is not JSON: ") + ex.what());
  }
  pos += header_len;
  const std::size_t base = pos;

  try {
    const ConceptHierarchy h = ConceptHierarchy::from_json(header.at("hierarchy"));
    if (h.spec_hash() != header.at("hierarchy_hash").get<std::uint64_t>())
      throw IoError("checkpoint hierarchy does not match its recorded hash");
    Model model = Model::create(NetConfig::from_json(header.at("net_config")), h);
    ParamStore& ps = model.params();
    const auto& entries = header.at("params");
    if (static_cast<int>(entries.size()) != ps.size())
      throw ConfigError("checkpoint has " + std::to_string(entries.size()) + " parameters, model expects " +
                        std::to_string(ps.size()));
    for (const auto& e : entries) {
      const std::string name = e.at("name").get<std::string>();
      if (!ps.contains(name)) throw ConfigError("checkpoint parameter '" + name + "' is unknown");
      Parameter& p = ps[ps.slot(name)];
      const auto rows = e.at("rows").get<ad::Index>(), cols = e.at("cols").get<ad::Index>();
      if (rows != p.value.rows() || cols != p.value.cols())
        throw ShapeMismatchError("checkpoint parameter '" + name + "' has the wrong shape");
      std::size_t at = base + e.at("offset").get<std::size_t>() * sizeof(float);
      for (ad::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = get<float>(data, at);
    }
    if (meta) *meta = header.value("meta", nlohmann::json::object());
    return model;
  } catch (const nlohmann::json::exception& ex) {
    throw IoError(std::string("malformed checkpoint header: ") + ex.what());
  }
}

Model load_checkpoint(const std::filesystem::path& path, const ConceptHierarchy& expected,
                      nlohmann::json* meta) {
  Model m = load_checkpoint(path, meta);
  if (m.hierarchy().spec_hash() != expected.spec_hash())
    throw ConfigError("checkpoint was trained on a different concept hierarchy");
  return m;
}

}  // namespace hcep
