// Copyright 2026 The DGIN Authors
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

#include "dgin/numerics/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "dgin/error.h"

namespace dgin {
namespace {

constexpr const char* kManifest = "manifest.txt";
constexpr const char* kBlob = "params.bin";

void PutLittleEndian(double v, char* out) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
}

double GetLittleEndian(const char* in) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[i])) << (8 * i);
  return std::bit_cast<double>(bits);
}

struct ManifestEntry {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::uint64_t offset = 0;
};

struct Manifest {
  std::uint64_t schema_hash = 0;
  std::vector<ManifestEntry> entries;
};

Manifest ReadManifest(const std::filesystem::path& dir) {
  std::ifstream in(dir / kManifest);
  if (!in) throw IoError("cannot open checkpoint manifest " + (dir / kManifest).string());
  Manifest m;
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "dgin-checkpoint" || version != 1) throw ConfigError("not a dgin checkpoint: " + dir.string());
  std::string key, hex;
  in >> key >> hex;
  if (key != "schema_hash") throw ConfigError("checkpoint manifest missing schema_hash");
  m.schema_hash = std::stoull(hex, nullptr, 16);
  std::size_t count = 0;
  in >> key >> count;
  if (key != "params") throw ConfigError("checkpoint manifest missing params count");
  for (std::size_t i = 0; i < count; ++i) {
    ManifestEntry e;
    if (!(in >> e.name >> e.rows >> e.cols >> e.offset)) throw ConfigError("truncated checkpoint manifest");
    m.entries.push_back(e);
  }
  return m;
}

}  // namespace

std::uint64_t Fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string HexU64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void SaveCheckpoint(const std::filesystem::path& dir, const ParameterSet& params, std::uint64_t schema_hash) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create checkpoint dir " + dir.string() + ": " + ec.message());
  std::ostringstream manifest;
  manifest << "dgin-checkpoint 1\n";
  manifest << "schema_hash " << HexU64(schema_hash) << "\n";
  manifest << "params " << params.size() << "\n";
  std::vector<char> blob;
  for (const Parameter* p : params.All()) {
    manifest << p->name << ' ' << p->rows() << ' ' << p->cols() << ' ' << blob.size() << '\n';
    const std::size_t base = blob.size();
    blob.resize(base + p->value.size() * 8);
    for (std::size_t i = 0; i < p->value.size(); ++i) PutLittleEndian(p->value.data()[i], blob.data() + base + 8 * i);
  }
  {
    std::ofstream out(dir / kBlob, std::ios::binary | std::ios::trunc);
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!out) throw IoError("failed writing " + (dir / kBlob).string());
  }
  std::ofstream out(dir / kManifest, std::ios::trunc);
  out << manifest.str();
  if (!out) throw IoError("failed writing " + (dir / kManifest).string());
}

void LoadCheckpoint(const std::filesystem::path& dir, ParameterSet& params, std::uint64_t schema_hash) {
  const Manifest m = ReadManifest(dir);
  if (m.schema_hash != schema_hash) {
    throw ConfigError("checkpoint schema hash " + HexU64(m.schema_hash) + " does not match model schema " +
                      HexU64(schema_hash));
  }
  if (m.entries.size() != params.size()) {
    throw ConfigError("checkpoint has " + std::to_string(m.entries.size()) + " parameters, model has " +
                      std::to_string(params.size()));
  }
  std::ifstream in(dir / kBlob, std::ios::binary);
  if (!in) throw IoError("cannot open " + (dir / kBlob).string());
  std::vector<char> blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  for (const ManifestEntry& e : m.entries) {
    Parameter& p = params.Get(e.name);
    if (p.rows() != e.rows || p.cols() != e.cols) {
      throw ConfigError("checkpoint shape for " + e.name + " is " + ShapeString(e.rows, e.cols) + ", model has " +
                        p.value.ShapeString());
    }
    if (e.offset + p.value.size() * 8 > blob.size()) throw IoError("checkpoint blob truncated at " + e.name);
    for (std::size_t i = 0; i < p.value.size(); ++i) p.value.data()[i] = GetLittleEndian(blob.data() + e.offset + 8 * i);
  }
}

std::uint64_t ReadCheckpointSchemaHash(const std::filesystem::path& dir) { return ReadManifest(dir).schema_hash; }

}  // namespace dgin
