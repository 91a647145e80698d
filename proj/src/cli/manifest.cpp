/*
 * Copyright 2026 The trase-node Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "trase/cli.hpp"
#include "trase/errors.hpp"

namespace trase::cli {
namespace fs = std::filesystem;
using nlohmann::json;

std::string config_hash(const json& j) {
  const std::string text = j.dump();  // object keys are kept sorted
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

void claim_output_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  if (fs::exists(dir / kManifestName)) {
    throw IoError(dir.string() + " already holds a run; choose a fresh --out directory");
  }
}

void write_manifest(const fs::path& dir, const RunManifest& m) {
  json j;
  j["command"] = m.command;
  j["tool_version"] = kToolVersion;
  j["config_path"] = m.config_path;
  j["config_hash"] = m.config_hash;
  j["inputs"] = m.inputs;
  j["outputs"] = m.outputs;
  j["seed"] = m.seed ? json(*m.seed) : json(nullptr);
  j["resolved_config"] = m.resolved_config;
  const fs::path path = dir / kManifestName;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace trase::cli
