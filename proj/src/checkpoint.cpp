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

#include "trase/checkpoint.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "trase/errors.hpp"

namespace trase {
using nlohmann::json;

namespace {

constexpr const char* kFormat = "trase-checkpoint/1";

std::string real_array(const Vector& v) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += format_real(v[i]);
  }
  return s + "]";
}

Vector vector_from_json(const json& j, const std::string& path) {
  if (!j.is_array()) throw DataError(path + ": expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw DataError(path + "[" + std::to_string(i) + "]: expected a number");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

}  // namespace

std::string format_real(double v) {
  if (!std::isfinite(v)) throw DataError("cannot serialize non-finite value");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json spec_to_json(const NetSpec& spec) {
  json hidden = json::array();
  for (const auto& h : spec.hidden) {
    json l = {{"width", h.width},
              {"activation", h.activation == Activation::Tanh ? "tanh" : "leaky_relu"}};
    if (h.activation == Activation::LeakyReLU) l["slope"] = h.slope;
    hidden.push_back(l);
  }
  json j = {{"state_dim", spec.state_dim},
            {"exo_dim", spec.exo_dim},
            {"time_as_input", spec.time_as_input},
            {"hidden", hidden}};
  auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  if (spec.input_offset.size()) j["input_offset"] = vec(spec.input_offset);
  if (spec.input_scale.size()) j["input_scale"] = vec(spec.input_scale);
  return j;
}

NetSpec spec_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  NetSpec spec;
  auto int_field = [&](const char* key, int def, bool required) {
    if (!j.contains(key)) {
      if (required) throw ConfigError(path + "." + key + ": required");
      return def;
    }
    if (!j[key].is_number_integer()) throw ConfigError(path + "." + key + ": expected an integer");
    return j[key].get<int>();
  };
  spec.state_dim = int_field("state_dim", 0, true);
  spec.exo_dim = int_field("exo_dim", 0, false);
  if (j.contains("time_as_input")) {
    if (!j["time_as_input"].is_boolean()) throw ConfigError(path + ".time_as_input: expected a boolean");
    spec.time_as_input = j["time_as_input"].get<bool>();
  }
  if (!j.contains("hidden") || !j["hidden"].is_array()) {
    throw ConfigError(path + ".hidden: expected an array of layers");
  }
  for (std::size_t i = 0; i < j["hidden"].size(); ++i) {
    const auto& l = j["hidden"][i];
    const std::string lp = path + ".hidden[" + std::to_string(i) + "]";
    if (!l.is_object()) throw ConfigError(lp + ": expected an object");
    HiddenLayer h;
    if (!l.contains("width") || !l["width"].is_number_integer()) {
      throw ConfigError(lp + ".width: expected an integer");
    }
    h.width = l["width"].get<int>();
    const std::string a = l.value("activation", std::string("tanh"));
    if (a == "tanh") {
      h.activation = Activation::Tanh;
    } else if (a == "leaky_relu") {
      h.activation = Activation::LeakyReLU;
      if (l.contains("slope")) {
        if (!l["slope"].is_number()) throw ConfigError(lp + ".slope: expected a number");
        h.slope = l["slope"].get<double>();
      }
    } else {
      throw ConfigError(lp + ".activation: expected 'tanh' or 'leaky_relu', got '" + a + "'");
    }
    spec.hidden.push_back(h);
  }
  try {
    if (j.contains("input_offset")) spec.input_offset = vector_from_json(j["input_offset"], path + ".input_offset");
    if (j.contains("input_scale")) spec.input_scale = vector_from_json(j["input_scale"], path + ".input_scale");
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  spec.validate();
  return spec;
}

std::string checkpoint_to_string(const Checkpoint& ck) {
  // Assembled by hand so reals keep 17 significant digits.
  std::ostringstream out;
  out << "{\n";
  out << "  \"format\": " << json(kFormat).dump() << ",\n";
  if (!ck.model_id.empty()) out << "  \"model_id\": " << json(ck.model_id).dump() << ",\n";
  out << "  \"epoch\": " << ck.epoch << ",\n";
  out << "  \"spec\": " << spec_to_json(ck.spec).dump() << ",\n";
  if (ck.learning_rate) out << "  \"learning_rate\": " << format_real(*ck.learning_rate) << ",\n";
  if (ck.optimizer) {
    out << "  \"optimizer\": {\"step\": " << ck.optimizer->step
        << ", \"m\": " << real_array(ck.optimizer->m)
        << ", \"v\": " << real_array(ck.optimizer->v) << "},\n";
  }
  out << "  \"param_values\": " << real_array(ck.params.values) << "\n";
  out << "}\n";
  return out.str();
}

Checkpoint checkpoint_from_string(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(origin + ": " + e.what());
  }
  if (!j.is_object()) throw DataError(origin + ": expected an object");
  if (j.value("format", std::string()) != kFormat) {
    throw DataError(origin + ": unsupported format (expected " + std::string(kFormat) + ")");
  }
  Checkpoint ck;
  ck.model_id = j.value("model_id", std::string());
  ck.epoch = j.value("epoch", 0L);
  if (!j.contains("spec")) throw DataError(origin + ": missing 'spec'");
  try {
    ck.spec = spec_from_json(j["spec"]);
  } catch (const ConfigError& e) {
    throw DataError(origin + ": " + e.what());
  }
  if (!j.contains("param_values")) throw DataError(origin + ": missing 'param_values'");
  ck.params.values = vector_from_json(j["param_values"], origin + ".param_values");
  const auto p = static_cast<Eigen::Index>(ck.spec.param_count());
  if (ck.params.size() != p) {
    throw DataError(origin + ": param_values has " + std::to_string(ck.params.size()) +
                    " entries, spec requires " + std::to_string(p));
  }
  if (j.contains("learning_rate")) ck.learning_rate = j["learning_rate"].get<double>();
  if (j.contains("optimizer")) {
    const auto& o = j["optimizer"];
    if (!o.is_object() || !o.contains("m") || !o.contains("v")) {
      throw DataError(origin + ".optimizer: expected {step, m, v}");
    }
    AdamState st;
    st.step = o.value("step", 0L);
    st.m = vector_from_json(o.at("m"), origin + ".optimizer.m");
    st.v = vector_from_json(o.at("v"), origin + ".optimizer.v");
    if (st.m.size() != p || st.v.size() != p) {
      throw DataError(origin + ": optimizer moments do not match the parameter count");
    }
    ck.optimizer = st;
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << checkpoint_to_string(ck);
  if (!out) throw IoError("write failed for checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_string(ss.str(), path.string());
}

}  // namespace trase
