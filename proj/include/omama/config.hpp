// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#pragma once

// Run configuration: every key has a default, config files are JSON (nested
// sections or dotted keys), and unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>

#include <json.hpp>

#include "omama/error.hpp"

namespace omama {

struct RunConfig {
  struct Encoder {
    double context_margin = 0.5;
  } encoder;
  struct Mining {
    std::size_t batch_size = 16;
    std::uint64_t seed = 0;
    std::string strategy = "adjacent";  // or "random"
  } mining;
  struct Attention {
    std::size_t d_k = 0;  // 0: same as the feature width
    std::size_t max_tokens = 4096;
  } attn;
  struct Head {
    std::size_t hidden = 256;
    std::size_t d_f = 128;
  } head;
  struct Loss {
    double temperature = 0.07;
  } loss;
  struct Train {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t steps = 200;
    std::uint64_t seed = 0;
    std::size_t checkpoint_every = 0;  // 0: final checkpoint only
    double max_skip_fraction = 0.5;
  } train;
  struct Eval {
    double vis_threshold = 0.5;
    double contour_tol = 0.0075;
  } eval;

  using Json = nlohmann::ordered_json;

  /// Sets one dotted key; throws ConfigError for unknown keys or bad types.
  void set(const std::string& key, const Json& v) {
    const auto& table = setters();
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
    try {
      it->second(*this, v);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("bad value for '" + key + "': " + e.what());
    }
  }

  /// Accepts nested sections ({"train": {"lr": 0.01}}) and dotted keys.
  void merge(const Json& j, const std::string& prefix = "") {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [k, v] : j.items()) {
      const std::string key = prefix.empty() ? k : prefix + "." + k;
      if (v.is_object()) {
        merge(v, key);
      } else {
        set(key, v);
      }
    }
  }

  /// key=value override; the value is parsed as JSON, falling back to a string.
  void apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
    const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
    Json v = Json::parse(text, nullptr, false);
    if (v.is_discarded()) v = text;
    set(key, v);
  }

  void validate() const {
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    if (!(encoder.context_margin >= 0.0)) fail("encoder.context_margin must be >= 0");
    if (mining.batch_size < 2) fail("mining.batch_size must be >= 2");
    if (mining.strategy != "adjacent" && mining.strategy != "random") fail("mining.strategy must be adjacent or random");
    if (attn.max_tokens == 0) fail("attn.max_tokens must be positive");
    if (head.hidden == 0 || head.d_f == 0) fail("head widths must be positive");
    if (!(loss.temperature > 0.0)) fail("loss.temperature must be positive");
    if (!(train.lr >= 0.0)) fail("train.lr must be >= 0");
    if (!(train.beta1 >= 0.0 && train.beta1 < 1.0) || !(train.beta2 >= 0.0 && train.beta2 < 1.0))
      fail("train.beta1/beta2 must lie in [0, 1)");
    if (!(train.eps > 0.0)) fail("train.eps must be positive");
    if (train.steps < 1) fail("train.steps must be >= 1");
    if (!(train.max_skip_fraction >= 0.0 && train.max_skip_fraction <= 1.0)) fail("train.max_skip_fraction in [0, 1]");
    if (!(eval.contour_tol >= 0.0)) fail("eval.contour_tol must be >= 0");
  }

  Json to_json() const {
    return Json{
        {"encoder", {{"context_margin", encoder.context_margin}}},
        {"mining", {{"batch_size", mining.batch_size}, {"seed", mining.seed}, {"strategy", mining.strategy}}},
        {"attn", {{"d_k", attn.d_k}, {"max_tokens", attn.max_tokens}}},
        {"head", {{"hidden", head.hidden}, {"d_f", head.d_f}}},
        {"loss", {{"temperature", loss.temperature}}},
        {"train",
         {{"lr", train.lr},
          {"beta1", train.beta1},
          {"beta2", train.beta2},
          {"eps", train.eps},
          {"steps", train.steps},
          {"seed", train.seed},
          {"checkpoint_every", train.checkpoint_every},
          {"max_skip_fraction", train.max_skip_fraction}}},
        {"eval", {{"vis_threshold", eval.vis_threshold}, {"contour_tol", eval.contour_tol}}},
    };
  }

  static RunConfig from_json(const Json& j) {
    RunConfig c;
    c.merge(j);
    c.validate();
    return c;
  }

  static RunConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    Json j = Json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config " + path.string() + " is not valid JSON");
    return from_json(j);
  }

  /// FNV-1a over the canonical JSON dump.
  std::uint64_t hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : to_json().dump()) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
    return h;
  }

 private:
  using Setter = std::function<void(RunConfig&, const Json&)>;

  static const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"encoder.context_margin", [](RunConfig& c, const Json& v) { c.encoder.context_margin = v.get<double>(); }},
        {"mining.batch_size", [](RunConfig& c, const Json& v) { c.mining.batch_size = v.get<std::size_t>(); }},
        {"mining.seed", [](RunConfig& c, const Json& v) { c.mining.seed = v.get<std::uint64_t>(); }},
        {"mining.strategy", [](RunConfig& c, const Json& v) { c.mining.strategy = v.get<std::string>(); }},
        {"attn.d_k", [](RunConfig& c, const Json& v) { c.attn.d_k = v.get<std::size_t>(); }},
        {"attn.max_tokens", [](RunConfig& c, const Json& v) { c.attn.max_tokens = v.get<std::size_t>(); }},
        {"head.hidden", [](RunConfig& c, const Json& v) { c.head.hidden = v.get<std::size_t>(); }},
        {"head.d_f", [](RunConfig& c, const Json& v) { c.head.d_f = v.get<std::size_t>(); }},
        {"loss.temperature", [](RunConfig& c, const Json& v) { c.loss.temperature = v.get<double>(); }},
        {"train.lr", [](RunConfig& c, const Json& v) { c.train.lr = v.get<double>(); }},
        {"train.beta1", [](RunConfig& c, const Json& v) { c.train.beta1 = v.get<double>(); }},
        {"train.beta2", [](RunConfig& c, const Json& v) { c.train.beta2 = v.get<double>(); }},
        {"train.eps", [](RunConfig& c, const Json& v) { c.train.eps = v.get<double>(); }},
        {"train.steps", [](RunConfig& c, const Json& v) { c.train.steps = v.get<std::size_t>(); }},
        {"train.seed", [](RunConfig& c, const Json& v) { c.train.seed = v.get<std::uint64_t>(); }},
        {"train.checkpoint_every", [](RunConfig& c, const Json& v) { c.train.checkpoint_every = v.get<std::size_t>(); }},
        {"train.max_skip_fraction", [](RunConfig& c, const Json& v) { c.train.max_skip_fraction = v.get<double>(); }},
        {"eval.vis_threshold", [](RunConfig& c, const Json& v) { c.eval.vis_threshold = v.get<double>(); }},
        {"eval.contour_tol", [](RunConfig& c, const Json& v) { c.eval.contour_tol = v.get<double>(); }},
    };
    return table;
  }
};

}  // namespace omama
