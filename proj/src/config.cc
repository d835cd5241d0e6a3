// Copyright 2026 The mrcqt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "mrcqt/config.h"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "mrcqt/error.h"
#include "mrcqt/spectral.h"

namespace mrcqt {
namespace {

// A YAML mapping with strict key tracking: Finish() rejects every key that no
// accessor asked for.
class Section {
 public:
  Section(YAML::Node node, std::string path)
      : node_(std::move(node)), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) {
      throw ConfigError(Label() + ": expected a mapping");
    }
  }

  bool Has(const std::string& key) {
    seen_.insert(key);
    return node_ && node_.IsMap() && node_[key] && !node_[key].IsNull();
  }

  std::string Key(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  double Real(const std::string& key, double fallback) {
    if (!Has(key)) return fallback;
    const double v = Scalar<double>(key, "a number");
    if (!std::isfinite(v)) throw ConfigError(Key(key) + ": must be finite");
    return v;
  }

  uint64_t Count(const std::string& key, uint64_t fallback) {
    if (!Has(key)) return fallback;
    const std::string text = Scalar<std::string>(key, "an integer");
    if (!text.empty() && text[0] == '-') {
      throw ConfigError(Key(key) + ": expected a non-negative integer");
    }
    return Scalar<unsigned long long>(key, "a non-negative integer");
  }

  bool Flag(const std::string& key, bool fallback) {
    return Has(key) ? Scalar<bool>(key, "true or false") : fallback;
  }

  std::string Text(const std::string& key, const std::string& fallback) {
    return Has(key) ? Scalar<std::string>(key, "a string") : fallback;
  }

  std::vector<std::size_t> Counts(const std::string& key,
                                  std::vector<std::size_t> fallback) {
    if (!Has(key)) return fallback;
    const YAML::Node list = node_[key];
    if (!list.IsSequence()) throw ConfigError(Key(key) + ": expected a list");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string item = Key(key) + "[" + std::to_string(i) + "]";
      try {
        const std::string text = list[i].as<std::string>();
        if (!text.empty() && text[0] == '-') throw YAML::Exception({}, "");
        out.push_back(list[i].as<unsigned long long>());
      } catch (const YAML::Exception&) {
        throw ConfigError(item + ": expected a non-negative integer");
      }
    }
    return out;
  }

  YAML::Node Raw(const std::string& key) {
    return Has(key) ? node_[key] : YAML::Node();
  }

  Section Child(const std::string& key) { return Section(Raw(key), Key(key)); }

  void Finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& item : node_) {
      const std::string key = item.first.as<std::string>();
      if (!seen_.count(key)) throw ConfigError(Key(key) + ": unknown key");
    }
  }

 private:
  std::string Label() const { return path_.empty() ? "config" : path_; }

  template <typename T>
  T Scalar(const std::string& key, const char* what) {
    const YAML::Node v = node_[key];
    if (!v.IsScalar()) throw ConfigError(Key(key) + ": expected " + what);
    try {
      return v.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(Key(key) + ": expected " + what);
    }
  }

  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

void Require(bool ok, const std::string& key, const std::string& message) {
  if (!ok) throw ConfigError(key + ": " + message);
}

void ParseTransform(Section s, TransformConfig& t) {
  const double rate = s.Real("sample_rate", t.spec.sample_rate());
  Require(rate > 0.0, s.Key("sample_rate"), "must be > 0");
  t.signal_length = s.Count("signal_length", t.signal_length);
  Require(IsPowerOfTwo(t.signal_length) && t.signal_length >= 2,
          s.Key("signal_length"), "must be a power of two");
  std::vector<CqtSpec> specs = t.spec.sub_specs;
  if (s.Has("sub_transforms")) {
    const YAML::Node list = s.Raw("sub_transforms");
    Require(list.IsSequence() && list.size() > 0, s.Key("sub_transforms"),
            "expected a non-empty list");
    specs.clear();
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string name =
          s.Key("sub_transforms") + "[" + std::to_string(i) + "]";
      Section item(list[i], name);
      Require(item.Has("f_min") && item.Has("bins_per_octave") &&
                  item.Has("octaves"),
              name, "needs f_min, bins_per_octave and octaves");
      CqtSpec spec;
      spec.f_min = item.Real("f_min", 0.0);
      spec.bins_per_octave = static_cast<int>(item.Count("bins_per_octave", 0));
      spec.num_octaves = static_cast<int>(item.Count("octaves", 0));
      item.Finish();
      specs.push_back(spec);
    }
  }
  for (CqtSpec& spec : specs) spec.sample_rate = rate;
  try {
    t.spec = MultiResSpec::FromSubSpecs(std::move(specs));
  } catch (const Error& e) {
    throw ConfigError(s.Key("sub_transforms") + ": " + e.what());
  }
  s.Finish();
}

void ParseNet(Section s, RunConfig& c) {
  NetConfig& n = c.net;
  n.channels = s.Counts("channels", n.channels);
  n.dilated_convs = s.Counts("dilated_convs", n.dilated_convs);
  n.embedding_dim = s.Count("embedding_dim", n.embedding_dim);
  n.rff_features = s.Count("rff_features", n.rff_features);
  n.rff_scale = s.Real("rff_scale", n.rff_scale);
  Require(n.rff_scale > 0.0, s.Key("rff_scale"), "must be > 0");
  n.time_kernel = s.Count("time_kernel", n.time_kernel);
  n.freq_kernel = s.Count("freq_kernel", n.freq_kernel);
  Require(n.time_kernel % 2 == 1, s.Key("time_kernel"), "must be odd");
  Require(n.freq_kernel % 2 == 1, s.Key("freq_kernel"), "must be odd");
  c.net_seed = s.Count("seed", c.net_seed);
  s.Finish();
}

void ParseTrainer(Section s, TrainerConfig& t) {
  t.adam.learning_rate = s.Real("learning_rate", t.adam.learning_rate);
  Require(t.adam.learning_rate > 0.0, s.Key("learning_rate"), "must be > 0");
  t.adam.beta1 = s.Real("adam_beta1", t.adam.beta1);
  Require(t.adam.beta1 >= 0.0 && t.adam.beta1 < 1.0, s.Key("adam_beta1"),
          "must lie in [0, 1)");
  t.adam.beta2 = s.Real("adam_beta2", t.adam.beta2);
  Require(t.adam.beta2 >= 0.0 && t.adam.beta2 < 1.0, s.Key("adam_beta2"),
          "must lie in [0, 1)");
  t.adam.eps = s.Real("adam_eps", t.adam.eps);
  Require(t.adam.eps > 0.0, s.Key("adam_eps"), "must be > 0");
  t.batch_size = s.Count("batch_size", t.batch_size);
  Require(t.batch_size > 0, s.Key("batch_size"), "must be > 0");
  t.ema_decay = s.Real("ema_decay", t.ema_decay);
  Require(t.ema_decay > 0.0 && t.ema_decay < 1.0, s.Key("ema_decay"),
          "must lie in (0, 1)");
  t.num_iterations = s.Count("iterations", t.num_iterations);
  t.sigma_sampling.log_mean =
      s.Real("sigma_log_mean", t.sigma_sampling.log_mean);
  t.sigma_sampling.log_std = s.Real("sigma_log_std", t.sigma_sampling.log_std);
  Require(t.sigma_sampling.log_std > 0.0, s.Key("sigma_log_std"),
          "must be > 0");
  if (s.Has("lambda_weighting")) {
    try {
      t.lambda_weighting =
          ParseLambdaWeighting(s.Text("lambda_weighting", ""));
    } catch (const ConfigError& e) {
      throw ConfigError(s.Key("lambda_weighting") + ": " + e.what());
    }
  }
  t.seed = s.Count("seed", t.seed);
  t.checkpoint_every = s.Count("checkpoint_every", t.checkpoint_every);
  s.Finish();
}

void ParseSchedule(Section s, NoiseScheduleConfig& n) {
  n.sigma_max = s.Real("sigma_max", n.sigma_max);
  n.sigma_min = s.Real("sigma_min", n.sigma_min);
  n.rho = s.Real("rho", n.rho);
  n.num_steps = s.Count("num_steps", n.num_steps);
  try {
    n.Validate();
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  s.Finish();
}

void ParseGenerate(Section s, GenerateConfig& g) {
  g.num_samples = s.Count("num_samples", g.num_samples);
  Require(g.num_samples > 0, s.Key("num_samples"), "must be > 0");
  g.seed = s.Count("seed", g.seed);
  if (s.Has("format")) {
    try {
      g.format = ParseSampleFormat(s.Text("format", ""));
    } catch (const ConfigError& e) {
      throw ConfigError(s.Key("format") + ": " + e.what());
    }
  }
  s.Finish();
}

void ParseEval(Section s, ShrinkageConfig& e) {
  e.enabled = s.Flag("shrinkage", e.enabled);
  e.gamma = s.Real("shrinkage_gamma", e.gamma);
  Require(e.gamma >= 0.0 && e.gamma <= 1.0, s.Key("shrinkage_gamma"),
          "must lie in [0, 1]");
  s.Finish();
}

void ParseData(Section s, DataConfig& d, double sample_rate) {
  const std::string source = s.Text("source", "directory");
  if (source == "directory") {
    d.source = DataSource::kDirectory;
  } else if (source == "synthetic") {
    d.source = DataSource::kSynthetic;
  } else {
    throw ConfigError(s.Key("source") + ": expected directory or synthetic");
  }
  d.dir = s.Text("dir", d.dir);
  const std::string norm = s.Text("normalization", "peak");
  Require(norm == "peak" || norm == "none", s.Key("normalization"),
          "expected peak or none");
  d.peak_normalize = norm == "peak";
  Section syn = s.Child("synthetic");
  SyntheticConfig& y = d.synthetic;
  y.segments = syn.Count("segments", y.segments);
  Require(y.segments > 0, syn.Key("segments"), "must be > 0");
  y.seed = syn.Count("seed", y.seed);
  y.f_lo = syn.Real("f_lo", y.f_lo);
  y.f_hi = syn.Real("f_hi", y.f_hi);
  Require(y.f_lo > 0.0 && y.f_lo < y.f_hi, syn.Key("f_lo"),
          "need 0 < f_lo < f_hi");
  Require(y.f_hi < 0.5 * sample_rate, syn.Key("f_hi"),
          "must be below Nyquist");
  syn.Finish();
  s.Finish();
}

}  // namespace

RunConfig ParseRunConfig(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: YAML syntax error: ") + e.what());
  }
  RunConfig c;
  c.text = text;
  Section top(root, "");
  ParseTransform(top.Child("transform"), c.transform);
  ParseNet(top.Child("net"), c);
  try {
    c.net.Validate(c.transform.spec);
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("net: ") + e.what());
  }
  Section diffusion = top.Child("diffusion");
  c.preconditioner.sigma_data =
      diffusion.Real("sigma_data", c.preconditioner.sigma_data);
  Require(c.preconditioner.sigma_data > 0.0, diffusion.Key("sigma_data"),
          "must be > 0");
  diffusion.Finish();
  ParseTrainer(top.Child("trainer"), c.trainer);
  ParseSchedule(top.Child("schedule"), c.generate.schedule);
  c.trainer.sigma_sampling.sigma_min = c.generate.schedule.sigma_min;
  c.trainer.sigma_sampling.sigma_max = c.generate.schedule.sigma_max;
  ParseGenerate(top.Child("generate"), c.generate);
  ParseEval(top.Child("eval"), c.eval);
  ParseData(top.Child("data"), c.data, c.transform.spec.sample_rate());
  Section paths = top.Child("paths");
  c.run_dir = paths.Text("run_dir", c.run_dir);
  paths.Finish();
  top.Finish();
  return c;
}

RunConfig LoadRunConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return ParseRunConfig(text.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace mrcqt
