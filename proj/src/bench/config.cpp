#include "rog/bench/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "rog/core/error.hpp"

namespace rog::bench {

using nlohmann::json;

int parse_eps_255(const std::string& s) {
  const auto slash = s.find('/');
  const std::string num = s.substr(0, slash);
  if (slash != std::string::npos)
    require(s.substr(slash + 1) == "255", ErrorKind::kInvalidConfig, "eps must be expressed over 255: " + s);
  require(!num.empty() && std::all_of(num.begin(), num.end(), [](char ch) { return ch >= '0' && ch <= '9'; }),
          ErrorKind::kInvalidConfig, "malformed eps: " + s);
  const int v = std::stoi(num);
  require(v <= 255, ErrorKind::kInvalidConfig, "eps exceeds 255/255: " + s);
  return v;
}

std::string format_eps_255(int n) { return n == 0 ? "0" : std::to_string(n) + "/255"; }

const char* to_string(SweepKind k) {
  switch (k) {
    case SweepKind::kEpsilon: return "eps";
    case SweepKind::kIterations: return "iterations";
    case SweepKind::kQueries: return "queries";
  }
  return "?";
}

namespace {

void only_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  require(j.is_object(), ErrorKind::kInvalidConfig, where + " must be an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items())
    require(allowed.count(k) > 0, ErrorKind::kInvalidConfig, "unknown key '" + k + "' in " + where);
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kInvalidConfig, std::string("bad value for '") + key + "': " + e.what());
  }
}

void read_eps(const json& j, const char* key, int& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  require(v.is_string(), ErrorKind::kInvalidConfig, std::string("'") + key + "' must be a string like \"8/255\"");
  out = parse_eps_255(v.get<std::string>());
}

void read_index3(const json& j, const char* key, Index3& out) {
  if (!j.contains(key)) return;
  std::vector<int> v;
  read(j, key, v);
  require(v.size() == 3, ErrorKind::kInvalidConfig, std::string("'") + key + "' must have three entries");
  out = {v[0], v[1], v[2]};
}

template <typename T>
void require_increasing(const std::vector<T>& g, const std::string& name) {
  require(!g.empty(), ErrorKind::kInvalidConfig, name + " must not be empty");
  for (std::size_t i = 1; i < g.size(); ++i)
    require(g[i] > g[i - 1], ErrorKind::kInvalidConfig, name + " must be strictly increasing");
}

SweepKind sweep_kind(const std::string& s) {
  if (s == "eps") return SweepKind::kEpsilon;
  if (s == "iterations") return SweepKind::kIterations;
  if (s == "queries") return SweepKind::kQueries;
  throw Error(ErrorKind::kInvalidConfig, "unknown sweep kind: " + s);
}

}  // namespace

void ExperimentConfig::validate() const {
  require(!task_manifest.empty() || synthetic.has_value(), ErrorKind::kInvalidConfig,
          "either task_manifest or synthetic must be given");
  require(task_manifest.empty() || !synthetic.has_value(), ErrorKind::kInvalidConfig,
          "task_manifest and synthetic are mutually exclusive");
  if (synthetic) require(synthetic->cases >= 2, ErrorKind::kInvalidConfig, "synthetic.cases must be at least 2");
  require(split_fraction > 0.0 && split_fraction < 1.0, ErrorKind::kInvalidConfig, "split.fraction must lie in (0, 1)");
  require(model.base_width >= 1 && model.length >= 1, ErrorKind::kInvalidConfig, "invalid model width or length");
  train.validate();
  require(attack.eps_255 >= 0, ErrorKind::kInvalidConfig, "attack.eps must be non-negative");
  require(attack.iterations >= 1 && attack.queries >= 1 && attack.restarts >= 1, ErrorKind::kInvalidConfig,
          "attack budgets must be positive");
  require_increasing(sweep.eps_grid_255, "sweep.eps_grid");
  require(sweep.eps_grid_255.front() > 0, ErrorKind::kInvalidConfig, "sweep.eps_grid entries must be positive");
  require_increasing(sweep.iteration_grid, "sweep.iteration_grid");
  require_increasing(sweep.query_grid, "sweep.query_grid");
  require(sweep.iteration_grid.front() >= 1 && sweep.query_grid.front() >= 1, ErrorKind::kInvalidConfig,
          "sweep budgets must be positive");
  require(!sweep.seeds.empty(), ErrorKind::kInvalidConfig, "sweep.seeds must not be empty");
  require(!sweep.attacks.empty(), ErrorKind::kInvalidConfig, "sweep.attacks must not be empty");
  static const std::set<std::string> known{"PGD", "APGD-CE", "APGD-DLR", "FAB-T", "Square"};
  for (const auto& a : sweep.attacks) require(known.count(a) > 0, ErrorKind::kInvalidConfig, "unknown attack: " + a);
  require(!sweep.models.empty(), ErrorKind::kInvalidConfig, "sweep.models must not be empty");
  for (const auto& m : sweep.models)
    require(m == "clean" || m == "free", ErrorKind::kInvalidConfig, "sweep.models entries are 'clean' or 'free'");
}

ExperimentConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  c.base_dir = base_dir;
  only_keys(j, {"task_manifest", "synthetic", "split", "model", "train", "attack", "sweep"}, "config");
  if (j.contains("task_manifest")) {
    std::string p;
    read(j, "task_manifest", p);
    c.task_manifest = p;
  }
  if (j.contains("synthetic")) {
    const json& s = j.at("synthetic");
    only_keys(s, {"cases", "seed", "shape", "channels", "noise", "class_means", "tumor", "organ_radius",
                  "tumor_radius", "channel_offset", "speckle_fraction", "speckle_amplitude"},
              "synthetic");
    SyntheticDataset d;
    read(s, "cases", d.cases);
    read(s, "seed", d.seed);
    read_index3(s, "shape", d.synth.shape);
    read(s, "channels", d.synth.channels);
    read(s, "noise", d.synth.noise);
    read(s, "class_means", d.synth.class_means);
    read(s, "tumor", d.synth.tumor);
    read(s, "channel_offset", d.synth.channel_offset);
    read(s, "speckle_fraction", d.synth.speckle_fraction);
    read(s, "speckle_amplitude", d.synth.speckle_amplitude);
    if (s.contains("organ_radius")) {
      std::vector<double> r;
      read(s, "organ_radius", r);
      require(r.size() == 2, ErrorKind::kInvalidConfig, "synthetic.organ_radius is [min, max]");
      d.synth.organ_radius_min = r[0];
      d.synth.organ_radius_max = r[1];
    }
    if (s.contains("tumor_radius")) {
      std::vector<double> r;
      read(s, "tumor_radius", r);
      require(r.size() == 2, ErrorKind::kInvalidConfig, "synthetic.tumor_radius is [min, max]");
      d.synth.tumor_radius_min = r[0];
      d.synth.tumor_radius_max = r[1];
    }
    c.synthetic = d;
  }
  if (j.contains("split")) {
    const json& s = j.at("split");
    only_keys(s, {"fraction", "seed"}, "split");
    read(s, "fraction", c.split_fraction);
    read(s, "seed", c.split_seed);
  }
  if (j.contains("model")) {
    const json& m = j.at("model");
    only_keys(m, {"base_width", "length", "patch", "initial_factors", "auto_configure", "voxel_budget", "init_seed"},
              "model");
    read(m, "base_width", c.model.base_width);
    read(m, "length", c.model.length);
    read_index3(m, "patch", c.model.patch);
    read_index3(m, "initial_factors", c.model.initial_factors);
    read(m, "auto_configure", c.model.auto_configure);
    read(m, "voxel_budget", c.model.voxel_budget);
    read(m, "init_seed", c.model.init_seed);
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    only_keys(t, {"learning_rate", "weight_decay", "plateau_factor", "plateau_patience", "epochs", "batch_size",
                  "batches_per_epoch", "fg_patch_prob", "seed", "augment", "free_at"},
              "train");
    auto& tc = c.train;
    read(t, "learning_rate", tc.learning_rate);
    read(t, "weight_decay", tc.weight_decay);
    read(t, "plateau_factor", tc.plateau_factor);
    read(t, "plateau_patience", tc.plateau_patience);
    read(t, "epochs", tc.epochs);
    read(t, "batch_size", tc.batch_size);
    read(t, "batches_per_epoch", tc.batches_per_epoch);
    read(t, "fg_patch_prob", tc.fg_patch_prob);
    read(t, "seed", tc.seed);
    if (t.contains("augment")) {
      const json& a = t.at("augment");
      if (a.is_boolean() && !a.get<bool>()) {
        tc.augment = training::AugmentPolicy::none();
      } else {
        only_keys(a, {"rotation", "max_rotation_deg", "scaling", "scale_range", "spatial_prob", "mirror", "mirror_prob",
                      "gamma", "gamma_range", "gamma_prob"},
                  "train.augment");
        auto& p = tc.augment;
        read(a, "rotation", p.rotation);
        read(a, "max_rotation_deg", p.max_rotation_deg);
        read(a, "scaling", p.scaling);
        read(a, "spatial_prob", p.spatial_prob);
        read(a, "mirror", p.mirror);
        read(a, "mirror_prob", p.mirror_prob);
        read(a, "gamma", p.gamma);
        read(a, "gamma_prob", p.gamma_prob);
        std::vector<double> r;
        if (a.contains("scale_range")) {
          read(a, "scale_range", r);
          require(r.size() == 2, ErrorKind::kInvalidConfig, "scale_range is [min, max]");
          p.scale_min = r[0];
          p.scale_max = r[1];
        }
        if (a.contains("gamma_range")) {
          read(a, "gamma_range", r);
          require(r.size() == 2, ErrorKind::kInvalidConfig, "gamma_range is [min, max]");
          p.gamma_min = r[0];
          p.gamma_max = r[1];
        }
      }
    }
    if (t.contains("free_at")) {
      const json& f = t.at("free_at");
      only_keys(f, {"eps", "replays", "from_scratch", "select"}, "train.free_at");
      int e = 8;
      read_eps(f, "eps", e);
      tc.free_at.eps = e / 255.0;
      read(f, "replays", tc.free_at.replays);
      read(f, "from_scratch", c.free_from_scratch);
      if (f.contains("select")) {
        std::string sel;
        read(f, "select", sel);
        require(sel == "clean" || sel == "robust", ErrorKind::kInvalidConfig,
                "train.free_at.select must be \"clean\" or \"robust\"");
        tc.free_at.select = sel == "clean" ? training::Selection::kCleanDice : training::Selection::kRobustDice;
      }
    }
  }
  c.train.free_at.enabled = true;
  if (j.contains("attack")) {
    const json& a = j.at("attack");
    only_keys(a, {"eps", "iterations", "queries", "restarts", "early_exit", "foreground_only", "seed"}, "attack");
    read_eps(a, "eps", c.attack.eps_255);
    read(a, "iterations", c.attack.iterations);
    read(a, "queries", c.attack.queries);
    read(a, "restarts", c.attack.restarts);
    read(a, "early_exit", c.attack.early_exit);
    read(a, "foreground_only", c.attack.foreground_only);
    read(a, "seed", c.attack.seed);
  }
  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    only_keys(s, {"kind", "attacks", "eps_grid", "iteration_grid", "query_grid", "seeds", "models"}, "sweep");
    if (s.contains("kind")) {
      std::string k;
      read(s, "kind", k);
      c.sweep.kind = sweep_kind(k);
    }
    read(s, "attacks", c.sweep.attacks);
    if (s.contains("eps_grid")) {
      std::vector<std::string> g;
      read(s, "eps_grid", g);
      c.sweep.eps_grid_255.clear();
      for (const auto& e : g) c.sweep.eps_grid_255.push_back(parse_eps_255(e));
    }
    read(s, "iteration_grid", c.sweep.iteration_grid);
    read(s, "query_grid", c.sweep.query_grid);
    read(s, "seeds", c.sweep.seeds);
    read(s, "models", c.sweep.models);
  }
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::kInvalidConfig, "cannot open config: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kInvalidConfig, std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j, path.parent_path());
}

json to_json(const ExperimentConfig& c) {
  json j;
  if (!c.task_manifest.empty()) j["task_manifest"] = c.task_manifest.string();
  if (c.synthetic) {
    const auto& s = c.synthetic->synth;
    j["synthetic"] = {{"cases", c.synthetic->cases},
                      {"seed", c.synthetic->seed},
                      {"shape", s.shape},
                      {"channels", s.channels},
                      {"noise", s.noise},
                      {"class_means", s.class_means},
                      {"tumor", s.tumor},
                      {"organ_radius", {s.organ_radius_min, s.organ_radius_max}},
                      {"tumor_radius", {s.tumor_radius_min, s.tumor_radius_max}},
                      {"channel_offset", s.channel_offset},
                      {"speckle_fraction", s.speckle_fraction},
                      {"speckle_amplitude", s.speckle_amplitude}};
  }
  j["split"] = {{"fraction", c.split_fraction}, {"seed", c.split_seed}};
  j["model"] = {{"base_width", c.model.base_width},         {"length", c.model.length},
                {"patch", c.model.patch},                   {"initial_factors", c.model.initial_factors},
                {"auto_configure", c.model.auto_configure}, {"voxel_budget", c.model.voxel_budget},
                {"init_seed", c.model.init_seed}};
  const auto& t = c.train;
  const auto& a = t.augment;
  j["train"] = {{"learning_rate", t.learning_rate},
                {"weight_decay", t.weight_decay},
                {"plateau_factor", t.plateau_factor},
                {"plateau_patience", t.plateau_patience},
                {"epochs", t.epochs},
                {"batch_size", t.batch_size},
                {"batches_per_epoch", t.batches_per_epoch},
                {"fg_patch_prob", t.fg_patch_prob},
                {"seed", t.seed},
                {"augment",
                 {{"rotation", a.rotation},
                  {"max_rotation_deg", a.max_rotation_deg},
                  {"scaling", a.scaling},
                  {"scale_range", {a.scale_min, a.scale_max}},
                  {"spatial_prob", a.spatial_prob},
                  {"mirror", a.mirror},
                  {"mirror_prob", a.mirror_prob},
                  {"gamma", a.gamma},
                  {"gamma_range", {a.gamma_min, a.gamma_max}},
                  {"gamma_prob", a.gamma_prob}}},
                {"free_at",
                 {{"eps", format_eps_255(static_cast<int>(t.free_at.eps * 255.0 + 0.5))},
                  {"replays", t.free_at.replays},
                  {"from_scratch", c.free_from_scratch},
                  {"select", t.free_at.select == training::Selection::kCleanDice ? "clean" : "robust"}}}};
  j["attack"] = {{"eps", format_eps_255(c.attack.eps_255)},
                 {"iterations", c.attack.iterations},
                 {"queries", c.attack.queries},
                 {"restarts", c.attack.restarts},
                 {"early_exit", c.attack.early_exit},
                 {"foreground_only", c.attack.foreground_only},
                 {"seed", c.attack.seed}};
  json grid = json::array();
  for (int e : c.sweep.eps_grid_255) grid.push_back(format_eps_255(e));
  j["sweep"] = {{"kind", to_string(c.sweep.kind)},
                {"attacks", c.sweep.attacks},
                {"eps_grid", grid},
                {"iteration_grid", c.sweep.iteration_grid},
                {"query_grid", c.sweep.query_grid},
                {"seeds", c.sweep.seeds},
                {"models", c.sweep.models}};
  return j;
}

std::string config_hash(const ExperimentConfig& c) {
  const std::string s = to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace rog::bench
