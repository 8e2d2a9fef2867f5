#include "rog/bench/pipeline.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "rog/bench/report.hpp"
#include "rog/bench/split.hpp"
#include "rog/bench/sweep.hpp"
#include "rog/core/error.hpp"
#include "rog/metrics/report_io.hpp"
#include "rog/simd/kernels.hpp"
#include "rog/training/trainer.hpp"
#include "rog/volumes/io.hpp"
#include "rog/volumes/preprocess.hpp"
#include "rog/volumes/synth.hpp"

namespace rog::bench {

namespace fs = std::filesystem;
using nlohmann::json;
using volumes::Case;

const char* to_string(Mode m) {
  switch (m) {
    case Mode::kPreprocess: return "preprocess";
    case Mode::kTrain: return "train";
    case Mode::kTrainFree: return "train-free";
    case Mode::kAttack: return "attack";
    case Mode::kSweep: return "sweep";
    case Mode::kReport: return "report";
  }
  return "?";
}

Mode mode_from_string(const std::string& s) {
  for (Mode m : {Mode::kPreprocess, Mode::kTrain, Mode::kTrainFree, Mode::kAttack, Mode::kSweep, Mode::kReport})
    if (s == to_string(m)) return m;
  throw Error(ErrorKind::kInvalidConfig, "unknown mode: " + s);
}

bool deterministic_requested() {
  const char* v = std::getenv(kDeterministicEnv);
  if (!v) return false;
  const std::string s(v);
  return !s.empty() && s != "0" && s != "false";
}

namespace layout {
fs::path preprocessed_manifest(const fs::path& out) { return out / "preprocessed" / "manifest.json"; }
fs::path checkpoint(const fs::path& out, bool free) { return out / (free ? "model_free.ckpt" : "model_clean.ckpt"); }
fs::path train_log(const fs::path& out, bool free) { return out / (free ? "train_free_log.csv" : "train_log.csv"); }
fs::path ensemble_csv(const fs::path& out) { return out / "attack" / "ensemble.csv"; }
fs::path sweep_csv(const fs::path& out, const std::string& model, SweepKind kind) {
  std::string name = "sweep_" + model;
  if (kind != SweepKind::kEpsilon) name += std::string("_") + to_string(kind);
  return out / "sweep" / (name + ".csv");
}
fs::path report_dir(const fs::path& out) { return out / "report"; }
}  // namespace layout

namespace {

std::ostream& log_of(const RunContext& ctx) {
  static std::ostringstream sink;
  return ctx.log ? *ctx.log : sink;
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void write_text(const fs::path& p, const std::string& content) {
  fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  require(static_cast<bool>(f), ErrorKind::kIo, "cannot write " + p.string());
  f << content;
}

void require_file(const fs::path& p, const std::string& what) {
  require(fs::exists(p), ErrorKind::kNotFound, what + " not found: " + p.string() + " (run the producing step first)");
}

std::vector<Case> raw_cases(const ExperimentConfig& cfg, volumes::TaskSpec& task) {
  std::vector<Case> cases;
  if (cfg.synthetic) {
    for (int i = 0; i < cfg.synthetic->cases; ++i) {
      auto [img, mask, t] = volumes::synth_case(mix(cfg.synthetic->seed, static_cast<std::uint64_t>(i)),
                                                cfg.synthetic->synth);
      if (i == 0) task = t;
      char id[32];
      std::snprintf(id, sizeof id, "case_%03d", i);
      cases.push_back(Case{id, std::move(img), std::move(mask)});
    }
    return cases;
  }
  const fs::path mp = cfg.task_manifest.is_absolute() ? cfg.task_manifest : cfg.base_dir / cfg.task_manifest;
  require_file(mp, "task manifest");
  const volumes::Manifest m = volumes::load_manifest(mp);
  task = m.task;
  for (const auto& c : m.cases) cases.push_back(volumes::load_case(m, c));
  return cases;
}

json stats_to_json(const volumes::DatasetStats& s) {
  json ch = json::array();
  for (const auto& c : s.channels) ch.push_back({{"p005", c.p005}, {"p995", c.p995}, {"mean", c.mean}, {"std", c.std}});
  return {{"median_spacing", s.median_spacing}, {"avg_shape", s.avg_shape}, {"channels", ch}};
}

std::vector<metrics::CaseRow> read_rows_if(const fs::path& p) {
  return fs::exists(p) ? metrics::read_case_rows_csv(p) : std::vector<metrics::CaseRow>{};
}

}  // namespace

void run_preprocess(const RunContext& ctx) {
  const auto& cfg = ctx.config;
  volumes::TaskSpec task;
  std::vector<Case> cases = raw_cases(cfg, task);
  std::vector<std::string> ids;
  for (const auto& c : cases) ids.push_back(c.id);
  const Split split = split_dataset(ids, cfg.split_fraction, cfg.split_seed);
  std::map<std::string, std::string> part;
  for (const auto& id : split.train) part[id] = "train";
  for (const auto& id : split.val) part[id] = "val";

  std::vector<volumes::LabeledVolume> train_views;
  for (const auto& c : cases)
    if (part[c.id] == "train") train_views.push_back({&c.image, &c.mask});
  const volumes::DatasetStats stats = volumes::compute_dataset_stats(train_views);

  std::vector<double> obj(static_cast<std::size_t>(task.num_classes()), 0.0), seen(obj.size(), 0.0);
  for (const auto& c : cases) {
    if (part[c.id] != "train") continue;
    for (int k = 1; k < task.num_classes(); ++k) {
      const std::size_t n = c.mask.count(k);
      if (n == 0) continue;
      obj[static_cast<std::size_t>(k)] += static_cast<double>(n);
      seen[static_cast<std::size_t>(k)] += 1.0;
    }
  }
  for (std::size_t k = 1; k < obj.size(); ++k) obj[k] = seen[k] > 0 ? obj[k] / seen[k] : 0.0;
  task.avg_object_voxels = obj;
  task.clean_mean_dice.reset();

  const fs::path dir = layout::preprocessed_manifest(ctx.out).parent_path();
  fs::create_directories(dir);
  volumes::Manifest m;
  m.task = task;
  m.base_dir = dir;
  for (const auto& c : cases) {
    auto [img, mask] = volumes::resample(c.image, &c.mask, stats.median_spacing);
    const volumes::Volume norm = task.modality == volumes::Modality::kMR
                                     ? volumes::normalize(img, volumes::compute_volume_stats(img))
                                     : volumes::normalize(img, stats);
    volumes::save_raw(dir / (c.id + "_image.raw"), norm);
    volumes::save_raw(dir / (c.id + "_label.raw"), *mask);
    m.cases.push_back({c.id, {c.id + "_image.raw"}, c.id + "_label.raw", part[c.id]});
  }
  volumes::save_manifest(layout::preprocessed_manifest(ctx.out), m);
  write_text(dir / "stats.json", stats_to_json(stats).dump(2) + "\n");
  log_of(ctx) << "preprocessed " << cases.size() << " cases (" << split.train.size() << " train, " << split.val.size()
              << " val) into " << dir.string() << '\n';
}

Dataset load_preprocessed(const fs::path& out) {
  const fs::path mp = layout::preprocessed_manifest(out);
  require_file(mp, "preprocessed dataset");
  Dataset d;
  d.manifest = volumes::load_manifest(mp);
  for (const auto& c : d.manifest.cases) {
    Case cs = volumes::load_case(d.manifest, c);
    (c.split == "val" ? d.val : d.train).push_back(std::move(cs));
  }
  require(!d.train.empty() && !d.val.empty(), ErrorKind::kInvalidConfig, "preprocessed dataset lacks a split");
  return d;
}

model::LatticeConfig model_config(const ExperimentConfig& cfg, const Dataset& data) {
  const int in = data.train.front().image.channels();
  const int classes = data.manifest.task.num_classes();
  model::LatticeConfig lc;
  if (cfg.model.auto_configure) {
    volumes::DatasetStats s;
    for (const auto& c : data.train)
      for (int a = 0; a < 3; ++a) s.avg_shape[static_cast<std::size_t>(a)] += c.image.shape()[static_cast<std::size_t>(a)];
    for (double& v : s.avg_shape) v /= static_cast<double>(data.train.size());
    lc = model::auto_configure(s, data.manifest.task, cfg.model.voxel_budget, in, cfg.model.base_width);
  } else {
    lc = model::make_config(in, classes, cfg.model.patch, cfg.model.initial_factors, cfg.model.base_width,
                            cfg.model.length);
  }
  lc.init_seed = cfg.model.init_seed;
  lc.validate();
  return lc;
}

void run_train(const RunContext& ctx, bool free) {
  const auto& cfg = ctx.config;
  const Dataset data = load_preprocessed(ctx.out);
  const auto& task = data.manifest.task;
  std::ostream& log = log_of(ctx);

  model::RogNet net = [&] {
    if (free && !cfg.free_from_scratch) {
      const fs::path clean = layout::checkpoint(ctx.out, false);
      require_file(clean, "clean checkpoint");
      return model::load_checkpoint(clean);
    }
    return model::RogNet(model_config(cfg, data));
  }();
  log << (free ? "free adversarial training" : "training") << ": " << net.count_params() << " parameters, "
      << data.train.size() << " train / " << data.val.size() << " val cases\n";

  training::TrainHooks hooks;
  hooks.best_checkpoint = layout::checkpoint(ctx.out, free);
  hooks.on_epoch = [&](const training::EpochLog& e) {
    log << "epoch " << e.epoch << " lr=" << e.lr << " train=" << metrics::format_real(e.train_loss)
        << " val=" << metrics::format_real(e.val_loss) << " dice=" << metrics::format_real(e.val_dice);
    if (e.val_robust_dice >= 0.0) log << " robust_dice=" << metrics::format_real(e.val_robust_dice);
    log << '\n';
  };
  training::TrainConfig tc = cfg.train;
  tc.free_at.enabled = free;
  const auto result = free ? training::train_free_adv(net, data.train, data.val, task, tc, hooks)
                           : training::train_standard(net, data.train, data.val, task, tc, hooks);
  model::save_checkpoint(layout::checkpoint(ctx.out, free), net);
  std::ostringstream csv;
  training::write_log_csv(csv, result.log);
  write_text(layout::train_log(ctx.out, free), csv.str());
  log << "best epoch " << result.best_epoch << " val dice " << metrics::format_real(result.best_val_dice) << '\n';
}

namespace {

json audit_to_json(const ThreatAudit& a) {
  return {{"outputs", a.outputs},
          {"radius_violations", a.radius_violations},
          {"box_violations", a.box_violations},
          {"max_excess", a.outputs > 0 ? a.max_excess : 0.0}};
}

}  // namespace

void run_attack(const RunContext& ctx) {
  const Dataset data = load_preprocessed(ctx.out);
  const fs::path ck = layout::checkpoint(ctx.out, false);
  require_file(ck, "clean checkpoint");
  const model::RogNet net = model::load_checkpoint(ck);
  const auto table = run_ensemble(net, data.val, data.manifest.task, ctx.config.attack, ctx.log);
  std::ostringstream csv;
  metrics::write_case_rows_csv(csv, table.rows, data.manifest.task.num_classes());
  write_text(layout::ensemble_csv(ctx.out), csv.str());
  json j;
  j["clean_mean_dice"] = table.clean_mean_dice;
  if (!ctx.config.attack.early_exit) j["robust"] = metrics::summary_to_json(table.summary);
  j["threat_audit"] = audit_to_json(table.audit);
  write_text(layout::ensemble_csv(ctx.out).parent_path() / "summary.json", j.dump(2) + "\n");
  require(table.audit.ok(), ErrorKind::kInvalidArgument, "threat-model audit failed");
}

void run_sweep(const RunContext& ctx) {
  const auto& cfg = ctx.config;
  const Dataset data = load_preprocessed(ctx.out);
  const auto points = plan_sweep(cfg.sweep, cfg.attack);
  for (const auto& name : cfg.sweep.models) {
    const bool free = name == "free";
    const fs::path ck = layout::checkpoint(ctx.out, free);
    require_file(ck, std::string(free ? "free-AT" : "clean") + " checkpoint");
    const model::RogNet net = model::load_checkpoint(ck);
    if (ctx.log) *ctx.log << "sweep on the " << name << " model\n";
    const auto table = run_attack_sweep(net, data.val, data.manifest.task, points, cfg.attack, ctx.log);
    std::ostringstream csv;
    metrics::write_case_rows_csv(csv, table.rows, data.manifest.task.num_classes());
    const fs::path path = layout::sweep_csv(ctx.out, name, cfg.sweep.kind);
    write_text(path, csv.str());
    fs::path audit = path;
    audit.replace_extension(".audit.json");
    write_text(audit, audit_to_json(table.audit).dump(2) + "\n");
    require(table.audit.ok(), ErrorKind::kInvalidArgument, "threat-model audit failed");
  }
}

void run_report(const RunContext& ctx) {
  const auto& cfg = ctx.config;
  const fs::path mp = layout::preprocessed_manifest(ctx.out);
  ReportInputs in;
  in.task_name = fs::exists(mp) ? volumes::load_manifest(mp).task.name : "task";
  in.eps_grid_255 = cfg.sweep.eps_grid_255;
  in.ensemble_rows = read_rows_if(layout::ensemble_csv(ctx.out));
  in.sweep_clean_rows = read_rows_if(layout::sweep_csv(ctx.out, "clean", SweepKind::kEpsilon));
  in.sweep_free_rows = read_rows_if(layout::sweep_csv(ctx.out, "free", SweepKind::kEpsilon));
  if (in.ensemble_rows.empty() && in.sweep_clean_rows.empty() && in.sweep_free_rows.empty())
    throw Error(ErrorKind::kNotFound, "no attack or sweep tables under " + ctx.out.string());
  const ReportBundle b = make_report(in);
  write_bundle(b, layout::report_dir(ctx.out));
  log_of(ctx) << "report written to " << layout::report_dir(ctx.out).string() << '\n';
}

void run_mode(Mode mode, const RunContext& ctx) {
  fs::create_directories(ctx.out);
  if (ctx.deterministic) simd::select("scalar");
  switch (mode) {
    case Mode::kPreprocess: run_preprocess(ctx); break;
    case Mode::kTrain: run_train(ctx, false); break;
    case Mode::kTrainFree: run_train(ctx, true); break;
    case Mode::kAttack: run_attack(ctx); break;
    case Mode::kSweep: run_sweep(ctx); break;
    case Mode::kReport: run_report(ctx); break;
  }
  const auto& c = ctx.config;
  json seeds = {{"split", c.split_seed},
                {"model_init", c.model.init_seed},
                {"train", c.train.seed},
                {"attack", c.attack.seed},
                {"sweep", c.sweep.seeds}};
  if (c.synthetic) seeds["synthetic"] = c.synthetic->seed;
  json manifest = {{"mode", to_string(mode)},
                   {"config_hash", config_hash(c)},
                   {"config", to_json(c)},
                   {"seeds", seeds},
                   {"deterministic", ctx.deterministic},
                   {"kernels", simd::active().name},
                   {"version", ROG_VERSION}};
  write_text(ctx.out / (std::string("run_") + to_string(mode) + ".json"), manifest.dump(2) + "\n");
}

}  // namespace rog::bench
