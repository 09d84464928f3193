// Copyright 2026 The shapeprobe Authors
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

// shapeprobe command-line tool.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "shapeprobe/dataset.hpp"
#include "shapeprobe/error.hpp"
#include "shapeprobe/hashing.hpp"
#include "shapeprobe/metrics.hpp"
#include "shapeprobe/oracles.hpp"
#include "shapeprobe/perturbations.hpp"
#include "shapeprobe/png_io.hpp"
#include "shapeprobe/probing.hpp"
#include "shapeprobe/run_config.hpp"

namespace fs = std::filesystem;
using namespace shapeprobe;

namespace {

std::string fmt_gain(double g) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", g);
  return buf;
}

/// "1..10", "3" or "1,2,5".
std::vector<int> parse_degrees(const std::string& s) {
  std::vector<int> out;
  try {
    const auto dots = s.find("..");
    if (dots != std::string::npos) {
      const int lo = std::stoi(s.substr(0, dots)), hi = std::stoi(s.substr(dots + 2));
      if (lo > hi) throw ConfigError("empty degree range '" + s + "'");
      for (int d = lo; d <= hi; ++d) out.push_back(d);
      return out;
    }
    std::size_t start = 0;
    while (start <= s.size()) {
      const auto comma = s.find(',', start);
      out.push_back(std::stoi(s.substr(start, comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  } catch (const std::logic_error&) {
    throw ConfigError("bad degree list '" + s + "'");
  }
  return out;
}

/// "name=path" or a bare path named after its last component.
std::pair<std::string, fs::path> named_path(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq != std::string::npos) return {arg.substr(0, eq), fs::path(arg.substr(eq + 1))};
  fs::path p(arg);
  auto name = p.filename().string();
  if (name.empty()) name = p.parent_path().filename().string();
  return {name, p};
}

/// "dataset:predictions".
RunPart dataset_with_predictions(const std::string& arg) {
  const auto colon = arg.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == arg.size())
    throw ConfigError("expected <dataset_dir>:<prediction_dir>, got '" + arg + "'");
  return {arg.substr(0, colon), arg.substr(colon + 1)};
}

// ---------------------------------------------------------------------------

struct GenArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n, n_train, n_val;
  std::optional<std::string> seen_pool, unseen_pool;
  std::string out;
  bool force = false;
  bool size_sweep = false;
};

int cmd_gen(const GenArgs& a) {
  RunConfig rc;
  if (!a.config.empty()) rc = run_config_from_json(read_json(a.config));
  if (a.seed) rc.seed = *a.seed;
  if (a.n) rc.n_train = rc.n_val = *a.n;
  if (a.n_train) rc.n_train = *a.n_train;
  if (a.n_val) rc.n_val = *a.n_val;
  if (a.seen_pool) rc.seen_pool = *a.seen_pool;
  if (a.unseen_pool) rc.unseen_pool = *a.unseen_pool;
  rc.validate();
  if (a.size_sweep && (!rc.features.shape_only() || rc.features.complex_objects))
    throw ValidationError("the size sweep is defined for shape-only simple-object datasets");

  const TexturePool seen = resolve_pool(rc.seen_pool);
  const fs::path out(a.out);
  prepare_output_dir(out, a.force);
  nlohmann::json run = to_json(rc);
  run["run_hash"] = run_hash(rc);
  if (a.size_sweep) {
    generate_size_sweep(rc.features, rc.n_train, rc.seed, seen, out / "train", false, "train");
    generate_size_sweep(rc.features, rc.n_val, rc.seed, seen, out / "val", false, "val");
  } else {
    generate_dataset(rc.features, rc.n_train, rc.seed, seen, out / "train", false, "train");
    generate_dataset(rc.features, rc.n_val, rc.seed, seen, out / "val", false, "val");
  }
  write_json(out / "run.json", run);
  std::cout << run["run_hash"].get<std::string>() << "\n";
  return 0;
}

struct ProbeArgs {
  std::string input;
  std::string kind;
  std::string out;
  std::uint64_t seed = 0;
  std::string unseen = kDefaultUnseenPool;
  std::string degrees = "1..10";
  std::vector<double> fg_gains, bg_gains;
  bool invert = false;
  bool force = false;
};

int cmd_probe(const ProbeArgs& a) {
  const fs::path out(a.out);
  if (a.invert) {
    const ProbeSet p = read_probe(a.input);
    write_dataset(invert_probe(p), out, a.force);
    return 0;
  }
  if (a.kind.empty()) throw ConfigError("--kind is required unless --invert is given");
  const ProbeKind kind = parse_probe_kind(a.kind);
  const Dataset val = read_dataset(a.input);
  switch (kind) {
    case ProbeKind::kRm: {
      if (a.unseen == val.manifest.seen_pool)
        throw ConfigError("the unseen pool must differ from the seen pool");
      write_probe(make_rm(val, resolve_pool(a.unseen), a.seed), out, a.force);
      break;
    }
    case ProbeKind::kAff:
      write_probe(make_aff(val, a.seed), out, a.force);
      break;
    case ProbeKind::kShuf:
      write_probe(make_shuf(val, a.seed), out, a.force);
      break;
    case ProbeKind::kBrightness: {
      const auto fg = a.fg_gains.empty() ? default_brightness_gains() : a.fg_gains;
      const auto bg = a.bg_gains.empty() ? default_brightness_gains() : a.bg_gains;
      prepare_output_dir(out, a.force);
      brightness_grid(val, fg, bg, [&](double f, double b, ProbeSet& p) {
        write_probe(p, out / ("fg_" + fmt_gain(f) + "_bg_" + fmt_gain(b)));
      });
      break;
    }
    case ProbeKind::kElastic: {
      const TexturePool seen = resolve_pool(val.manifest.seen_pool);
      const TextureSet textures({&seen});
      const auto degrees = parse_degrees(a.degrees);
      const auto series = elastic_series(val, degrees, textures, a.seed);
      prepare_output_dir(out, a.force);
      for (std::size_t i = 0; i < degrees.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "degree_%02d", degrees[i]);
        write_probe(series[i], out / name);
      }
      break;
    }
  }
  return 0;
}

struct PerturbArgs {
  std::string input;
  std::string corruption;
  int severity = 1;
  bool all = false;
  std::uint64_t seed = 0;
  std::string out;
  bool force = false;
};

void write_corrupted(const Dataset& ds, const CorruptionSpec& spec, std::uint64_t seed, const fs::path& out,
                     bool force) {
  const Dataset noisy = corrupt_dataset(ds, spec, seed);
  write_dataset(noisy, out, force);
  write_json(out / "perturbation.json", noisy.manifest.derivation);
}

int cmd_perturb(const PerturbArgs& a) {
  const Dataset ds = read_dataset(a.input, false);
  const fs::path out(a.out);
  if (a.all) {
    prepare_output_dir(out, a.force);
    for (auto c : kAllCorruptions)
      for (int s = 1; s <= 5; ++s)
        write_corrupted(ds, CorruptionSpec::make(c, s), a.seed,
                        out / (to_string(c) + "_" + std::to_string(s)), false);
    return 0;
  }
  if (a.corruption.empty()) throw ConfigError("--corruption is required unless --all is given");
  write_corrupted(ds, CorruptionSpec::make(parse_corruption(a.corruption), a.severity), a.seed, out,
                  a.force);
  return 0;
}

struct AugmentArgs {
  std::string input;
  std::string spec;
  std::uint64_t seed = 0;
  std::string out;
  bool force = false;
};

/// An augmentation object, a list of them, or an object with an
/// "augmentations" list (as embedded in a training-run config).
std::vector<AugmentationSpec> augmentation_specs(const nlohmann::json& j) {
  std::vector<AugmentationSpec> out;
  const nlohmann::json* list = &j;
  if (j.is_object() && j.contains("augmentations")) list = &j["augmentations"];
  if (list->is_array()) {
    for (const auto& e : *list) out.push_back(augmentation_from_json(e));
  } else {
    out.push_back(augmentation_from_json(*list));
  }
  if (out.empty()) throw ConfigError("no augmentations given");
  return out;
}

int cmd_augment(const AugmentArgs& a) {
  const auto specs = augmentation_specs(read_json(a.spec));
  const Dataset ds = read_dataset(a.input);
  write_dataset(augment_dataset(ds, specs, a.seed), a.out, a.force);
  return 0;
}

struct EvalArgs {
  std::string val, rm, aff, shuf;
  std::string val_pred, rm_pred, aff_pred, shuf_pred;
  std::string pred_root;
  std::string out;
};

int cmd_eval(const EvalArgs& a) {
  auto pred = [&](const std::string& explicit_dir, const char* set) {
    if (!explicit_dir.empty()) return fs::path(explicit_dir);
    if (a.pred_root.empty())
      throw ConfigError(std::string("no predictions for ") + set + " (use --" + set +
                        "-pred or --pred-root)");
    return fs::path(a.pred_root) / set;
  };
  RunLayout run{{a.val, pred(a.val_pred, "val")},
                {a.rm, pred(a.rm_pred, "rm")},
                {a.aff, pred(a.aff_pred, "aff")},
                {a.shuf, pred(a.shuf_pred, "shuf")}};
  const auto report = evaluate_run(run);
  if (!a.out.empty()) write_json(a.out, report);
  std::printf("SBI %.4f\n", report["sbi"].get<double>());
  return 0;
}

struct OracleArgs {
  std::string kind;
  std::string train;
  std::vector<std::string> sets;
  std::string out;
  double threshold = 0.8;
  bool image_mode = false;
  double tolerance = 12.0;
  bool force = false;
};

int cmd_oracle(const OracleArgs& a) {
  OracleOptions opts;
  opts.shape_threshold = a.threshold;
  opts.image_mode = a.image_mode;
  opts.signature_tolerance = a.tolerance;
  const Oracle oracle = fit_oracle(parse_oracle_kind(a.kind), read_dataset(a.train), opts);
  const fs::path out(a.out);
  prepare_output_dir(out, a.force);
  for (const auto& arg : a.sets) {
    const auto [name, dir] = named_path(arg);
    const Dataset ds = read_dataset(dir);
    const fs::path sub = out / name;
    fs::create_directories(sub);
    for (std::size_t i = 0; i < ds.scenes.size(); ++i)
      write_png(sub / (ds.manifest.scenes[i].name + ".png"), predict(oracle, ds.scenes[i]));
  }
  write_json(out / "oracle.json", to_json(oracle));
  return 0;
}

int cmd_rf(const std::string& spec) {
  std::cout << receptive_field(read_layer_spec(spec)) << "\n";
  return 0;
}

struct ReportArgs {
  std::string val;
  std::vector<std::string> noisy, ood;
  std::string sbi_report;
  std::vector<std::string> sweep;
  std::string hash_dir;
  std::string out;
};

void emit(const nlohmann::json& j, const std::string& out) {
  if (out.empty())
    std::cout << j.dump(1, '\t') << "\n";
  else
    write_json(out, j);
}

int cmd_report_robustness(const ReportArgs& a) {
  const RunPart val = dataset_with_predictions(a.val);
  nlohmann::json j;
  j["iou_val"] = mean_iou(val.dataset, val.predictions);
  auto group = [&](const std::vector<std::string>& args, const char* key) {
    if (args.empty()) return;
    nlohmann::json per = nlohmann::json::object();
    std::vector<double> scores;
    for (const auto& arg : args) {
      const RunPart p = dataset_with_predictions(arg);
      const double v = mean_iou(p.dataset, p.predictions);
      per[named_path(p.dataset.string()).first] = v;
      scores.push_back(v);
    }
    j[std::string("iou_") + key] = stable_mean(scores);
    j[key] = per;
  };
  group(a.noisy, "noisy");
  group(a.ood, "ood");
  if (!a.sbi_report.empty()) j["sbi"] = read_json(a.sbi_report).at("sbi");
  emit(j, a.out);
  return 0;
}

int cmd_report_sweep(const ReportArgs& a) {
  std::map<int, nlohmann::json> rows;
  for (const auto& arg : a.sweep) {
    const auto eq = arg.find('=');
    if (eq == std::string::npos) throw ConfigError("expected <size>=<report.json>, got '" + arg + "'");
    int size = 0;
    try {
      size = std::stoi(arg.substr(0, eq));
    } catch (const std::logic_error&) {
      throw ConfigError("bad size in '" + arg + "'");
    }
    const auto r = read_json(arg.substr(eq + 1));
    rows[size] = {{"size", size}, {"sbi", r.at("sbi")}, {"iou", r.at("iou")}};
  }
  nlohmann::json out = nlohmann::json::array();
  for (auto& [size, row] : rows) out.push_back(row);
  emit(out, a.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shapeprobe: synthetic shape-bias benchmark toolkit"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "generate train and val datasets");
  g->add_option("--config", gen.config, "run or feature config JSON");
  g->add_option("--seed", gen.seed, "master seed");
  g->add_option("--n", gen.n, "scenes per split");
  g->add_option("--n-train", gen.n_train, "training scenes");
  g->add_option("--n-val", gen.n_val, "validation scenes");
  g->add_option("--seen-pool", gen.seen_pool, "texture pool for generation");
  g->add_option("--unseen-pool", gen.unseen_pool, "texture pool reserved for D_rm");
  g->add_option("--out", gen.out, "output directory")->required();
  g->add_flag("--force", gen.force, "overwrite a non-empty output directory");
  g->add_flag("--size-sweep", gen.size_sweep, "write resized copies at 160..480 px");

  ProbeArgs probe;
  auto* p = app.add_subcommand("probe", "derive a probing set from a val dataset");
  p->add_option("input", probe.input, "val dataset (or probe set with --invert)")->required();
  p->add_option("--kind", probe.kind, "rm, aff, shuf, brightness or elastic");
  p->add_option("--out", probe.out, "output directory")->required();
  p->add_option("--seed", probe.seed, "probe seed");
  p->add_option("--unseen", probe.unseen, "texture pool for rm");
  p->add_option("--degrees", probe.degrees, "elastic degrees, e.g. 1..10");
  p->add_option("--fg-gains", probe.fg_gains, "brightness gains for targets");
  p->add_option("--bg-gains", probe.bg_gains, "brightness gains for the rest");
  p->add_flag("--invert", probe.invert, "undo an aff or shuf probe");
  p->add_flag("--force", probe.force, "overwrite a non-empty output directory");

  PerturbArgs perturb;
  auto* c = app.add_subcommand("perturb", "write a corrupted copy of a dataset");
  c->add_option("input", perturb.input, "dataset directory")->required();
  c->add_option("--corruption", perturb.corruption,
                "gaussian, shot, impulse, defocus, pixelate or motion");
  c->add_option("--severity", perturb.severity, "1..5")->check(CLI::Range(1, 5));
  c->add_flag("--all", perturb.all, "every corruption at every severity");
  c->add_option("--seed", perturb.seed, "noise seed");
  c->add_option("--out", perturb.out, "output directory")->required();
  c->add_flag("--force", perturb.force, "overwrite a non-empty output directory");

  AugmentArgs augment;
  auto* au = app.add_subcommand("augment", "write an augmented copy of a dataset");
  au->add_option("input", augment.input, "dataset directory")->required();
  au->add_option("--spec", augment.spec, "augmentation JSON")->required();
  au->add_option("--seed", augment.seed, "augmentation seed");
  au->add_option("--out", augment.out, "output directory")->required();
  au->add_flag("--force", augment.force, "overwrite a non-empty output directory");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "score predictions and compute SBI");
  e->add_option("--val", eval.val, "val dataset")->required();
  e->add_option("--rm", eval.rm, "rm probe")->required();
  e->add_option("--aff", eval.aff, "aff probe")->required();
  e->add_option("--shuf", eval.shuf, "shuf probe")->required();
  e->add_option("--val-pred", eval.val_pred, "val predictions");
  e->add_option("--rm-pred", eval.rm_pred, "rm predictions");
  e->add_option("--aff-pred", eval.aff_pred, "aff predictions");
  e->add_option("--shuf-pred", eval.shuf_pred, "shuf predictions");
  e->add_option("--pred-root", eval.pred_root, "directory holding val/ rm/ aff/ shuf/");
  e->add_option("--out", eval.out, "report JSON");

  OracleArgs oracle;
  auto* o = app.add_subcommand("oracle", "predict with a reference oracle");
  o->add_option("--kind", oracle.kind, "shape_template, texture_lookup or any_foreground")->required();
  o->add_option("--train", oracle.train, "training dataset")->required();
  o->add_option("--out", oracle.out, "prediction root")->required();
  o->add_option("--threshold", oracle.threshold, "shape alignment threshold");
  o->add_flag("--image-mode", oracle.image_mode, "texture_lookup on colour signatures");
  o->add_option("--tolerance", oracle.tolerance, "signature distance tolerance");
  o->add_flag("--force", oracle.force, "overwrite a non-empty output directory");
  o->add_option("sets", oracle.sets, "[name=]dataset directories to predict")->required();

  std::string rf_spec;
  auto* r = app.add_subcommand("rf", "receptive field of a layer spec");
  r->add_option("spec", rf_spec, "layer spec JSON")->required();

  ReportArgs report;
  auto* rep = app.add_subcommand("report", "aggregate results");
  rep->require_subcommand(1);
  auto* rob = rep->add_subcommand("robustness", "IOU on val, noisy and OOD sets");
  rob->add_option("--val", report.val, "<dataset>:<predictions>")->required();
  rob->add_option("--noisy", report.noisy, "<dataset>:<predictions>, repeatable");
  rob->add_option("--ood", report.ood, "<dataset>:<predictions>, repeatable");
  rob->add_option("--sbi", report.sbi_report, "eval report JSON");
  rob->add_option("--out", report.out, "output JSON");
  auto* sw = rep->add_subcommand("sweep", "SBI against input size");
  sw->add_option("entries", report.sweep, "<size>=<eval report>")->required();
  sw->add_option("--out", report.out, "output JSON");
  auto* hs = rep->add_subcommand("hash", "content hash of a directory");
  hs->add_option("dir", report.hash_dir, "directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::kConfig);
  }

  try {
    if (*g) return cmd_gen(gen);
    if (*p) return cmd_probe(probe);
    if (*c) return cmd_perturb(perturb);
    if (*au) return cmd_augment(augment);
    if (*e) return cmd_eval(eval);
    if (*o) return cmd_oracle(oracle);
    if (*r) return cmd_rf(rf_spec);
    if (*rob) return cmd_report_robustness(report);
    if (*sw) return cmd_report_sweep(report);
    if (*hs) {
      std::cout << directory_hash(report.hash_dir) << "\n";
      return 0;
    }
  } catch (const Error& err) {
    std::cerr << "shapeprobe: " << err.what() << "\n";
    return static_cast<int>(err.code());
  } catch (const std::exception& err) {
    std::cerr << "shapeprobe: " << err.what() << "\n";
    return static_cast<int>(ExitCode::kRuntime);
  }
  return 0;
}
