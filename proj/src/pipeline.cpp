#include "laq/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "laq/baselines.hpp"
#include "laq/distance.hpp"
#include "laq/nn.hpp"
#include "laq/rng.hpp"

namespace fs = std::filesystem;

namespace laq {

namespace {

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_config_artifact(const RunConfig& cfg, const std::string& dir) {
  fs::create_directories(dir);
  write_text(dir + "/config.txt", "# config_hash=" + cfg.hash_hex() + "\n" + cfg.canonical_text());
}

std::string case_name(const std::string& case_dir) {
  return fs::path(case_dir).filename().string();
}

void require_file(const std::string& path, const std::string& hint) {
  if (!fs::exists(path)) throw std::runtime_error("missing artifact " + path + " (" + hint + ")");
}

LabelMask threshold_half(const Volume& v) {
  LabelMask m(v.grid());
  for (std::size_t i = 0; i < v.size(); ++i) m[i] = v[i] > 0.5 ? 1 : 0;
  return m;
}

LabelMask mask_and(const LabelMask& a, const LabelMask& b) {
  LabelMask out(a.grid());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] != 0 && b[i] != 0) ? 1 : 0;
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty set");
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void require_finite(double v, const std::string& what) {
  if (!std::isfinite(v)) throw std::runtime_error("non-finite metric: " + what);
}

// Loads a training case whose targets were written by the targets command.
TrainCase load_prepared_case(const std::string& case_dir) {
  const std::string hint = "run the targets command first";
  for (const char* f : {"phi.lqv", "p_normal.lqv", "p_scar.lqv", "m1.lqv"})
    require_file(case_dir + "/" + std::string(f), hint);

  TrainCase tc;
  tc.id = case_name(case_dir);
  tc.image = zscore_normalize(load_volume(case_dir + "/image.lqv"));
  tc.la = load_mask(case_dir + "/la.lqv");
  tc.wall = load_mask(case_dir + "/wall.lqv");
  tc.scar = load_mask(case_dir + "/scar.lqv");
  tc.normal_wall = LabelMask(tc.wall.grid());
  for (std::size_t i = 0; i < tc.wall.size(); ++i)
    tc.normal_wall[i] = (tc.wall[i] != 0 && tc.scar[i] == 0) ? 1 : 0;
  tc.phi = load_volume(case_dir + "/phi.lqv");
  tc.targets.p_normal = load_volume(case_dir + "/p_normal.lqv");
  tc.targets.p_scar = load_volume(case_dir + "/p_scar.lqv");
  tc.m1 = load_mask(case_dir + "/m1.lqv");
  return tc;
}

std::vector<TrainCase> prepare_all(const std::vector<std::string>& case_dirs, double beta,
                                   int thickness) {
  std::vector<TrainCase> out;
  out.reserve(case_dirs.size());
  for (const std::string& d : case_dirs)
    out.push_back(prepare_case(load_case(d), case_name(d), beta, thickness));
  return out;
}

std::vector<TrainCase> copy_subset(const std::vector<TrainCase>& all,
                                   const std::vector<int>& idx) {
  std::vector<TrainCase> out;
  for (int i : idx) out.push_back(all[static_cast<std::size_t>(i)]);
  return out;
}

std::vector<int> selected_split(const std::string& which, const SplitIndices& split, int n) {
  if (which == "train") return split.train;
  if (which == "test") return split.test;
  if (which == "all") {
    std::vector<int> all(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
    return all;
  }
  throw std::invalid_argument("predict.split must be train, test, or all: " + which);
}

// One trained variant: la metrics come from the la-capable network, scar
// metrics from the scar network (the same object for multi-task variants).
struct VariantNets {
  std::optional<Network> la;
  std::optional<Network> scar;
};

VariantNets train_variant(const VariantSpec& v, std::uint64_t seed,
                          const std::vector<TrainCase>& train_set, const NetworkConfig& ncfg,
                          const TrainConfig& base) {
  VariantNets nets;
  if (v.multi_task) {
    TrainConfig tc = base;
    tc.seed = seed;
    tc.objective = *v.scar;
    nets.scar.emplace(ncfg, seed);
    train(*nets.scar, train_set, tc);
  } else {
    if (v.la) {
      TrainConfig tc = base;
      tc.seed = seed;
      tc.objective = *v.la;
      nets.la.emplace(ncfg, seed);
      train(*nets.la, train_set, tc);
    }
    if (v.scar) {
      TrainConfig tc = base;
      tc.seed = seed;
      tc.objective = *v.scar;
      nets.scar.emplace(ncfg, seed);
      train(*nets.scar, train_set, tc);
    }
  }
  return nets;
}

// Test-set means for one (variant, seed) run. The scar restriction band
// comes from the predicted cavity only for multi-task variants (their own
// cavity head is trained); single-task scar networks use the gold band.
MetricSummary evaluate_variant(const VariantSpec& v, VariantNets& nets,
                               const std::vector<TrainCase>& test_set, const RunConfig& cfg) {
  std::vector<MetricReport> reports;
  for (const TrainCase& tc : test_set) {
    std::optional<LabelMask> la_pred;
    std::optional<LabelMask> scar_pred;
    if (v.multi_task) {
      Network::Forward f = nets.scar->forward(tc.image);
      la_pred = threshold_half(f.y);
      LabelMask band = (!la_pred->empty() && !la_pred->full())
                           ? attention_mask(*la_pred, cfg.train.attention_thickness)
                           : attention_mask(tc.la, cfg.train.attention_thickness);
      scar_pred = mask_and(binarize_scar(f.p), band);
    } else {
      if (nets.la) la_pred = threshold_half(nets.la->forward(tc.image).y);
      if (nets.scar) {
        Network::Forward f = nets.scar->forward(tc.image);
        LabelMask band = attention_mask(tc.la, cfg.train.attention_thickness);
        scar_pred = mask_and(binarize_scar(f.p), band);
      }
    }
    reports.push_back(score_case(la_pred ? &*la_pred : nullptr, scar_pred ? &*scar_pred : nullptr,
                                 tc.la, tc.scar, cfg.d_max));
  }
  return summarize(reports);
}

}  // namespace

std::vector<std::string> discover_cases(const std::string& dataset_dir) {
  if (!fs::is_directory(dataset_dir))
    throw std::runtime_error("dataset directory not found: " + dataset_dir);
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dataset_dir)) {
    if (!e.is_directory()) continue;
    std::string name = e.path().filename().string();
    if (name.rfind("case_", 0) == 0) out.push_back(e.path().string());
  }
  std::sort(out.begin(), out.end());
  if (out.empty())
    throw std::runtime_error("no case_* directories under " + dataset_dir +
                             " (run the gen command first)");
  return out;
}

PhantomCase load_case(const std::string& case_dir) {
  for (const char* f : {"image.lqv", "la.lqv", "wall.lqv", "scar.lqv"})
    require_file(case_dir + "/" + std::string(f), "run the gen command first");
  PhantomCase pc;
  pc.image = load_volume(case_dir + "/image.lqv");
  pc.la = load_mask(case_dir + "/la.lqv");
  pc.wall = load_mask(case_dir + "/wall.lqv");
  pc.scar = load_mask(case_dir + "/scar.lqv");
  return pc;
}

MetricReport score_case(const LabelMask* pred_la, const LabelMask* pred_scar,
                        const LabelMask& gold_la, const LabelMask& gold_scar, double d_max) {
  MetricReport r;
  if (pred_la) {
    r.dice = dice(*pred_la, gold_la);
    if (pred_la->empty() || pred_la->full()) {
      // No extractable boundary; report the worst distance the grid allows.
      r.asd_mm = gold_la.grid().diagonal_mm();
      r.hd_mm = gold_la.grid().diagonal_mm();
    } else {
      r.asd_mm = asd(*pred_la, gold_la);
      r.hd_mm = hausdorff(*pred_la, gold_la);
    }
  }
  if (pred_scar) {
    SurfaceLabeling gold_surf = project_to_surface(gold_scar, gold_la, d_max);
    SurfaceLabeling pred_surf = project_to_surface(*pred_scar, gold_la, d_max);
    r.accuracy = surface_accuracy(pred_surf, gold_surf);
    r.dice_scar = dice_scar(pred_surf, gold_surf);
    r.gdice = generalized_dice(pred_surf, gold_surf);
  }
  return r;
}

VariantSpec parse_variant(const std::string& name) {
  if (name == "single-task-BCE")
    return {name, Objective::la_bce, Objective::scar_bce, false};
  if (name == "single-task-SE") return {name, Objective::la_se, Objective::scar_se, false};
  if (name == "single-task-Dice")
    return {name, Objective::la_dice, Objective::scar_dice, false};
  if (name == "MTL-BCE") return {name, Objective::mtl_bce, Objective::mtl_bce, true};
  if (name == "MTL-SE") return {name, Objective::mtl_se, Objective::mtl_se, true};
  if (name == "MTL-SESA") return {name, Objective::mtl_sesa, Objective::mtl_sesa, true};
  throw std::invalid_argument("unknown ablation variant: " + name);
}

void cmd_gen(const RunConfig& cfg, const std::string& out_dir) {
  if (cfg.cases < 1) throw std::invalid_argument("dataset.cases must be >= 1");
  generate_dataset(static_cast<int>(cfg.cases), cfg.phantom, cfg.seed, out_dir,
                   "config_hash=" + cfg.hash_hex());
  write_config_artifact(cfg, out_dir);
}

void cmd_targets(const RunConfig& cfg, const std::string& dataset_dir) {
  const std::vector<std::string> cases = discover_cases(dataset_dir);
  for (const std::string& cdir : cases) {
    LabelMask la = load_mask(cdir + "/la.lqv");
    LabelMask wall = load_mask(cdir + "/wall.lqv");
    LabelMask scar = load_mask(cdir + "/scar.lqv");

    save_volume(signed_dtm(la, cfg.train.beta), cdir + "/phi.lqv");
    ProbabilityPair targets = distance_probability_maps(scar, wall);
    save_volume(targets.p_normal, cdir + "/p_normal.lqv");
    save_volume(targets.p_scar, cdir + "/p_scar.lqv");
    save_volume(attention_mask(la, cfg.train.attention_thickness), cdir + "/m1.lqv");
    save_surface_labeling(project_to_surface(scar, la, cfg.d_max), cdir + "/gold_surface.csv");
  }
  std::string manifest = "beta=" + fmt(cfg.train.beta) +
                         "\nattention_thickness=" + std::to_string(cfg.train.attention_thickness) +
                         "\nd_max=" + fmt(cfg.d_max) + "\nconfig_hash=" + cfg.hash_hex() + "\n";
  write_text(dataset_dir + "/targets_manifest.txt", manifest);
}

namespace {

void check_targets_manifest(const RunConfig& cfg, const std::string& dataset_dir) {
  const std::string path = dataset_dir + "/targets_manifest.txt";
  require_file(path, "run the targets command first");
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    if (key == "beta" && val != fmt(cfg.train.beta))
      throw std::runtime_error("targets were built with beta=" + val + " but config says " +
                               fmt(cfg.train.beta) + "; re-run the targets command");
    if (key == "attention_thickness" && val != std::to_string(cfg.train.attention_thickness))
      throw std::runtime_error("targets were built with attention_thickness=" + val +
                               " but config says " + std::to_string(cfg.train.attention_thickness) +
                               "; re-run the targets command");
  }
}

}  // namespace

void cmd_train(const RunConfig& cfg, const std::string& dataset_dir, const std::string& out_dir) {
  const std::vector<std::string> cases = discover_cases(dataset_dir);
  check_targets_manifest(cfg, dataset_dir);
  const SplitIndices split =
      split_dataset(static_cast<int>(cases.size()), static_cast<int>(cfg.train_cases));

  std::vector<TrainCase> train_set;
  for (int i : split.train) train_set.push_back(load_prepared_case(cases[static_cast<std::size_t>(i)]));

  NetworkConfig ncfg;
  ncfg.input_dims = train_set.front().image.dims();
  ncfg.base_channels = cfg.base_channels;
  ncfg.levels = cfg.levels;
  Network net(ncfg, cfg.seed);

  TrainConfig tcfg = cfg.train;
  tcfg.seed = cfg.seed;
  std::vector<TrainLogRow> log = train(net, train_set, tcfg);

  fs::create_directories(out_dir);
  save_checkpoint(net, tcfg.iterations, out_dir + "/checkpoint.bin");
  write_text(out_dir + "/train_log.csv", train_log_csv(log));
  write_config_artifact(cfg, out_dir);
}

void cmd_predict(const RunConfig& cfg, const std::string& checkpoint_path,
                 const std::string& dataset_dir, const std::string& out_dir) {
  require_file(checkpoint_path, "run the train command first");
  Network net = restore_network(load_checkpoint(checkpoint_path));

  const std::vector<std::string> cases = discover_cases(dataset_dir);
  const int n = static_cast<int>(cases.size());
  const SplitIndices split = split_dataset(n, static_cast<int>(cfg.train_cases));
  const std::vector<int> selected = selected_split(cfg.predict_split, split, n);

  for (int i : selected) {
    const std::string& cdir = cases[static_cast<std::size_t>(i)];
    Volume image = load_volume(cdir + "/image.lqv");
    LabelMask gold_la = load_mask(cdir + "/la.lqv");

    Prediction pr = predict(net, image, cfg.d_max, cfg.train.attention_thickness);

    const bool use_pred_band = trains_la(cfg.train.objective) && pr.la_valid;
    LabelMask scar_pred;
    SurfaceLabeling surf;
    if (use_pred_band) {
      scar_pred = *pr.scar;
      surf = *pr.surface;
    } else {
      LabelMask band = attention_mask(gold_la, cfg.train.attention_thickness);
      scar_pred = mask_and(pr.scar_raw, band);
      surf = project_to_surface(scar_pred, gold_la, cfg.d_max);
    }

    const std::string odir = out_dir + "/" + case_name(cdir);
    fs::create_directories(odir);
    save_volume(pr.y, odir + "/y_pred.lqv");
    save_volume(pr.p.p_normal, odir + "/p_normal_pred.lqv");
    save_volume(pr.p.p_scar, odir + "/p_scar_pred.lqv");
    save_volume(pr.la, odir + "/la_pred.lqv");
    save_volume(pr.scar_raw, odir + "/scar_raw.lqv");
    save_volume(scar_pred, odir + "/scar_pred.lqv");
    save_surface_labeling(surf, odir + "/surface_pred.csv");
  }
  write_config_artifact(cfg, out_dir);
}

void cmd_baseline(const RunConfig& cfg, const std::string& dataset_dir,
                  const std::string& out_dir) {
  const std::vector<std::string> cases = discover_cases(dataset_dir);
  const int n = static_cast<int>(cases.size());
  const SplitIndices split = split_dataset(n, static_cast<int>(cfg.train_cases));
  const std::vector<int> selected = selected_split(cfg.predict_split, split, n);

  std::string rows = metric_csv_header();
  std::vector<MetricReport> reports;
  for (int i : selected) {
    const std::string& cdir = cases[static_cast<std::size_t>(i)];
    const std::string id = case_name(cdir);
    Volume image = load_volume(cdir + "/image.lqv");
    LabelMask la = load_mask(cdir + "/la.lqv");
    LabelMask wall = load_mask(cdir + "/wall.lqv");
    LabelMask scar = load_mask(cdir + "/scar.lqv");

    LabelMask band;
    if (cfg.baseline_band == "wall")
      band = wall;
    else if (cfg.baseline_band == "attention")
      band = attention_mask(la, cfg.train.attention_thickness);
    else
      throw std::invalid_argument("baseline.band must be wall or attention: " + cfg.baseline_band);

    SurfaceLabeling pred;
    if (cfg.baseline_method == "otsu") {
      pred = otsu_scar(image, band, la, cfg.d_max);
    } else if (cfg.baseline_method == "mgmm") {
      pred = mgmm_scar(image, band, la, cfg.components, cfg.scar_components, cfg.d_max,
                       derive_seed(cfg.seed, static_cast<std::uint64_t>(i)),
                       static_cast<int>(cfg.em_max_iter), cfg.em_tol, cfg.em_jitter);
    } else {
      throw std::invalid_argument("baseline.method must be otsu or mgmm: " + cfg.baseline_method);
    }

    SurfaceLabeling gold_surf = project_to_surface(scar, la, cfg.d_max);
    MetricReport r;
    r.accuracy = surface_accuracy(pred, gold_surf);
    r.dice_scar = dice_scar(pred, gold_surf);
    r.gdice = generalized_dice(pred, gold_surf);
    reports.push_back(r);
    rows += metric_csv_row(id, r);

    const std::string odir = out_dir + "/" + id;
    fs::create_directories(odir);
    save_surface_labeling(pred, odir + "/surface_pred.csv");
  }

  fs::create_directories(out_dir);
  write_text(out_dir + "/per_case.csv", rows);
  write_text(out_dir + "/summary.csv", summary_csv(summarize(reports)));
  write_config_artifact(cfg, out_dir);
}

void cmd_eval(const RunConfig& cfg, const std::string& dataset_dir, const std::string& pred_dir,
              const std::string& out_dir) {
  const std::vector<std::string> pred_cases = discover_cases(pred_dir);

  std::string rows = metric_csv_header();
  std::vector<MetricReport> reports;
  for (const std::string& pdir : pred_cases) {
    const std::string id = case_name(pdir);
    const std::string gdir = dataset_dir + "/" + id;
    require_file(gdir + "/la.lqv", "no gold case for " + id);
    LabelMask gold_la = load_mask(gdir + "/la.lqv");
    LabelMask gold_scar = load_mask(gdir + "/scar.lqv");

    std::optional<LabelMask> pred_la;
    std::optional<LabelMask> pred_scar;
    if (fs::exists(pdir + "/la_pred.lqv")) pred_la = load_mask(pdir + "/la_pred.lqv");
    if (fs::exists(pdir + "/scar_pred.lqv")) pred_scar = load_mask(pdir + "/scar_pred.lqv");

    MetricReport r = score_case(pred_la ? &*pred_la : nullptr, pred_scar ? &*pred_scar : nullptr,
                                gold_la, gold_scar, cfg.d_max);
    reports.push_back(r);
    rows += metric_csv_row(id, r);
  }

  fs::create_directories(out_dir);
  write_text(out_dir + "/per_case.csv", rows);
  write_text(out_dir + "/summary.csv", summary_csv(summarize(reports)));
  write_config_artifact(cfg, out_dir);
}

void cmd_ablate(const RunConfig& cfg, const std::string& dataset_dir, const std::string& out_dir) {
  std::vector<VariantSpec> variants;
  for (const std::string& name : split_list(cfg.variants)) variants.push_back(parse_variant(name));
  if (variants.empty()) throw std::invalid_argument("ablate.variants is empty");
  const std::vector<std::uint64_t> seeds = parse_seed_list(cfg.sweep_seeds);
  if (seeds.empty()) throw std::invalid_argument("ablate.seeds is empty");

  const std::vector<std::string> cases = discover_cases(dataset_dir);
  const SplitIndices split =
      split_dataset(static_cast<int>(cases.size()), static_cast<int>(cfg.train_cases));
  // beta varies per run config here, so targets are prepared in memory rather
  // than read from the targets artifacts.
  const std::vector<TrainCase> all =
      prepare_all(cases, cfg.train.beta, cfg.train.attention_thickness);
  const std::vector<TrainCase> train_set = copy_subset(all, split.train);
  const std::vector<TrainCase> test_set = copy_subset(all, split.test);

  NetworkConfig ncfg;
  ncfg.input_dims = all.front().image.dims();
  ncfg.base_channels = cfg.base_channels;
  ncfg.levels = cfg.levels;

  std::string csv = "variant,seed,dice,asd_mm,hd_mm,accuracy,dice_scar,gdice\n";
  for (const VariantSpec& v : variants) {
    std::vector<std::vector<double>> cols(6);
    for (std::uint64_t seed : seeds) {
      VariantNets nets = train_variant(v, seed, train_set, ncfg, cfg.train);
      MetricSummary s = evaluate_variant(v, nets, test_set, cfg);
      const double vals[6] = {s.dice.mean,     s.asd_mm.mean,    s.hd_mm.mean,
                              s.accuracy.mean, s.dice_scar.mean, s.gdice.mean};
      csv += v.name + "," + std::to_string(seed);
      for (int c = 0; c < 6; ++c) {
        require_finite(vals[c], v.name + " seed " + std::to_string(seed));
        cols[static_cast<std::size_t>(c)].push_back(vals[c]);
        csv += "," + fmt(vals[c]);
      }
      csv += "\n";
    }
    csv += v.name + ",median";
    for (int c = 0; c < 6; ++c) csv += "," + fmt(median(cols[static_cast<std::size_t>(c)]));
    csv += "\n";
  }

  fs::create_directories(out_dir);
  write_text(out_dir + "/ablation.csv", csv);
  write_config_artifact(cfg, out_dir);
}

void cmd_beta_study(const RunConfig& cfg, const std::string& dataset_dir,
                    const std::string& out_dir) {
  const std::vector<double> betas = parse_double_list(cfg.betas);
  if (betas.empty()) throw std::invalid_argument("beta.values is empty");
  for (double b : betas)
    if (!(b > 0.0)) throw std::invalid_argument("beta values must be positive");
  const std::vector<std::uint64_t> seeds = parse_seed_list(cfg.sweep_seeds);
  if (seeds.empty()) throw std::invalid_argument("ablate.seeds is empty");

  const std::vector<std::string> cases = discover_cases(dataset_dir);
  const SplitIndices split =
      split_dataset(static_cast<int>(cases.size()), static_cast<int>(cfg.train_cases));

  NetworkConfig ncfg;
  ncfg.base_channels = cfg.base_channels;
  ncfg.levels = cfg.levels;

  std::string csv = "beta,seed,dice,asd_mm,hd_mm\n";
  for (double beta : betas) {
    const std::vector<TrainCase> all = prepare_all(cases, beta, cfg.train.attention_thickness);
    const std::vector<TrainCase> train_set = copy_subset(all, split.train);
    const std::vector<TrainCase> test_set = copy_subset(all, split.test);
    ncfg.input_dims = all.front().image.dims();

    std::vector<std::vector<double>> cols(3);
    for (std::uint64_t seed : seeds) {
      TrainConfig tc = cfg.train;
      tc.objective = Objective::la_se;
      tc.beta = beta;
      tc.seed = seed;
      Network net(ncfg, seed);
      train(net, train_set, tc);

      std::vector<MetricReport> reports;
      for (const TrainCase& t : test_set) {
        LabelMask la_pred = threshold_half(net.forward(t.image).y);
        reports.push_back(score_case(&la_pred, nullptr, t.la, t.scar, cfg.d_max));
      }
      MetricSummary s = summarize(reports);
      const double vals[3] = {s.dice.mean, s.asd_mm.mean, s.hd_mm.mean};
      csv += fmt(beta) + "," + std::to_string(seed);
      for (int c = 0; c < 3; ++c) {
        require_finite(vals[c], "beta " + fmt(beta) + " seed " + std::to_string(seed));
        cols[static_cast<std::size_t>(c)].push_back(vals[c]);
        csv += "," + fmt(vals[c]);
      }
      csv += "\n";
    }
    csv += fmt(beta) + ",median";
    for (int c = 0; c < 3; ++c) csv += "," + fmt(median(cols[static_cast<std::size_t>(c)]));
    csv += "\n";
  }

  fs::create_directories(out_dir);
  write_text(out_dir + "/beta_study.csv", csv);
  write_config_artifact(cfg, out_dir);
}

}  // namespace laq
