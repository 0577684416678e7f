// Command-line front end: dataset generation, base training, the refinement
// loop, standalone evaluation, analytic self-checks, near-duplicate scans,
// multi-mode comparisons and report regeneration.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "odst/calib.hpp"
#include "odst/core.hpp"
#include "odst/dedup.hpp"
#include "odst/experiment.hpp"
#include "odst/metrics.hpp"
#include "odst/model.hpp"
#include "odst/oracle.hpp"
#include "odst/report.hpp"
#include "odst/select.hpp"
#include "odst/synth.hpp"

namespace fs = std::filesystem;
using namespace odst;

namespace {

struct CommonOpts {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string mode;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonOpts& c, bool with_mode = true) {
  cmd->add_option("--config", c.config_path, "JSON experiment config (defaults when omitted)");
  cmd->add_option("--seed", c.seed, "override the config seed")->each([&](const std::string&) {
    c.seed_given = true;
  });
  if (with_mode) cmd->add_option("--mode", c.mode, "override the config mode");
  cmd->add_option("--threads", c.threads, "worker thread count (0 = hardware)");
}

runner::ExperimentConfig load_config(const CommonOpts& c) {
  runner::ExperimentConfig cfg;
  if (!c.config_path.empty())
    cfg = runner::config_from_json(report::read_text_file(c.config_path));
  if (c.seed_given) cfg.seed = c.seed;
  if (!c.mode.empty()) cfg.mode = model::mode_from_name(c.mode);
  if (c.threads > 0) setenv("ODST_THREADS", std::to_string(c.threads).c_str(), 1);
  runner::validate_config(cfg);
  return cfg;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

int cmd_gen(const CommonOpts& common, const std::string& out_dir) {
  auto cfg = load_config(common);
  auto data = runner::generate_data(cfg);
  fs::create_directories(out_dir);
  write_dataset((fs::path(out_dir) / "train.bin").string(), data.train);
  write_dataset((fs::path(out_dir) / "pool.bin").string(), data.pool);
  write_dataset((fs::path(out_dir) / "in_val.bin").string(), data.in_val);
  write_dataset((fs::path(out_dir) / "ood_val.bin").string(), data.ood_val);
  write_dataset((fs::path(out_dir) / "test.bin").string(), data.test);
  write_dataset((fs::path(out_dir) / "ood_test.bin").string(), data.ood_test);
  if (data.ood_far) write_dataset((fs::path(out_dir) / "ood_far.bin").string(), *data.ood_far);
  report::write_text_file((fs::path(out_dir) / "config.json").string(),
                          runner::config_to_json(cfg));
  std::string sums;
  for (const auto& [name, sum] : runner::data_checksums(data)) {
    sums += name + "\t" + hex64(sum) + "\n";
    std::cout << name << "\t" << hex64(sum) << "\n";
  }
  report::write_text_file((fs::path(out_dir) / "checksums.txt").string(), sums);
  return 0;
}

int cmd_run(const CommonOpts& common, const std::string& out_dir, int stop_after, bool no_resume,
            bool verbose) {
  auto cfg = load_config(common);
  runner::RunOptions opts;
  opts.resume = !no_resume;
  opts.stop_after = stop_after;
  opts.quiet = !verbose;
  auto res = runner::run_experiment(cfg, out_dir, opts);
  std::cout << metrics::report_csv(res.history, cfg.world.num_classes);
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
  return 0;
}

int cmd_eval(const CommonOpts& common, const std::string& model_path, std::string calib_file) {
  auto cfg = load_config(common);
  auto m = model::load_model(model_path);
  calib::Calibration cal;
  if (calib_file.empty()) {
    fs::path p(model_path);
    p.replace_extension(".calib");
    if (fs::exists(p)) calib_file = p.string();
  }
  if (!calib_file.empty()) cal = calib::load_calibration(calib_file);

  auto data = runner::generate_data(cfg);
  std::vector<std::vector<double>> val_x(data.in_val.size());
  std::vector<std::uint32_t> val_y(data.in_val.size());
  for (std::size_t i = 0; i < data.in_val.size(); ++i) {
    val_x[i] = data.in_val.samples[i].x;
    val_y[i] = data.in_val.samples[i].y;
  }
  auto raw = calib::predict_many(m, val_x, calib::Calibration{});
  auto scaled = calib::predict_many(m, val_x, cal);

  metrics::IterationReport row;
  row.iteration = 0;
  row.test_error = metrics::test_error(m, cal, data.test);
  auto in_conf = select::annotate_labeled(m, cal, data.test).confidence;
  const UnlabeledDataset& out_set = data.ood_far ? *data.ood_far : data.ood_test;
  auto out_conf = select::pseudo_label_pool(m, cal, out_set).confidence;
  row.auroc = metrics::auroc(in_conf, out_conf);
  row.ece_before = calib::ece(raw, val_y);
  row.ece_after = calib::ece(scaled, val_y);
  row.temperature = cal.temperature;
  std::cout << metrics::report_csv({row}, cfg.world.num_classes);
  return 0;
}

int cmd_oracle_check(const CommonOpts& common, int t_max, std::size_t n_samples, double tol,
                     const std::string& model_path, const std::string& calib_file) {
  auto cfg = load_config(common);
  auto bbox = synth::sample_unlabeled(cfg.world, 5000, derive_seed(cfg.seed, "oracle/bbox"));
  std::vector<std::vector<double>> feats(bbox.size());
  for (std::size_t i = 0; i < bbox.size(); ++i) feats[i] = bbox.samples[i].z;
  auto points = oracle::make_evaluation_points(cfg.world, {&feats}, n_samples,
                                               derive_seed(cfg.seed, "oracle/points"));

  double worst = 0.0;
  for (int t = 0; t <= t_max; ++t) {
    for (const auto& pt : points) {
      auto a = oracle::bayes_iter_closed(pt.oracle, t);
      auto b = oracle::bayes_iter_recursive(pt.oracle, t);
      for (std::size_t k = 0; k < a.values.size(); ++k)
        worst = std::max(worst, std::abs(a.values[k] - b.values[k]));
    }
  }
  std::cout << "points=" << points.size() << " t_max=" << t_max
            << " max_closed_vs_recursive=" << format_double(worst) << "\n";

  if (!model_path.empty()) {
    auto m = model::load_model(model_path);
    calib::Calibration cal;
    if (!calib_file.empty()) cal = calib::load_calibration(calib_file);
    oracle::Predictor pred = [&](const std::vector<double>& x) {
      return calib::predict(m, x, cal);
    };
    std::cout << "model_gap_base=" << format_double(oracle::oracle_gap(pred, points, -1)) << "\n";
    for (int t = 0; t <= t_max; ++t)
      std::cout << "model_gap_t" << t << "=" << format_double(oracle::oracle_gap(pred, points, t))
                << "\n";
  }
  return worst <= tol ? 0 : 2;
}

int cmd_dedup(const std::string& corpus_path, const std::string& refs_path,
              const std::string& out_dir, const dedup::DedupConfig& cfg) {
  auto corpus = dedup::read_images(corpus_path);
  auto refs = dedup::read_images(refs_path);
  auto res = dedup::dedup_run(corpus, refs, cfg);
  fs::create_directories(out_dir);

  std::string audit = "corpus_index,stage,ref_index,l2,ssim_dist,perceptual_dist\n";
  std::size_t removed = 0;
  for (const auto& r : res.audit) {
    audit += std::to_string(r.corpus_index) + "," + std::to_string(r.stage) + "," +
             std::to_string(r.ref_index) + "," + format_double(r.l2) + ",";
    audit += r.ssim_dist ? format_double(*r.ssim_dist) : std::string();
    audit += ",";
    audit += r.perceptual_dist ? format_double(*r.perceptual_dist) : std::string();
    audit += "\n";
  }
  std::string removed_list;
  for (std::size_t i = 0; i < res.removed.size(); ++i)
    if (res.removed[i]) {
      removed_list += std::to_string(i) + "\n";
      ++removed;
    }
  report::write_text_file((fs::path(out_dir) / "dedup_audit.csv").string(), audit);
  report::write_text_file((fs::path(out_dir) / "removed.txt").string(), removed_list);
  std::cout << "corpus=" << corpus.size() << " refs=" << refs.size() << " removed=" << removed
            << " kept=" << (corpus.size() - removed) << "\n";
  return 0;
}

int cmd_compare(const CommonOpts& common, const std::string& out_dir,
                const std::vector<std::string>& mode_names,
                const std::vector<std::uint64_t>& seeds, bool verbose) {
  auto cfg = load_config(common);
  std::vector<model::Mode> modes;
  for (const auto& name : mode_names) modes.push_back(model::mode_from_name(name));
  runner::RunOptions opts;
  opts.quiet = !verbose;
  auto res = runner::compare_modes(cfg, modes, seeds, out_dir, opts);
  std::printf("%-16s %6s %22s %22s %22s\n", "mode", "seeds", "base_error", "final_error",
              "final_auroc");
  for (const auto& s : res.summary) {
    std::printf("%-16s %6zu %12.4f +- %6.4f %12.4f +- %6.4f %12.4f +- %6.4f\n", s.mode.c_str(),
                s.num_seeds, s.base_error_mean, s.base_error_sd, s.final_error_mean,
                s.final_error_sd, s.final_auroc_mean, s.final_auroc_sd);
  }
  return 0;
}

int cmd_report(const std::string& out_dir) {
  auto history = metrics::parse_report_csv(
      report::read_text_file((fs::path(out_dir) / "metrics.csv").string()));
  auto selection = report::parse_selection_csv(
      report::read_text_file((fs::path(out_dir) / "selection.csv").string()));
  if (history.empty()) throw std::runtime_error("metrics.csv holds no rows");
  const auto num_classes = static_cast<std::uint32_t>(history.front().accepted.size());
  runner::emit_report(history, selection, num_classes, out_dir);
  std::cout << "rewrote metrics.csv, selection.csv and charts under " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-training laboratory for classification with an unlabeled open-world pool"};
  app.require_subcommand(1);

  CommonOpts common;
  std::string out_dir;
  int stop_after = -1;
  bool no_resume = false;
  bool verbose = false;

  auto* gen = app.add_subcommand("gen", "sample every dataset of a run and write them as binaries");
  add_common(gen, common, false);
  gen->add_option("--out", out_dir, "output directory")->required();

  auto* train_base = app.add_subcommand("train-base", "train and evaluate the base teacher only");
  add_common(train_base, common);
  train_base->add_option("--out", out_dir, "run directory")->required();
  train_base->add_flag("--no-resume", no_resume, "ignore existing state");
  train_base->add_flag("-v,--verbose", verbose, "progress on stderr");

  auto* iterate = app.add_subcommand("iterate", "run (or resume) the full refinement loop");
  add_common(iterate, common);
  iterate->add_option("--out", out_dir, "run directory")->required();
  iterate->add_option("--rounds", stop_after, "stop after this many refinement rounds");
  iterate->add_flag("--no-resume", no_resume, "ignore existing state");
  iterate->add_flag("-v,--verbose", verbose, "progress on stderr");

  std::string model_path, calib_file;
  auto* eval = app.add_subcommand("eval", "evaluate a saved checkpoint on regenerated data");
  add_common(eval, common, false);
  eval->add_option("--model", model_path, "model checkpoint")->required();
  eval->add_option("--calib", calib_file, "calibration sidecar (default: next to the model)");

  int t_max = 10;
  std::size_t oracle_samples = 10000;
  double tol = 1e-12;
  auto* oracle_check =
      app.add_subcommand("oracle-check", "closed form vs unrolled refinement targets");
  add_common(oracle_check, common, false);
  oracle_check->add_option("--t-max", t_max, "largest refinement index checked");
  oracle_check->add_option("--samples", oracle_samples, "fresh pool draws in the point set");
  oracle_check->add_option("--tol", tol, "max allowed deviation");
  oracle_check->add_option("--model", model_path, "also report this checkpoint's gap");
  oracle_check->add_option("--calib", calib_file, "calibration for --model");

  std::string corpus_path, refs_path;
  dedup::DedupConfig ded_cfg;
  auto* ded = app.add_subcommand("dedup", "scan an image corpus for near-duplicates of references");
  ded->add_option("--corpus", corpus_path, "corpus image container")->required();
  ded->add_option("--refs", refs_path, "reference image container")->required();
  ded->add_option("--out", out_dir, "output directory")->required();
  ded->add_option("--hard-radius", ded_cfg.hard_radius, "stage-1 removal radius");
  ded->add_option("--candidate-radius", ded_cfg.candidate_radius, "stage-2 candidate radius");
  ded->add_option("--ssim-dist-max", ded_cfg.ssim_dist_max, "stage-3 structural distance bound");

  std::vector<std::string> mode_names = {"ODST", "ST"};
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  auto* compare = app.add_subcommand("compare", "run several modes over shared data and seeds");
  add_common(compare, common, false);
  compare->add_option("--out", out_dir, "output root")->required();
  compare->add_option("--modes", mode_names, "modes to run")->delimiter(',');
  compare->add_option("--seeds", seeds, "seeds to run")->delimiter(',');
  compare->add_flag("-v,--verbose", verbose, "progress on stderr");

  auto* rep = app.add_subcommand("report", "regenerate charts from a run directory");
  rep->add_option("--out", out_dir, "run directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_gen(common, out_dir);
    if (*train_base) return cmd_run(common, out_dir, 0, no_resume, verbose);
    if (*iterate) return cmd_run(common, out_dir, stop_after, no_resume, verbose);
    if (*eval) return cmd_eval(common, model_path, calib_file);
    if (*oracle_check)
      return cmd_oracle_check(common, t_max, oracle_samples, tol, model_path, calib_file);
    if (*ded) return cmd_dedup(corpus_path, refs_path, out_dir, ded_cfg);
    if (*compare) return cmd_compare(common, out_dir, mode_names, seeds, verbose);
    if (*rep) return cmd_report(out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
