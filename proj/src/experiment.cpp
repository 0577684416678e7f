#include "odst/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <tuple>
#include <utility>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace odst::runner {

namespace {

// Re-throws any failure with a [stage] breadcrumb prepended.
template <typename F>
decltype(auto) stage(const char* name, F&& f) {
  try {
    return std::forward<F>(f)();
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("[") + name + "] " + e.what());
  }
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void check_keys(const json& obj, const char* where,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw std::runtime_error(std::string(where) + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        ok = true;
        break;
      }
    }
    if (!ok) throw std::runtime_error(std::string(where) + ": unknown key '" + it.key() + "'");
  }
}

std::vector<double> doubles_from(const json& j, const char* where) {
  if (!j.is_array()) throw std::runtime_error(std::string(where) + ": expected an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw std::runtime_error(std::string(where) + ": expected numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

synth::ComponentSpec component_from_json(const json& j, const char* where) {
  check_keys(j, where, {"mean", "var", "weight"});
  synth::ComponentSpec c;
  c.mean = doubles_from(j.at("mean"), where);
  c.var = doubles_from(j.at("var"), where);
  c.weight = j.at("weight").get<double>();
  return c;
}

synth::WorldSpec world_from_json(const json& j) {
  if (j.is_object() && j.contains("preset")) {
    check_keys(j, "world", {"preset"});
    return synth::world_from_preset(j.at("preset").get<std::string>());
  }
  check_keys(j, "world", {"d", "pi_in", "in_components", "out_components"});
  synth::WorldSpec w;
  w.d = j.at("d").get<std::uint32_t>();
  w.pi_in = j.at("pi_in").get<double>();
  for (const auto& c : j.at("in_components"))
    w.in_components.push_back(component_from_json(c, "world.in_components"));
  for (const auto& c : j.at("out_components"))
    w.out_components.push_back(component_from_json(c, "world.out_components"));
  w.num_classes = static_cast<std::uint32_t>(w.in_components.size());
  return w;
}

json world_to_json(const synth::WorldSpec& w) {
  json j;
  j["d"] = w.d;
  j["pi_in"] = w.pi_in;
  auto comps = [](const std::vector<synth::ComponentSpec>& cs) {
    json arr = json::array();
    for (const auto& c : cs) arr.push_back({{"mean", c.mean}, {"var", c.var}, {"weight", c.weight}});
    return arr;
  };
  j["in_components"] = comps(w.in_components);
  j["out_components"] = comps(w.out_components);
  return j;
}

json config_json(const ExperimentConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["mode"] = model::mode_name(cfg.mode);
  j["alpha"] = cfg.alpha;
  j["iterations"] = cfg.iterations;
  j["n"] = cfg.n;
  j["m"] = cfg.m;
  j["n_in_val"] = cfg.n_in_val;
  j["n_ood_val"] = cfg.n_ood_val;
  j["n_test"] = cfg.n_test;
  j["n_ood_test"] = cfg.n_ood_test;
  j["ood_far"] = cfg.ood_far;
  j["world"] = world_to_json(cfg.world);
  json t;
  t["epochs"] = cfg.train.epochs;
  t["batch_size"] = cfg.train.batch_size;
  t["learning_rate"] = cfg.train.learning_rate;
  t["lr_decay_epochs"] = cfg.train.lr_decay_epochs;
  t["lr_decay_factor"] = cfg.train.lr_decay_factor;
  t["momentum"] = cfg.train.momentum;
  t["weight_decay"] = cfg.train.weight_decay;
  t["lambda"] = cfg.train.lambda;
  t["hidden"] = cfg.train.hidden;
  t["warm_start"] = cfg.train.warm_start;
  j["train"] = t;
  return j;
}

std::vector<std::vector<double>> features_of(const LabeledDataset& ds) {
  std::vector<std::vector<double>> out(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) out[i] = ds.samples[i].x;
  return out;
}

std::vector<std::uint32_t> labels_of(const LabeledDataset& ds) {
  std::vector<std::uint32_t> out(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) out[i] = ds.samples[i].y;
  return out;
}

std::vector<std::vector<double>> logits_many(const model::Mlp& m,
                                             const std::vector<std::vector<double>>& xs) {
  std::vector<std::vector<double>> out(xs.size());
  parallel_for(xs.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = model::forward(m, xs[i]);
  });
  return out;
}

struct CalibFit {
  calib::Calibration cal;
  double ece_before = 0.0;
  double ece_after = 0.0;
};

CalibFit fit_on_validation(const model::Mlp& m, const std::vector<std::vector<double>>& val_x,
                           const std::vector<std::uint32_t>& val_y) {
  auto logits = logits_many(m, val_x);
  CalibFit out;
  out.cal = calib::fit_temperature(logits, val_y);
  std::vector<ProbVector> raw(logits.size());
  std::vector<ProbVector> scaled(logits.size());
  const calib::Calibration identity{};
  parallel_for(logits.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      raw[i] = calib::apply_temperature(logits[i], identity);
      scaled[i] = calib::apply_temperature(logits[i], out.cal);
    }
  });
  out.ece_before = calib::ece(raw, val_y);
  out.ece_after = calib::ece(scaled, val_y);
  return out;
}

// Which base objective feeds a given run mode: plain self-training variants
// start from a labeled-only teacher, everything else trains against the pool
// with uniform targets as well.
model::Mode base_mode_for(model::Mode m) {
  if (m == model::Mode::kBaseCe || m == model::Mode::kSt || m == model::Mode::kStOt)
    return model::Mode::kBaseCe;
  return model::Mode::kBaseOe;
}

metrics::IterationReport make_row(int iteration, const model::Mlp& m,
                                  const CalibFit& fit, const GeneratedData& data,
                                  const select::SelectionResult* sel) {
  metrics::IterationReport row;
  row.iteration = iteration;
  row.test_error = metrics::test_error(m, fit.cal, data.test);
  auto in_conf = select::annotate_labeled(m, fit.cal, data.test).confidence;
  const UnlabeledDataset& out_set = data.ood_far ? *data.ood_far : data.ood_test;
  auto out_conf = select::pseudo_label_pool(m, fit.cal, out_set).confidence;
  row.auroc = metrics::auroc(in_conf, out_conf);
  row.ece_before = fit.ece_before;
  row.ece_after = fit.ece_after;
  row.temperature = fit.cal.temperature;
  if (sel != nullptr) {
    row.accepted.reserve(sel->per_class.size());
    for (const auto& st : sel->per_class) row.accepted.push_back(st.accepted_unique);
    row.selection_precision = metrics::selection_precision(*sel, data.pool);
    row.selection_recall = metrics::selection_recall(*sel, data.pool);
  }
  return row;
}

std::string model_path(const std::string& out_dir, int iteration) {
  return (fs::path(out_dir) / ("model_iter" + std::to_string(iteration) + ".ckpt")).string();
}

std::string calib_path(const std::string& out_dir, int iteration) {
  return (fs::path(out_dir) / ("model_iter" + std::to_string(iteration) + ".calib")).string();
}

void dump_selection(const std::string& out_dir, int round, const select::SelectionResult& sel,
                    const UnlabeledDataset& pool) {
  std::string picks = "pool_index,class,confidence,repetitions\n";
  for (const auto& s : sel.selected) {
    picks += std::to_string(s.pool_index);
    picks += ',';
    picks += std::to_string(s.q.argmax());
    picks += ',';
    picks += format_double(s.q.max_entry());
    picks += ',';
    picks += std::to_string(s.repetitions);
    picks += '\n';
  }
  report::write_text_file(
      (fs::path(out_dir) / ("selected_iter" + std::to_string(round) + ".csv")).string(), picks);

  // Generator provenance for the same rows, kept in a separate audit file so
  // nothing on the selection path ever reads it.
  ProvenanceView view(pool);
  std::string audit = "pool_index,component,in_distribution\n";
  for (const auto& s : sel.selected) {
    audit += std::to_string(s.pool_index);
    audit += ',';
    audit += std::to_string(view.component(s.pool_index));
    audit += ',';
    audit += view.in_distribution(s.pool_index) ? '1' : '0';
    audit += '\n';
  }
  report::write_text_file(
      (fs::path(out_dir) / ("audit_iter" + std::to_string(round) + ".csv")).string(), audit);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

void validate_config(const ExperimentConfig& cfg) {
  synth::validate_world(cfg.world);
  if (cfg.n == 0 || cfg.m == 0 || cfg.n_in_val == 0 || cfg.n_ood_val == 0 || cfg.n_test == 0 ||
      cfg.n_ood_test == 0)
    throw std::invalid_argument("config: all dataset sizes must be positive");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0))
    throw std::invalid_argument("config: alpha must lie in (0, 1)");
  if (cfg.iterations < 0) throw std::invalid_argument("config: iterations must be >= 0");
  if (cfg.train.epochs < 1 || cfg.train.batch_size < 1)
    throw std::invalid_argument("config: epochs and batch_size must be >= 1");
  if (!(cfg.train.learning_rate > 0.0))
    throw std::invalid_argument("config: learning_rate must be positive");
  if (cfg.train.lambda < 0.0) throw std::invalid_argument("config: lambda must be >= 0");
  if (cfg.train.hidden.empty())
    throw std::invalid_argument("config: at least one hidden layer is required");
}

ExperimentConfig config_from_json(const std::string& text) {
  json j = json::parse(text);
  check_keys(j, "config",
             {"seed", "mode", "alpha", "iterations", "n", "m", "n_in_val", "n_ood_val", "n_test",
              "n_ood_test", "ood_far", "world", "train"});
  ExperimentConfig cfg;
  bool ood_test_given = false;
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("mode")) cfg.mode = model::mode_from_name(j.at("mode").get<std::string>());
  if (j.contains("alpha")) cfg.alpha = j.at("alpha").get<double>();
  if (j.contains("iterations")) cfg.iterations = j.at("iterations").get<int>();
  if (j.contains("n")) cfg.n = j.at("n").get<std::size_t>();
  if (j.contains("m")) cfg.m = j.at("m").get<std::size_t>();
  if (j.contains("n_in_val")) cfg.n_in_val = j.at("n_in_val").get<std::size_t>();
  if (j.contains("n_ood_val")) cfg.n_ood_val = j.at("n_ood_val").get<std::size_t>();
  if (j.contains("n_test")) cfg.n_test = j.at("n_test").get<std::size_t>();
  if (j.contains("n_ood_test")) {
    cfg.n_ood_test = j.at("n_ood_test").get<std::size_t>();
    ood_test_given = true;
  }
  if (j.contains("ood_far")) cfg.ood_far = j.at("ood_far").get<bool>();
  if (j.contains("world")) cfg.world = world_from_json(j.at("world"));
  if (!ood_test_given) cfg.n_ood_test = cfg.n_test;
  if (j.contains("train")) {
    const json& t = j.at("train");
    check_keys(t, "train",
               {"epochs", "batch_size", "learning_rate", "lr_decay_epochs", "lr_decay_factor",
                "momentum", "weight_decay", "lambda", "hidden", "warm_start"});
    if (t.contains("epochs")) cfg.train.epochs = t.at("epochs").get<int>();
    if (t.contains("batch_size")) cfg.train.batch_size = t.at("batch_size").get<int>();
    if (t.contains("learning_rate")) cfg.train.learning_rate = t.at("learning_rate").get<double>();
    if (t.contains("lr_decay_epochs"))
      cfg.train.lr_decay_epochs = t.at("lr_decay_epochs").get<std::vector<int>>();
    if (t.contains("lr_decay_factor"))
      cfg.train.lr_decay_factor = t.at("lr_decay_factor").get<double>();
    if (t.contains("momentum")) cfg.train.momentum = t.at("momentum").get<double>();
    if (t.contains("weight_decay")) cfg.train.weight_decay = t.at("weight_decay").get<double>();
    if (t.contains("lambda")) cfg.train.lambda = t.at("lambda").get<double>();
    if (t.contains("hidden")) cfg.train.hidden = t.at("hidden").get<std::vector<std::uint32_t>>();
    if (t.contains("warm_start")) cfg.train.warm_start = t.at("warm_start").get<bool>();
  }
  validate_config(cfg);
  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) { return config_json(cfg).dump(2) + "\n"; }

std::uint64_t config_fingerprint(const ExperimentConfig& cfg) {
  const std::string canonical = config_json(cfg).dump();
  return fnv1a64(canonical.data(), canonical.size());
}

GeneratedData generate_data(const ExperimentConfig& cfg) {
  validate_config(cfg);
  GeneratedData d;
  d.train = synth::sample_labeled(cfg.world, cfg.n, derive_seed(cfg.seed, "data/train"),
                                  DatasetRole::kTrain);
  d.pool = synth::sample_unlabeled(cfg.world, cfg.m, derive_seed(cfg.seed, "data/pool"));
  auto val = synth::make_validation_sets(cfg.world, cfg.n_in_val, cfg.n_ood_val,
                                         derive_seed(cfg.seed, "data/val"));
  d.in_val = std::move(val.first);
  d.ood_val = std::move(val.second);
  d.test = synth::sample_labeled(cfg.world, cfg.n_test, derive_seed(cfg.seed, "data/test"),
                                 DatasetRole::kTest);
  d.ood_test =
      synth::sample_ood(cfg.world, cfg.n_ood_test, derive_seed(cfg.seed, "data/ood_test"));
  if (cfg.ood_far) {
    synth::WorldSpec far = cfg.world;
    for (auto& c : far.out_components)
      for (auto& v : c.mean) v += 10.0;
    d.ood_far =
        synth::sample_ood(far, cfg.n_ood_test, derive_seed(cfg.seed, "data/ood_far"));
  }
  return d;
}

std::map<std::string, std::uint64_t> data_checksums(const GeneratedData& data) {
  std::map<std::string, std::uint64_t> out;
  out["train"] = checksum(data.train);
  out["pool"] = checksum(data.pool);
  out["in_val"] = checksum(data.in_val);
  out["ood_val"] = checksum(data.ood_val);
  out["test"] = checksum(data.test);
  out["ood_test"] = checksum(data.ood_test);
  if (data.ood_far) out["ood_far"] = checksum(*data.ood_far);
  return out;
}

void emit_report(const std::vector<metrics::IterationReport>& history,
                 const std::vector<report::SelectionCsvRow>& selection_rows,
                 std::uint32_t num_classes, const std::string& out_dir) {
  report::write_text_file((fs::path(out_dir) / "metrics.csv").string(),
                          metrics::report_csv(history, num_classes));
  report::write_text_file((fs::path(out_dir) / "selection.csv").string(),
                          report::selection_csv(selection_rows));

  std::vector<double> xs;
  for (const auto& r : history) xs.push_back(static_cast<double>(r.iteration));
  auto series_of = [&](const char* label, auto getter) {
    report::Series s;
    s.label = label;
    s.x = xs;
    for (const auto& r : history) s.y.push_back(getter(r));
    return s;
  };
  report::write_text_file(
      (fs::path(out_dir) / "test_error.svg").string(),
      report::svg_line_chart("Test error by refinement round", "round", "test error",
                             {series_of("test_error",
                                        [](const metrics::IterationReport& r) { return r.test_error; })}));
  report::write_text_file(
      (fs::path(out_dir) / "auroc.svg").string(),
      report::svg_line_chart("In/out separation by refinement round", "round", "AUROC",
                             {series_of("auroc",
                                        [](const metrics::IterationReport& r) { return r.auroc; })}));
  std::vector<report::Series> accepted;
  for (std::uint32_t c = 0; c < num_classes; ++c) {
    report::Series s;
    s.label = "class " + std::to_string(c);
    s.x = xs;
    for (const auto& r : history)
      s.y.push_back(c < r.accepted.size() ? static_cast<double>(r.accepted[c]) : 0.0);
    accepted.push_back(std::move(s));
  }
  report::write_text_file((fs::path(out_dir) / "accepted.svg").string(),
                          report::svg_line_chart("Accepted pseudo-labels per class", "round",
                                                 "accepted", accepted));
}

RunResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                         const RunOptions& opts) {
  validate_config(cfg);
  fs::create_directories(out_dir);

  RunResult res;
  res.out_dir = out_dir;

  GeneratedData data = stage("data", [&] { return generate_data(cfg); });
  res.checksums = data_checksums(data);

  const std::uint32_t num_classes = cfg.world.num_classes;
  const std::string state_path = (fs::path(out_dir) / "state.json").string();
  const std::string fingerprint = hex64(config_fingerprint(cfg));

  report::write_text_file((fs::path(out_dir) / "config.json").string(), config_to_json(cfg));

  auto log = [&](const std::string& line) {
    if (!opts.quiet) std::cerr << line << std::endl;
  };

  int completed = -1;  // -1: nothing, 0: base done, r: refinement round r done
  model::Mlp teacher;
  calib::Calibration teacher_cal;

  if (opts.resume && fs::exists(state_path)) {
    stage("resume", [&] {
      json st = json::parse(report::read_text_file(state_path));
      if (st.at("fingerprint").get<std::string>() != fingerprint)
        throw std::runtime_error("state.json belongs to a different configuration");
      completed = st.at("completed").get<int>();
      res.history = metrics::parse_report_csv(st.at("metrics_csv").get<std::string>());
      res.selection_rows = report::parse_selection_csv(st.at("selection_csv").get<std::string>());
      res.max_rest_confidence = st.at("max_rest_confidence").get<double>();
      res.warnings = st.at("warnings").get<std::vector<std::string>>();
      teacher = model::load_model(model_path(out_dir, completed));
      teacher_cal = calib::load_calibration(calib_path(out_dir, completed));
    });
    log("resumed at round " + std::to_string(completed));
  }

  auto persist = [&](double temperature) {
    json st;
    st["fingerprint"] = fingerprint;
    st["completed"] = completed;
    st["temperature"] = temperature;
    st["metrics_csv"] = metrics::report_csv(res.history, num_classes);
    st["selection_csv"] = report::selection_csv(res.selection_rows);
    st["max_rest_confidence"] = res.max_rest_confidence;
    st["warnings"] = res.warnings;
    report::write_text_file(state_path, st.dump(2) + "\n");
    emit_report(res.history, res.selection_rows, num_classes, out_dir);
  };

  const auto in_val_x = features_of(data.in_val);
  const auto in_val_y = labels_of(data.in_val);

  model::TrainHooks hooks;
  int current_round = 0;
  hooks.on_warning = [&](std::string_view msg) {
    res.warnings.push_back("round " + std::to_string(current_round) + ": " + std::string(msg));
  };

  if (completed < 0) {
    current_round = 0;
    stage("train-base", [&] {
      model::TrainConfig tc = cfg.train;
      tc.mode = base_mode_for(cfg.mode);
      tc.seed = derive_seed(cfg.seed, "train", 0);
      teacher = model::train_base(data.train, data.pool, tc, &data.in_val, hooks);
    });
    CalibFit fit = stage("calibrate", [&] { return fit_on_validation(teacher, in_val_x, in_val_y); });
    teacher_cal = fit.cal;
    metrics::IterationReport row =
        stage("evaluate", [&] { return make_row(0, teacher, fit, data, nullptr); });
    res.history.push_back(row);
    stage("persist", [&] {
      model::save_model(model_path(out_dir, 0), teacher);
      calib::save_calibration(calib_path(out_dir, 0), teacher_cal);
      completed = 0;
      persist(teacher_cal.temperature);
    });
    log("base: test_error=" + format_double(row.test_error) + " auroc=" + format_double(row.auroc));
  }

  const int total_rounds = model::is_base_mode(cfg.mode)
                               ? 0
                               : (cfg.mode == model::Mode::kNonIterative
                                      ? std::min(1, cfg.iterations)
                                      : cfg.iterations);

  while (completed < total_rounds) {
    if (opts.stop_after >= 0 && completed >= opts.stop_after) break;
    const int round = completed + 1;
    current_round = round;
    // A single refinement round uses the budget of the final scheduled round.
    const int t_sched = cfg.mode == model::Mode::kNonIterative ? cfg.iterations - 1 : round - 1;

    select::SelectionResult sel;
    select::SelectionThresholds thresholds;
    select::PseudoLabels pseudo;
    stage("select", [&] {
      auto ann_pool = select::pseudo_label_pool(teacher, teacher_cal, data.pool);
      auto ann_in_val = select::annotate_labeled(teacher, teacher_cal, data.in_val);
      auto ann_ood_val = select::pseudo_label_pool(teacher, teacher_cal, data.ood_val);
      const bool use_ood = cfg.mode != model::Mode::kSt;
      thresholds =
          select::compute_thresholds(ann_in_val, in_val_y, ann_ood_val, cfg.alpha, use_ood);
      const std::uint64_t k = select::k_schedule(cfg.n, num_classes, t_sched);
      sel = select::select_topk(ann_pool, thresholds, k, derive_seed(cfg.seed, "select", round));
      for (const auto& w : sel.warnings)
        res.warnings.push_back("round " + std::to_string(round) + ": " + w);
      pseudo = select::assign_pseudo_labels(data.pool, ann_pool, sel, select::v_rule_for(cfg.mode));
      res.max_rest_confidence = std::max(res.max_rest_confidence, pseudo.max_rest_confidence);
    });

    model::Mlp student;
    stage("train-student", [&] {
      model::TrainConfig tc = cfg.train;
      tc.mode = cfg.mode;
      tc.seed = derive_seed(cfg.seed, "train", static_cast<std::uint64_t>(round));
      student = model::train_student(data.train, pseudo.selected, pseudo.rest, tc, &data.in_val,
                                     &teacher, hooks);
    });
    CalibFit fit = stage("calibrate", [&] { return fit_on_validation(student, in_val_x, in_val_y); });
    metrics::IterationReport row =
        stage("evaluate", [&] { return make_row(round, student, fit, data, &sel); });
    res.history.push_back(row);
    for (std::uint32_t c = 0; c < num_classes; ++c) {
      report::SelectionCsvRow r;
      r.iteration = round;
      r.cls = c;
      r.accepted_unique = sel.per_class[c].accepted_unique;
      r.above_threshold = sel.per_class[c].above_threshold;
      r.repetitions = sel.per_class[c].repetitions;
      r.id_threshold = thresholds.id[c];
      r.ood_threshold = thresholds.ood[c];
      r.final_threshold = thresholds.final[c];
      res.selection_rows.push_back(r);
    }

    stage("persist", [&] {
      model::save_model(model_path(out_dir, round), student);
      calib::save_calibration(calib_path(out_dir, round), fit.cal);
      dump_selection(out_dir, round, sel, data.pool);
      teacher = std::move(student);
      teacher_cal = fit.cal;
      completed = round;
      persist(fit.cal.temperature);
    });
    log("round " + std::to_string(round) + ": test_error=" + format_double(row.test_error) +
        " auroc=" + format_double(row.auroc));
  }

  return res;
}

CompareResult compare_modes(const ExperimentConfig& base_cfg,
                            const std::vector<model::Mode>& modes,
                            const std::vector<std::uint64_t>& seeds,
                            const std::string& out_root, const RunOptions& opts) {
  if (modes.empty() || seeds.empty())
    throw std::invalid_argument("compare: need at least one mode and one seed");
  fs::create_directories(out_root);

  CompareResult out;
  std::map<std::uint64_t, std::map<std::string, std::uint64_t>> seen_checksums;

  for (model::Mode mode : modes) {
    std::vector<double> base_errs, final_errs, final_aurocs;
    for (std::uint64_t seed : seeds) {
      ExperimentConfig cfg = base_cfg;
      cfg.mode = mode;
      cfg.seed = seed;
      const std::string sub =
          (fs::path(out_root) / (std::string(model::mode_name(mode)) + "_seed" +
                                 std::to_string(seed)))
              .string();
      RunResult res = run_experiment(cfg, sub, opts);

      auto it = seen_checksums.find(seed);
      if (it == seen_checksums.end()) {
        seen_checksums.emplace(seed, res.checksums);
      } else if (it->second != res.checksums) {
        throw std::runtime_error("[compare] dataset checksums diverged between modes for seed " +
                                 std::to_string(seed));
      }

      CompareRunRow row;
      row.mode = model::mode_name(mode);
      row.seed = seed;
      row.train_checksum = res.checksums.at("train");
      row.base_test_error = res.history.front().test_error;
      row.final_test_error = res.history.back().test_error;
      row.final_auroc = res.history.back().auroc;
      out.runs.push_back(row);
      base_errs.push_back(row.base_test_error);
      final_errs.push_back(row.final_test_error);
      final_aurocs.push_back(row.final_auroc);
    }
    CompareSummaryRow sum;
    sum.mode = model::mode_name(mode);
    sum.num_seeds = seeds.size();
    sum.base_error_mean = mean_of(base_errs);
    sum.base_error_sd = sd_of(base_errs);
    sum.final_error_mean = mean_of(final_errs);
    sum.final_error_sd = sd_of(final_errs);
    sum.final_auroc_mean = mean_of(final_aurocs);
    sum.final_auroc_sd = sd_of(final_aurocs);
    out.summary.push_back(sum);
  }

  std::string runs_csv = "mode,seed,train_checksum,base_test_error,final_test_error,final_auroc\n";
  for (const auto& r : out.runs) {
    runs_csv += r.mode + "," + std::to_string(r.seed) + "," + hex64(r.train_checksum) + "," +
                format_double(r.base_test_error) + "," + format_double(r.final_test_error) + "," +
                format_double(r.final_auroc) + "\n";
  }
  report::write_text_file((fs::path(out_root) / "compare_runs.csv").string(), runs_csv);

  std::string sum_csv =
      "mode,num_seeds,base_error_mean,base_error_sd,final_error_mean,final_error_sd,"
      "final_auroc_mean,final_auroc_sd\n";
  for (const auto& s : out.summary) {
    sum_csv += s.mode + "," + std::to_string(s.num_seeds) + "," + format_double(s.base_error_mean) +
               "," + format_double(s.base_error_sd) + "," + format_double(s.final_error_mean) +
               "," + format_double(s.final_error_sd) + "," + format_double(s.final_auroc_mean) +
               "," + format_double(s.final_auroc_sd) + "\n";
  }
  report::write_text_file((fs::path(out_root) / "compare.csv").string(), sum_csv);

  return out;
}

}  // namespace odst::runner
