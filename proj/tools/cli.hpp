// Copyright 2026 The hubrank Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end. Everything lives in `run` so tests can drive it in-process.

#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hubrank/hubrank.hpp"

namespace hubrank::cli {

namespace fs = std::filesystem;
using nlohmann::json;

/// Locale-independent shortest-general formatting with `precision` significant digits.
inline std::string fmt_num(double v, int precision) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, precision);
  return std::string(buf, res.ptr);
}

inline json num_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

struct OutputOptions {
  bool json = false;
  int precision = 6;
};

inline void add_output_flags(CLI::App* cmd, OutputOptions& o) {
  cmd->add_flag("--json", o.json, "Emit machine-readable JSON");
  cmd->add_option("--precision", o.precision, "Significant digits for numeric output")->check(CLI::Range(1, 17));
}

struct LabelSource {
  std::string path;
  std::string task = "classification";
  std::optional<int> classes;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--labels", path, "Class CSV (classification) or PTMF target matrix (regression)")->required();
    cmd->add_option("--task", task, "classification or regression")
        ->check(CLI::IsMember({"classification", "regression"}));
    cmd->add_option("--classes", classes, "Number of classes (default: max label + 1)");
  }
  TaskLabels load() const { return io::read_labels(path, parse_task_kind(task), classes); }
};

inline json convergence_json(const ConvergenceReport& c) {
  return {{"rank_condition", c.rank_condition},
          {"ordering_statistic", c.ordering_statistic},
          {"slope_at_infinity", num_or_null(c.slope_at_infinity)},
          {"limit_at_zero", c.limit_at_zero ? json(*c.limit_at_zero) : json(nullptr)},
          {"guaranteed", c.guaranteed},
          {"consistent", c.consistent}};
}

inline json report_json(const LogMeReport& r) {
  json dims = json::array();
  for (const auto& d : r.per_dimension) {
    const auto& s = d.solution;
    dims.push_back({{"index", d.index},
                    {"normalized_evidence", s.normalized_evidence},
                    {"log_evidence", s.log_evidence},
                    {"alpha", s.alpha},
                    {"beta", s.beta},
                    {"t", s.t},
                    {"gamma", s.gamma},
                    {"iterations", s.iterations},
                    {"converged", s.converged},
                    {"guaranteed", s.convergence.guaranteed}});
  }
  json skipped = json::array();
  for (const auto& s : r.skipped) skipped.push_back({{"index", s.index}, {"reason", s.reason}});
  return {{"logme", r.logme}, {"backend", std::string(to_string(r.backend))}, {"samples", r.samples},
          {"dims", r.dims},   {"per_dimension", dims},                       {"skipped", skipped}};
}

// ---- logme ---------------------------------------------------------------------------------

struct LogMeArgs {
  std::string features;
  LabelSource labels;
  std::string backend = "fixed-point";
  std::string dump_head;
  std::string model_id;
  bool verbose = false;
  bool intercept = false;
  OutputOptions out;
};

inline FeatureMatrix load_features(const std::string& path, bool intercept) {
  FeatureMatrix f = io::read_feature_file(path);
  return intercept ? with_intercept(f) : f;
}

inline int cmd_logme(const LogMeArgs& a, std::ostream& out) {
  const FeatureMatrix f = load_features(a.features, a.intercept);
  const TaskLabels labels = a.labels.load();
  const SvdFactors svd = decompose(f);
  const LogMeReport rep = compute_logme(f, svd, labels, parse_backend(a.backend));
  if (!a.dump_head.empty()) {
    const std::string id = a.model_id.empty() ? fs::path(a.features).stem().string() : a.model_id;
    io::write_head(a.dump_head, make_predictive_head(svd, rep, id, content_hash(f)));
  }
  if (a.out.json) {
    out << report_json(rep).dump(2) << "\n";
    return 0;
  }
  out << fmt_num(rep.logme, a.out.precision) << "\n";
  if (a.verbose) {
    for (const auto& d : rep.per_dimension)
      out << "dimension " << d.index << ": " << fmt_num(d.solution.normalized_evidence, a.out.precision)
          << " (alpha " << fmt_num(d.solution.alpha, a.out.precision) << ", beta "
          << fmt_num(d.solution.beta, a.out.precision) << ", iterations " << d.solution.iterations
          << (d.solution.converged ? "" : ", not converged") << ")\n";
    for (const auto& s : rep.skipped) out << "dimension " << s.index << ": skipped (" << s.reason << ")\n";
  }
  return 0;
}

// ---- rank ----------------------------------------------------------------------------------

struct RankArgs {
  std::string manifest;
  int k = 3;
  std::string backend = "fixed-point";
  bool intercept = false;
  OutputOptions out;
};

inline int cmd_rank(const RankArgs& a, std::ostream& out) {
  const io::HubManifest m = io::read_manifest(a.manifest);
  std::optional<TaskLabels> labels;
  if (m.labels_file) labels = io::read_labels(*m.labels_file, m.task, m.num_classes);
  const Backend backend = parse_backend(a.backend);

  std::vector<ScoredModel> scored(m.models.size());
  parallel_for(m.models.size(), [&](std::size_t i) {
    const auto& mm = m.models[i];
    scored[i].id = mm.id;
    if (mm.score) {
      scored[i].score = *mm.score;
    } else {
      const FeatureMatrix f = load_features(*mm.feature_file, a.intercept);
      scored[i].score = compute_logme(f, *labels, backend).logme;
    }
  });

  std::optional<std::vector<double>> truths;
  if (m.has_truths()) {
    truths.emplace();
    for (const auto& mm : m.models) truths->push_back(*mm.truth);
  }
  const RankReport rep = rank_hub(scored, truths, m.truth_direction);
  if (a.k <= 0) throw InputError("--k must be >= 1");
  const int k = std::min<int>(a.k, static_cast<int>(rep.ordering.size()));
  const auto top = select_top_k(rep, k);

  if (a.out.json) {
    json rows = json::array();
    for (std::size_t i = 0; i < rep.ordering.size(); ++i)
      rows.push_back({{"rank", i + 1}, {"id", rep.ordering[i]}, {"logme", rep.ordered_scores[i]}});
    json j = {{"dataset", m.dataset}, {"ranking", rows}, {"top_k", top}, {"k", k}};
    j["tau"] = rep.tau ? json(*rep.tau) : json(nullptr);
    j["tau_w"] = rep.tau_w ? json(*rep.tau_w) : json(nullptr);
    if (rep.tau_w_error) j["tau_w_error"] = *rep.tau_w_error;
    out << j.dump(2) << "\n";
    return 0;
  }
  out << "rank\tid\tlogme\n";
  for (std::size_t i = 0; i < rep.ordering.size(); ++i)
    out << i + 1 << "\t" << rep.ordering[i] << "\t" << fmt_num(rep.ordered_scores[i], a.out.precision) << "\n";
  if (rep.tau) out << "tau\t" << fmt_num(*rep.tau, a.out.precision) << "\n";
  if (rep.tau_w) out << "tau_w\t" << fmt_num(*rep.tau_w, a.out.precision) << "\n";
  if (rep.tau_w_error) out << "tau_w\tundefined (" << *rep.tau_w_error << ")\n";
  out << "top-" << k << "\t";
  for (std::size_t i = 0; i < top.size(); ++i) out << (i ? "," : "") << top[i];
  out << "\n";
  return 0;
}

// ---- curve ---------------------------------------------------------------------------------

struct CurveArgs {
  std::string features;
  LabelSource labels;
  int label_class = 0;
  std::string t_range = "1e-4:1e4";
  int points = 81;
  bool linear = false;
  bool intercept = false;
  OutputOptions out;
};

inline std::pair<double, double> parse_range(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw InputError("--t-range must look like LO:HI");
  double lo = 0, hi = 0;
  const std::string a = s.substr(0, colon), b = s.substr(colon + 1);
  auto parse = [](const std::string& x, double& v) {
    const auto [p, ec] = std::from_chars(x.data(), x.data() + x.size(), v);
    return ec == std::errc() && p == x.data() + x.size();
  };
  if (!parse(a, lo) || !parse(b, hi) || !(lo > 0) || !(hi > lo))
    throw InputError("--t-range needs 0 < LO < HI, got '" + s + "'");
  return {lo, hi};
}

inline int cmd_curve(const CurveArgs& a, std::ostream& out) {
  const FeatureMatrix f = load_features(a.features, a.intercept);
  const TaskLabels labels = a.labels.load();
  if (labels.samples() != f.samples()) throw InputError("labels and features disagree on sample count");
  const SvdFactors svd = decompose(f);
  const LabelVector y(labels.column(a.label_class));
  const ProjectedLabels proj = project_labels(svd, y);
  const auto [lo, hi] = parse_range(a.t_range);
  if (a.points < 2) throw InputError("--points must be >= 2");

  std::optional<double> t_star;
  try {
    t_star = maximize_evidence_fixed_point(svd, y).t;
  } catch (const DegenerateLabelsError&) {
  }

  std::vector<std::pair<double, double>> rows;
  for (int i = 0; i < a.points; ++i) {
    const double u = static_cast<double>(i) / (a.points - 1);
    const double t = a.linear ? lo + u * (hi - lo) : lo * std::pow(hi / lo, u);
    rows.emplace_back(t, fixed_point_map(svd, proj, t));
  }
  if (a.out.json) {
    json pts = json::array();
    for (auto [t, ft] : rows) pts.push_back({t, ft});
    out << json{{"class", a.label_class}, {"t_star", t_star ? json(*t_star) : json(nullptr)}, {"points", pts}}.dump(2)
        << "\n";
    return 0;
  }
  out << "t,f_t\n";
  for (auto [t, ft] : rows) out << fmt_num(t, a.out.precision) << "," << fmt_num(ft, a.out.precision) << "\n";
  return 0;
}

// ---- verify --------------------------------------------------------------------------------

struct VerifyArgs {
  std::string features;
  LabelSource labels;
  std::optional<int> label_class;
  bool intercept = false;
  OutputOptions out;
};

inline int cmd_verify(const VerifyArgs& a, std::ostream& out) {
  const FeatureMatrix f = load_features(a.features, a.intercept);
  const TaskLabels labels = a.labels.load();
  if (labels.samples() != f.samples()) throw InputError("labels and features disagree on sample count");
  const SvdFactors svd = decompose(f);
  if (svd.rank() == 0) throw DegenerateLabelsError("features carry no signal (numerical rank 0)");

  std::vector<int> dims;
  if (a.label_class) dims.push_back(*a.label_class);
  else
    for (int c = 0; c < labels.dims(); ++c) dims.push_back(c);

  json rows = json::array();
  bool all = true;
  std::ostringstream text;
  for (int c : dims) {
    const LabelVector y(labels.column(c));
    const ConvergenceReport rep = check_convergence(svd, project_labels(svd, y));
    all = all && rep.guaranteed;
    json j = convergence_json(rep);
    j["dimension"] = c;
    rows.push_back(j);
    const int p = a.out.precision;
    text << "dimension " << c << ": rank_condition=" << (rep.rank_condition ? "true" : "false")
         << " ordering_statistic=" << fmt_num(rep.ordering_statistic, p)
         << " slope_at_infinity=" << fmt_num(rep.slope_at_infinity, p) << " limit_at_zero="
         << (rep.limit_at_zero ? fmt_num(*rep.limit_at_zero, p) : std::string("undefined"))
         << " guaranteed=" << (rep.guaranteed ? "true" : "false") << "\n";
  }
  if (a.out.json) {
    out << json{{"rank", svd.rank()}, {"samples", svd.samples}, {"dimensions", rows}, {"all_guaranteed", all}}.dump(2)
        << "\n";
    return 0;
  }
  out << "rank " << svd.rank() << " of " << svd.samples << " samples\n" << text.str();
  out << "convergence guaranteed for all dimensions: " << (all ? "yes" : "no") << "\n";
  return 0;
}

// ---- bench ---------------------------------------------------------------------------------

struct BenchArgs {
  long long n = 1000;
  long long d = 128;
  int c = 10;
  std::string algos = "naive,mackay,fixed-point";
  int repeats = 1;
  unsigned long long seed = 0;
  OutputOptions out;
};

inline int cmd_bench(const BenchArgs& a, std::ostream& out) {
  bench::BenchSpec spec;
  spec.samples = a.n;
  spec.dims = a.d;
  spec.classes = a.c;
  spec.repeats = a.repeats;
  spec.seed = a.seed;
  spec.backends.clear();
  std::stringstream ss(a.algos);
  for (std::string name; std::getline(ss, name, ',');)
    if (!name.empty()) spec.backends.push_back(parse_backend(name));
  const bench::BenchResult r = bench::run_benchmark(spec);

  if (a.out.json) {
    json results = json::array();
    for (const auto& t : r.timings)
      results.push_back({{"algo", std::string(to_string(t.backend))},
                         {"logme", t.logme},
                         {"seconds", t.seconds},
                         {"mean_seconds", t.mean_seconds()},
                         {"min_seconds", t.min_seconds()}});
    out << json{{"n", spec.samples},
                {"d", spec.dims},
                {"c", spec.classes},
                {"repeats", spec.repeats},
                {"seed", spec.seed},
                {"agreement", {{"max_abs_diff", r.max_disagreement}, {"tolerance", spec.agreement_tolerance}}},
                {"results", results}}
               .dump(2)
        << "\n";
    return 0;
  }
  out << "algo\tlogme\tmean_s\tmin_s\n";
  for (const auto& t : r.timings)
    out << to_string(t.backend) << "\t" << fmt_num(t.logme, a.out.precision) << "\t"
        << fmt_num(t.mean_seconds(), a.out.precision) << "\t" << fmt_num(t.min_seconds(), a.out.precision) << "\n";
  out << "max backend disagreement\t" << fmt_num(r.max_disagreement, a.out.precision) << "\n";
  return 0;
}

// ---- btune-toy -----------------------------------------------------------------------------

/// Config file: {"task": {...ToyTaskSpec fields...}, "tune": {...TuneConfig fields...}}.
inline std::pair<toy::ToyTaskSpec, toy::TuneConfig> parse_toy_config(const json& j) {
  toy::ToyTaskSpec spec;
  toy::TuneConfig cfg;
  auto check_keys = [](const json& obj, std::initializer_list<std::string_view> allowed, const char* where) {
    if (!obj.is_object()) throw InputError(std::string(where) + " must be an object");
    for (const auto& [key, _] : obj.items()) {
      bool ok = false;
      for (auto k : allowed) ok = ok || key == k;
      if (!ok) throw InputError("unknown key '" + key + "' in " + where);
    }
  };
  check_keys(j, {"task", "tune"}, "toy config");
  if (j.contains("task")) {
    const auto& t = j.at("task");
    check_keys(t,
               {"kind", "train_samples", "test_samples", "classes", "cluster_separation", "cluster_std", "slope",
                "observation_noise", "label_noise", "student_noise", "nuisance_dims", "teacher_noise",
                "teacher_dims", "seed"},
               "task");
    if (t.contains("kind")) spec.kind = parse_task_kind(t.at("kind").get<std::string>());
    spec.train_samples = t.value("train_samples", spec.train_samples);
    spec.test_samples = t.value("test_samples", spec.test_samples);
    spec.classes = t.value("classes", spec.classes);
    spec.cluster_separation = t.value("cluster_separation", spec.cluster_separation);
    spec.cluster_std = t.value("cluster_std", spec.cluster_std);
    spec.slope = t.value("slope", spec.slope);
    spec.observation_noise = t.value("observation_noise", spec.observation_noise);
    spec.label_noise = t.value("label_noise", spec.label_noise);
    spec.student_noise = t.value("student_noise", spec.student_noise);
    spec.nuisance_dims = t.value("nuisance_dims", spec.nuisance_dims);
    spec.teacher_noise = t.value("teacher_noise", spec.teacher_noise);
    spec.teacher_dims = t.value("teacher_dims", spec.teacher_dims);
    spec.seed = t.value("seed", spec.seed);
  }
  if (j.contains("tune")) {
    const auto& t = j.at("tune");
    check_keys(t, {"lambda", "learning_rate", "steps", "seed", "regularizer", "teachers", "student_dims"}, "tune");
    cfg.lambda = t.value("lambda", cfg.lambda);
    cfg.learning_rate = t.value("learning_rate", cfg.learning_rate);
    cfg.steps = t.value("steps", cfg.steps);
    cfg.seed = t.value("seed", cfg.seed);
    if (t.contains("regularizer")) cfg.regularizer = toy::parse_regularizer(t.at("regularizer").get<std::string>());
    cfg.teachers = t.value("teachers", cfg.teachers);
    cfg.student_dims = t.value("student_dims", cfg.student_dims);
  }
  spec.validate();
  cfg.validate();
  return {spec, cfg};
}

inline json train_report_json(const toy::TrainReport& r, const toy::ToyTaskSpec& spec) {
  const auto& c = r.config;
  json j;
  j["config"] = {{"lambda", c.lambda},
                 {"learning_rate", c.learning_rate},
                 {"steps", c.steps},
                 {"seed", c.seed},
                 {"regularizer", std::string(toy::to_string(c.regularizer))},
                 {"teachers", c.teachers},
                 {"student_dims", c.student_dims}};
  j["task"] = {{"kind", std::string(to_string(spec.kind))}, {"train_samples", spec.train_samples},
               {"test_samples", spec.test_samples},         {"seed", spec.seed},
               {"teacher_noise", spec.teacher_noise}};
  j["seed"] = c.seed;
  j["teacher_ids"] = r.teacher_ids;
  j["task_loss"] = r.task_loss;
  j["regularizer_loss"] = r.regularizer_loss;
  j["total_loss"] = r.total_loss;
  if (spec.kind == TaskKind::classification) {
    j["train_accuracy"] = r.train_accuracy;
    j["test_accuracy"] = r.test_accuracy;
  } else {
    j["test_mse"] = r.test_mse;
  }
  return j;
}

struct ToyArgs {
  std::string config;
  OutputOptions out;
};

inline int cmd_btune_toy(const ToyArgs& a, std::ostream& out) {
  json j = json::object();
  if (!a.config.empty()) {
    std::ifstream in(a.config);
    if (!in) throw InputError("cannot open '" + a.config + "'");
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw FormatError(std::string("toy config is not valid JSON: ") + e.what(), e.byte);
    }
  }
  const auto [spec, cfg] = parse_toy_config(j);
  const toy::TrainReport r = toy::run_toy(spec, cfg);
  if (a.out.json) {
    out << train_report_json(r, spec).dump(2) << "\n";
    return 0;
  }
  const int p = a.out.precision;
  out << "regularizer\t" << toy::to_string(cfg.regularizer) << "\n";
  out << "lambda\t" << fmt_num(cfg.lambda, p) << "\n";
  out << "final_total_loss\t" << fmt_num(r.total_loss.back(), p) << "\n";
  if (spec.kind == TaskKind::classification) {
    out << "train_accuracy\t" << fmt_num(r.train_accuracy, p) << "\n";
    out << "test_accuracy\t" << fmt_num(r.test_accuracy, p) << "\n";
  } else {
    out << "test_mse\t" << fmt_num(r.test_mse, p) << "\n";
  }
  return 0;
}

// ---- predict -------------------------------------------------------------------------------

struct PredictArgs {
  std::string head;
  std::string features;
  std::optional<int> label_class;
  bool check_hash = false;
  bool intercept = false;
  OutputOptions out;
};

inline int cmd_predict(const PredictArgs& a, std::ostream& out) {
  const FeatureMatrix f = load_features(a.features, a.intercept);
  const PredictiveHead h =
      a.check_hash ? io::read_head(a.head, content_hash(f)) : io::read_head(a.head);
  if (f.dims() != h.feature_dim())
    throw InputError("features have " + std::to_string(f.dims()) + " dimensions, head expects " +
                     std::to_string(h.feature_dim()));
  std::vector<int> classes;
  if (a.label_class) {
    h.require_class(*a.label_class);
    classes.push_back(*a.label_class);
  } else {
    for (int c = 0; c < h.classes(); ++c)
      if (h.evaluated[static_cast<std::size_t>(c)]) classes.push_back(c);
  }
  json rows = json::array();
  if (!a.out.json) out << "row,class,mean,variance\n";
  for (Index i = 0; i < f.samples(); ++i) {
    const VectorXd q = f.data().row(i).transpose();
    for (int c : classes) {
      const PredictiveMoments m = predictive_distribution(h, c, q);
      if (a.out.json)
        rows.push_back({{"row", i}, {"class", c}, {"mean", m.mean}, {"variance", m.variance}});
      else
        out << i << "," << c << "," << fmt_num(m.mean, a.out.precision) << "," << fmt_num(m.variance, a.out.precision)
            << "\n";
    }
  }
  if (a.out.json) out << json{{"model_id", h.model_id}, {"predictions", rows}}.dump(2) << "\n";
  return 0;
}

// ---- dispatch ------------------------------------------------------------------------------

/// Exit codes: 0 success, 1 input/format error, 2 usage error, 3 degenerate data, 4 other.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"hubrank: rank pre-trained models by LogME and build B-Tuning targets"};
  app.require_subcommand(1);

  LogMeArgs logme;
  auto* c_logme = app.add_subcommand("logme", "LogME of one feature file");
  c_logme->add_option("--features", logme.features, "PTMF feature file")->required();
  logme.labels.add_to(c_logme);
  c_logme->add_option("--backend", logme.backend, "naive, mackay or fixed-point");
  c_logme->add_option("--dump-head", logme.dump_head, "Write the posterior predictive head here");
  c_logme->add_option("--model-id", logme.model_id, "Model id recorded in the head dump");
  c_logme->add_flag("--verbose,-v", logme.verbose, "Per-dimension values");
  c_logme->add_flag("--intercept", logme.intercept, "Append a constant feature column");
  add_output_flags(c_logme, logme.out);

  RankArgs rank;
  auto* c_rank = app.add_subcommand("rank", "Rank every model of a hub manifest");
  c_rank->add_option("--manifest", rank.manifest, "Hub manifest (JSON)")->required();
  c_rank->add_option("--k", rank.k, "Number of top models to select");
  c_rank->add_option("--backend", rank.backend, "naive, mackay or fixed-point");
  c_rank->add_flag("--intercept", rank.intercept, "Append a constant feature column");
  add_output_flags(c_rank, rank.out);

  CurveArgs curve;
  auto* c_curve = app.add_subcommand("curve", "Sample the fixed-point map t' = f(t) as CSV");
  c_curve->add_option("--features", curve.features, "PTMF feature file")->required();
  curve.labels.add_to(c_curve);
  c_curve->add_option("--class", curve.label_class, "Label dimension");
  c_curve->add_option("--t-range", curve.t_range, "LO:HI");
  c_curve->add_option("--points", curve.points, "Number of samples");
  c_curve->add_flag("--linear", curve.linear, "Linear instead of logarithmic t spacing");
  c_curve->add_flag("--intercept", curve.intercept, "Append a constant feature column");
  add_output_flags(c_curve, curve.out);

  VerifyArgs verify;
  auto* c_verify = app.add_subcommand("verify", "Check the fixed-point existence condition");
  c_verify->add_option("--features", verify.features, "PTMF feature file")->required();
  verify.labels.add_to(c_verify);
  c_verify->add_option("--class", verify.label_class, "Only this label dimension");
  c_verify->add_flag("--intercept", verify.intercept, "Append a constant feature column");
  add_output_flags(c_verify, verify.out);

  BenchArgs bench_args;
  auto* c_bench = app.add_subcommand("bench", "Time the evidence-maximization backends");
  c_bench->add_option("--n", bench_args.n, "Samples")->check(CLI::PositiveNumber);
  c_bench->add_option("--d", bench_args.d, "Feature dimension")->check(CLI::PositiveNumber);
  c_bench->add_option("--c", bench_args.c, "Classes")->check(CLI::PositiveNumber);
  c_bench->add_option("--algos", bench_args.algos, "Comma-separated backends");
  c_bench->add_option("--repeats", bench_args.repeats, "Timed repeats")->check(CLI::PositiveNumber);
  c_bench->add_option("--seed", bench_args.seed, "Data seed");
  add_output_flags(c_bench, bench_args.out);

  ToyArgs toy_args;
  auto* c_toy = app.add_subcommand("btune-toy", "Run the toy B-Tuning simulation");
  c_toy->add_option("--config", toy_args.config, "JSON config (defaults when omitted)");
  add_output_flags(c_toy, toy_args.out);

  PredictArgs predict;
  auto* c_predict = app.add_subcommand("predict", "Posterior predictive mean and variance");
  c_predict->add_option("--head", predict.head, "Head dump from `logme --dump-head`")->required();
  c_predict->add_option("--features", predict.features, "PTMF query features")->required();
  c_predict->add_option("--class", predict.label_class, "Only this class");
  c_predict->add_flag("--check-hash", predict.check_hash, "Require the query file to be the head's training features");
  c_predict->add_flag("--intercept", predict.intercept, "Append a constant feature column, as for `logme --intercept`");
  add_output_flags(c_predict, predict.out);

  std::reverse(args.begin(), args.end());
  try {
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*c_logme) return cmd_logme(logme, out);
    if (*c_rank) return cmd_rank(rank, out);
    if (*c_curve) return cmd_curve(curve, out);
    if (*c_verify) return cmd_verify(verify, out);
    if (*c_bench) return cmd_bench(bench_args, out);
    if (*c_toy) return cmd_btune_toy(toy_args, out);
    if (*c_predict) return cmd_predict(predict, out);
  } catch (const DegenerateLabelsError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 4;
  }
  return 2;
}

}  // namespace hubrank::cli
