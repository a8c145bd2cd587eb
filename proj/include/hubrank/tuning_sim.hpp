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

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hubrank/errors.hpp"
#include "hubrank/features.hpp"
#include "hubrank/logme.hpp"
#include "hubrank/predictive.hpp"
#include "hubrank/ranking.hpp"

namespace hubrank::toy {

enum class Regularizer { none, bayesian, kd };

inline std::string_view to_string(Regularizer r) {
  switch (r) {
    case Regularizer::none: return "none";
    case Regularizer::bayesian: return "bayesian";
    case Regularizer::kd: return "kd";
  }
  return "unknown";
}

inline Regularizer parse_regularizer(std::string_view s) {
  if (s == "none") return Regularizer::none;
  if (s == "bayesian" || s == "b-tuning") return Regularizer::bayesian;
  if (s == "kd") return Regularizer::kd;
  throw InputError("unknown regularizer '" + std::string(s) + "'");
}

/// Synthetic task. Each sample has a clean latent code: a point from one of `classes`
/// Gaussian clusters on a circle (classification), or a scalar x with y = slope * x + noise
/// (regression). The student only sees a corrupted copy of the latent padded with nuisance
/// dimensions; teacher k sees the latent with its own corruption level through a fixed random
/// linear map plus a constant feature.
struct ToyTaskSpec {
  TaskKind kind = TaskKind::classification;
  int train_samples = 40;
  int test_samples = 2000;
  int classes = 3;
  double cluster_separation = 1.0;
  double cluster_std = 0.5;
  double slope = 2.0;
  double observation_noise = 0.1;
  double label_noise = 0.0;
  double student_noise = 0.3;
  int nuisance_dims = 30;
  std::vector<double> teacher_noise{0.0};
  int teacher_dims = 8;
  std::uint64_t seed = 0;

  void validate() const {
    if (train_samples < 2 || test_samples < 1) throw InputError("toy task needs >= 2 train and >= 1 test samples");
    if (kind == TaskKind::classification && classes < 2) throw InputError("toy classification needs >= 2 classes");
    if (cluster_std < 0 || observation_noise < 0 || student_noise < 0 || nuisance_dims < 0)
      throw InputError("toy noise levels and dimensions must be non-negative");
    if (label_noise < 0 || label_noise > 1) throw InputError("label_noise must lie in [0, 1]");
    if (teacher_dims < 2) throw InputError("teacher_dims must be at least 2");
    for (double t : teacher_noise)
      if (t < 0) throw InputError("teacher noise must be non-negative");
  }

  int latent_dims() const { return kind == TaskKind::classification ? 2 : 1; }
  int input_dims() const { return latent_dims() + nuisance_dims; }
  int label_dims() const { return kind == TaskKind::classification ? classes : 1; }
};

struct ToySplit {
  MatrixXd latent;
  MatrixXd inputs;
  std::vector<int> classes;  // classification only (possibly label-noised on train)
  MatrixXd targets;          // one-hot of `classes`, or regression targets (n x 1)
};

struct ToyTask {
  TaskKind kind = TaskKind::classification;
  ToySplit train;
  ToySplit test;
  /// Frozen teacher maps (latent_dims x (teacher_dims - 1)); a constant column is prepended.
  std::vector<MatrixXd> teacher_maps;
  std::vector<MatrixXd> teacher_train_features;
  std::vector<std::string> teacher_ids;

  int label_dims() const { return static_cast<int>(train.targets.cols()); }
  TaskLabels train_labels() const {
    if (kind == TaskKind::classification) return TaskLabels::classification(train.classes, label_dims());
    return TaskLabels::regression(train.targets);
  }
};

namespace detail {

inline MatrixXd gaussian(std::mt19937_64& rng, Index rows, Index cols, double stddev) {
  std::normal_distribution<double> nd(0.0, 1.0);
  MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = stddev * nd(rng);
  return m;
}

inline ToySplit make_split(const ToyTaskSpec& spec, std::mt19937_64& rng, int n, bool noisy_labels) {
  ToySplit s;
  const int c = spec.label_dims();
  if (spec.kind == TaskKind::classification) {
    std::uniform_int_distribution<int> pick(0, spec.classes - 1);
    s.classes.resize(static_cast<std::size_t>(n));
    s.latent = gaussian(rng, n, 2, spec.cluster_std);
    for (int i = 0; i < n; ++i) {
      const int k = pick(rng);
      const double angle = 2.0 * std::numbers::pi * k / spec.classes;
      s.latent(i, 0) += spec.cluster_separation * std::cos(angle);
      s.latent(i, 1) += spec.cluster_separation * std::sin(angle);
      s.classes[static_cast<std::size_t>(i)] = k;
    }
    if (noisy_labels && spec.label_noise > 0) {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (auto& k : s.classes)
        if (u(rng) < spec.label_noise) k = pick(rng);
    }
    s.targets = MatrixXd::Zero(n, c);
    for (int i = 0; i < n; ++i) s.targets(i, s.classes[static_cast<std::size_t>(i)]) = 1.0;
  } else {
    s.latent = gaussian(rng, n, 1, 1.0);
    s.targets = spec.slope * s.latent + gaussian(rng, n, 1, spec.observation_noise);
  }
  s.inputs.resize(n, spec.input_dims());
  s.inputs.leftCols(spec.latent_dims()) = s.latent + gaussian(rng, n, spec.latent_dims(), spec.student_noise);
  s.inputs.rightCols(spec.nuisance_dims) = gaussian(rng, n, spec.nuisance_dims, 1.0);
  return s;
}

}  // namespace detail

/// Seeded and reproducible: the same spec yields bit-identical datasets.
inline ToyTask generate_toy_task(const ToyTaskSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  ToyTask task;
  task.kind = spec.kind;
  task.train = detail::make_split(spec, rng, spec.train_samples, true);
  task.test = detail::make_split(spec, rng, spec.test_samples, false);
  for (std::size_t k = 0; k < spec.teacher_noise.size(); ++k) {
    MatrixXd map = detail::gaussian(rng, spec.latent_dims(), spec.teacher_dims - 1, 1.0);
    const MatrixXd corrupted =
        task.train.latent + detail::gaussian(rng, spec.train_samples, spec.latent_dims(), spec.teacher_noise[k]);
    MatrixXd feats(spec.train_samples, spec.teacher_dims);
    feats.col(0).setOnes();
    feats.rightCols(spec.teacher_dims - 1) = corrupted * map;
    task.teacher_maps.push_back(std::move(map));
    task.teacher_train_features.push_back(std::move(feats));
    task.teacher_ids.push_back("teacher-" + std::to_string(k));
  }
  return task;
}

/// Linear feature map phi_t(x) = W_phi^T x followed by a linear classifier with bias.
struct ToyStudent {
  MatrixXd feature_map;  // D_in x D_t
  MatrixXd classifier;   // D_t x C
  VectorXd bias;         // C

  static ToyStudent initialize(Index input_dims, Index feature_dims, Index outputs, std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
    ToyStudent s;
    s.feature_map = detail::gaussian(rng, input_dims, feature_dims, 1.0 / std::sqrt(static_cast<double>(input_dims)));
    s.classifier = MatrixXd::Zero(feature_dims, outputs);
    s.bias = VectorXd::Zero(outputs);
    return s;
  }

  MatrixXd features(const MatrixXd& x) const { return x * feature_map; }
  MatrixXd outputs(const MatrixXd& x) const {
    return (features(x) * classifier).rowwise() + bias.transpose();
  }
  bool finite() const {
    return feature_map.allFinite() && classifier.allFinite() && bias.allFinite();
  }
};

struct TuneConfig {
  double lambda = 1.0;
  double learning_rate = 0.1;
  int steps = 500;
  std::uint64_t seed = 0;
  Regularizer regularizer = Regularizer::bayesian;
  int teachers = 1;
  int student_dims = 16;

  void validate() const {
    if (steps < 1) throw InputError("steps must be >= 1");
    if (!(learning_rate > 0)) throw InputError("learning_rate must be > 0");
    if (!(lambda >= 0)) throw InputError("lambda must be >= 0");
    if (teachers < 1) throw InputError("need at least one teacher");
    if (student_dims < 1) throw InputError("student_dims must be >= 1");
  }
};

/// Frozen teacher side of the objective.
struct TeacherBundle {
  std::vector<PredictiveHead> heads;
  std::vector<MatrixXd> features;
  EnsembleTarget target;
  std::vector<double> logme;
};

/// Fits a LogME head on every teacher, ranks them and keeps the top `k` as the ensemble.
inline TeacherBundle prepare_teachers(const ToyTask& task, int k) {
  const TaskLabels labels = task.train_labels();
  std::vector<ScoredModel> scored;
  std::vector<PredictiveHead> heads;
  std::vector<double> scores;
  for (std::size_t i = 0; i < task.teacher_train_features.size(); ++i) {
    const FeatureMatrix f(task.teacher_train_features[i]);
    const SvdFactors svd = decompose(f);
    const LogMeReport rep = compute_logme(f, svd, labels);
    heads.push_back(make_predictive_head(svd, rep, task.teacher_ids[i], content_hash(f)));
    scores.push_back(rep.logme);
    scored.push_back({task.teacher_ids[i], rep.logme});
  }
  if (scored.empty()) throw InputError("toy task has no teachers");
  const RankReport ranking = rank_hub(scored);
  TeacherBundle out;
  for (const auto& id : select_top_k(ranking, k)) {
    for (std::size_t i = 0; i < heads.size(); ++i) {
      if (heads[i].model_id != id) continue;
      out.heads.push_back(heads[i]);
      out.features.push_back(task.teacher_train_features[i]);
      out.logme.push_back(scores[i]);
    }
  }
  out.target = ensemble_target(out.heads, out.features);
  return out;
}

/// Flat parameter vector: feature_map, classifier, bias, then each KD transform (column-major).
struct ParameterBlocks {
  ToyStudent student;
  std::vector<MatrixXd> transforms;

  Index size() const {
    Index n = student.feature_map.size() + student.classifier.size() + student.bias.size();
    for (const auto& w : transforms) n += w.size();
    return n;
  }

  VectorXd flatten() const {
    VectorXd v(size());
    Index o = 0;
    auto put = [&](const auto& m) {
      v.segment(o, m.size()) = Eigen::Map<const VectorXd>(m.data(), m.size());
      o += m.size();
    };
    put(student.feature_map);
    put(student.classifier);
    put(student.bias);
    for (const auto& w : transforms) put(w);
    return v;
  }

  void assign(const VectorXd& v) {
    if (v.size() != size()) throw InputError("parameter vector has the wrong length");
    Index o = 0;
    auto get = [&](auto& m) {
      Eigen::Map<VectorXd>(m.data(), m.size()) = v.segment(o, m.size());
      o += m.size();
    };
    get(student.feature_map);
    get(student.classifier);
    get(student.bias);
    for (auto& w : transforms) get(w);
  }
};

struct LossBreakdown {
  double task = 0.0;
  double regularizer = 0.0;
  double total = 0.0;
};

/// L_task + lambda * L_reg with its analytic gradient. L_task is softmax cross-entropy for
/// classification and mean squared error for regression.
class Objective {
 public:
  Objective(const MatrixXd& inputs, const MatrixXd& targets, TaskKind kind, Regularizer reg, double lambda,
            const TeacherBundle* teachers, const PredictiveHead* student_head)
      : inputs_(inputs), targets_(targets), kind_(kind), reg_(reg), lambda_(lambda),
        teachers_(teachers), student_head_(student_head) {
    if (reg_ != Regularizer::none && teachers_ == nullptr) throw InputError("regularizer needs teachers");
    if (reg_ == Regularizer::bayesian && student_head_ == nullptr)
      throw InputError("B-Tuning needs the frozen student head");
  }

  LossBreakdown evaluate(const ParameterBlocks& p, ParameterBlocks* grad = nullptr) const {
    const ToyStudent& s = p.student;
    const Index n = inputs_.rows();
    const double nd = static_cast<double>(n);
    const MatrixXd ft = inputs_ * s.feature_map;
    const MatrixXd out = (ft * s.classifier).rowwise() + s.bias.transpose();

    LossBreakdown loss;
    MatrixXd g_out;
    if (kind_ == TaskKind::classification) {
      const VectorXd row_max = out.rowwise().maxCoeff();
      const MatrixXd shifted = out.colwise() - row_max;
      const MatrixXd e = shifted.array().exp();
      const VectorXd z = e.rowwise().sum();
      loss.task = -((shifted.array() * targets_.array()).rowwise().sum() - z.array().log()).sum() / nd;
      if (grad) g_out = ((e.array().colwise() / z.array()).matrix() - targets_) / nd;
    } else {
      const MatrixXd r = out - targets_;
      const double denom = nd * static_cast<double>(r.cols());
      loss.task = r.squaredNorm() / denom;
      if (grad) g_out = 2.0 * r / denom;
    }

    MatrixXd g_ft;
    if (grad) {
      grad->student.classifier = ft.transpose() * g_out;
      grad->student.bias = g_out.colwise().sum().transpose();
      g_ft = g_out * s.classifier.transpose();
      grad->transforms.assign(p.transforms.size(), MatrixXd());
      for (std::size_t k = 0; k < p.transforms.size(); ++k)
        grad->transforms[k] = MatrixXd::Zero(p.transforms[k].rows(), p.transforms[k].cols());
    }

    if (reg_ == Regularizer::bayesian) {
      const MatrixXd r = ft * student_head_->weights - teachers_->target.targets;
      const double denom = nd * static_cast<double>(r.cols());
      loss.regularizer = r.squaredNorm() / denom;
      if (grad) g_ft += lambda_ * (2.0 / denom) * r * student_head_->weights.transpose();
    } else if (reg_ == Regularizer::kd) {
      const auto& phis = teachers_->features;
      if (p.transforms.size() != phis.size()) throw InputError("need one KD transform per teacher");
      const double scale = 1.0 / (nd * static_cast<double>(phis.size()));
      for (std::size_t k = 0; k < phis.size(); ++k) {
        const MatrixXd r = phis[k] - ft * p.transforms[k].transpose();
        const VectorXd norms = r.rowwise().norm();
        loss.regularizer += norms.sum() * scale;
        if (grad) {
          MatrixXd g_r = r;
          for (Index i = 0; i < n; ++i) g_r.row(i) *= norms(i) > 0 ? scale / norms(i) : 0.0;
          g_ft -= lambda_ * g_r * p.transforms[k];
          grad->transforms[k] = -lambda_ * g_r.transpose() * ft;
        }
      }
    }
    loss.total = loss.task + lambda_ * loss.regularizer;
    if (grad) grad->student.feature_map = inputs_.transpose() * g_ft;
    return loss;
  }

  double value(const ParameterBlocks& p) const { return evaluate(p).total; }

 private:
  const MatrixXd& inputs_;
  const MatrixXd& targets_;
  TaskKind kind_;
  Regularizer reg_;
  double lambda_;
  const TeacherBundle* teachers_;
  const PredictiveHead* student_head_;
};

struct TrainReport {
  TuneConfig config;
  std::vector<double> task_loss;
  std::vector<double> regularizer_loss;
  std::vector<double> total_loss;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double test_mse = 0.0;
  std::vector<std::string> teacher_ids;
  ToyStudent final_student;
};

/// Reference head for B-Tuning: LogME weights on the student's initial features, fixed for
/// the whole run.
inline PredictiveHead student_reference_head(const ToyStudent& initial, const ToyTask& task) {
  const FeatureMatrix f(initial.features(task.train.inputs));
  const SvdFactors svd = decompose(f);
  return make_predictive_head(svd, compute_logme(f, svd, task.train_labels()), "student");
}

/// Least-squares initial KD transforms: W_k = argmin || phi_k - F_t W_k^T ||_F.
inline std::vector<MatrixXd> initial_kd_transforms(const MatrixXd& student_features,
                                                   std::span<const MatrixXd> teacher_features) {
  std::vector<MatrixXd> out;
  const auto solver = student_features.completeOrthogonalDecomposition();
  for (const auto& phi : teacher_features) out.push_back(solver.solve(phi).transpose());
  return out;
}

inline double accuracy(const MatrixXd& outputs, const std::vector<int>& classes) {
  Index hits = 0;
  for (Index i = 0; i < outputs.rows(); ++i) {
    Index arg = 0;
    outputs.row(i).maxCoeff(&arg);
    if (arg == classes[static_cast<std::size_t>(i)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(outputs.rows());
}

/// Full-batch gradient descent. Teachers are read-only; a non-finite loss aborts the run.
inline TrainReport train_student(ToyStudent student, const ToyTask& task, const TeacherBundle& teachers,
                                 const TuneConfig& config) {
  config.validate();
  PredictiveHead student_head;
  if (config.regularizer == Regularizer::bayesian) student_head = student_reference_head(student, task);

  ParameterBlocks params{std::move(student), {}};
  if (config.regularizer == Regularizer::kd)
    params.transforms = initial_kd_transforms(params.student.features(task.train.inputs), teachers.features);

  const Objective objective(task.train.inputs, task.train.targets, task.kind, config.regularizer, config.lambda,
                            config.regularizer == Regularizer::none ? nullptr : &teachers,
                            config.regularizer == Regularizer::bayesian ? &student_head : nullptr);
  TrainReport rep;
  rep.config = config;
  rep.teacher_ids = teachers.target.teacher_ids;
  ParameterBlocks grad;
  for (int step = 0; step < config.steps; ++step) {
    const LossBreakdown l = objective.evaluate(params, &grad);
    if (!std::isfinite(l.total))
      throw std::runtime_error("training diverged at step " + std::to_string(step) + ": task loss " +
                               std::to_string(l.task) + ", regularizer " + std::to_string(l.regularizer));
    rep.task_loss.push_back(l.task);
    rep.regularizer_loss.push_back(l.regularizer);
    rep.total_loss.push_back(l.total);
    params.student.feature_map -= config.learning_rate * grad.student.feature_map;
    params.student.classifier -= config.learning_rate * grad.student.classifier;
    params.student.bias -= config.learning_rate * grad.student.bias;
    for (std::size_t k = 0; k < params.transforms.size(); ++k)
      params.transforms[k] -= config.learning_rate * grad.transforms[k];
  }
  if (!params.student.finite()) throw std::runtime_error("training produced non-finite parameters");

  const MatrixXd train_out = params.student.outputs(task.train.inputs);
  const MatrixXd test_out = params.student.outputs(task.test.inputs);
  if (task.kind == TaskKind::classification) {
    rep.train_accuracy = accuracy(train_out, task.train.classes);
    rep.test_accuracy = accuracy(test_out, task.test.classes);
  } else {
    rep.test_mse = (test_out - task.test.targets).squaredNorm() / static_cast<double>(test_out.rows());
  }
  rep.final_student = std::move(params.student);
  return rep;
}

/// End-to-end toy run: generate, rank teachers, train.
inline TrainReport run_toy(const ToyTaskSpec& spec, const TuneConfig& config) {
  config.validate();
  const ToyTask task = generate_toy_task(spec);
  const TeacherBundle teachers = prepare_teachers(task, config.teachers);
  const ToyStudent student = ToyStudent::initialize(spec.input_dims(), config.student_dims, task.label_dims(),
                                                    config.seed);
  return train_student(student, task, teachers, config);
}

}  // namespace hubrank::toy
