#include "sgswarm/skillgraph/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "sgswarm/error.hpp"
#include "sgswarm/numcore/gradient_check.hpp"
#include "sgswarm/numcore/init.hpp"
#include "sgswarm/numcore/optimizer.hpp"
#include "sgswarm/skillgraph/transh.hpp"

namespace sgswarm::graph {

void GraphSettings::validate() const {
  if (dim < 1 || hidden_size < 1 || hidden_layers < 1) throw InvalidInput("graph dimensions must be >= 1");
  if (!(lambda > 0.0)) throw InvalidInput("lambda must be positive");
  if (!(init_scale > 0.0)) throw InvalidInput("init_scale must be positive");
  if (iterations < 0 || batch < 1) throw InvalidInput("iterations must be >= 0 and batch >= 1");
  if (!(encoder_lr > 0.0 && embedding_lr > 0.0 && relation_lr > 0.0)) {
    throw InvalidInput("learning rates must be positive");
  }
  if (!(final_lr_ratio > 0.0 && final_lr_ratio <= 1.0)) throw InvalidInput("final_lr_ratio must lie in (0, 1]");
  if (warmup_iterations < 0) throw InvalidInput("warmup_iterations must be >= 0");
  if (!(alpha_low >= 0.0 && alpha_low < alpha_high && alpha_high <= 1.0)) {
    throw InvalidInput("thresholds must satisfy 0 <= alpha_low < alpha_high <= 1");
  }
  if (max_blend < 1) throw InvalidInput("max_blend must be >= 1");
  if (max_negatives_per_positive < 1) throw InvalidInput("max_negatives_per_positive must be >= 1");
  delta.validate();
}

Json to_json(const GraphSettings& s) {
  return Json{{"dim", s.dim},
              {"hidden_size", s.hidden_size},
              {"hidden_layers", s.hidden_layers},
              {"lambda", s.lambda},
              {"init_scale", s.init_scale},
              {"iterations", s.iterations},
              {"batch", s.batch},
              {"encoder_lr", s.encoder_lr},
              {"embedding_lr", s.embedding_lr},
              {"relation_lr", s.relation_lr},
              {"warmup_iterations", s.warmup_iterations},
              {"final_lr_ratio", s.final_lr_ratio},
              {"alpha_high", s.alpha_high},
              {"alpha_low", s.alpha_low},
              {"max_blend", s.max_blend},
              {"max_negatives_per_positive", s.max_negatives_per_positive},
              {"class_balanced", s.class_balanced},
              {"delta", to_json(s.delta)},
              {"seed", s.seed}};
}

GraphSettings graph_settings_from_json(const Json& j, const GraphSettings& base, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  GraphSettings s = base;
  s.dim = json_get_or(j, "dim", s.dim, path);
  s.hidden_size = json_get_or(j, "hidden_size", s.hidden_size, path);
  s.hidden_layers = json_get_or(j, "hidden_layers", s.hidden_layers, path);
  s.lambda = json_get_or(j, "lambda", s.lambda, path);
  s.init_scale = json_get_or(j, "init_scale", s.init_scale, path);
  s.iterations = json_get_or(j, "iterations", s.iterations, path);
  s.batch = json_get_or(j, "batch", s.batch, path);
  s.encoder_lr = json_get_or(j, "encoder_lr", s.encoder_lr, path);
  s.embedding_lr = json_get_or(j, "embedding_lr", s.embedding_lr, path);
  s.relation_lr = json_get_or(j, "relation_lr", s.relation_lr, path);
  s.warmup_iterations = json_get_or(j, "warmup_iterations", s.warmup_iterations, path);
  s.final_lr_ratio = json_get_or(j, "final_lr_ratio", s.final_lr_ratio, path);
  s.alpha_high = json_get_or(j, "alpha_high", s.alpha_high, path);
  s.alpha_low = json_get_or(j, "alpha_low", s.alpha_low, path);
  s.max_blend = json_get_or(j, "max_blend", s.max_blend, path);
  s.max_negatives_per_positive = json_get_or(j, "max_negatives_per_positive", s.max_negatives_per_positive, path);
  s.class_balanced = json_get_or(j, "class_balanced", s.class_balanced, path);
  if (j.contains("delta")) s.delta = delta_weights_from_json(j.at("delta"), path + ".delta");
  s.seed = json_get_or(j, "seed", s.seed, path);
  try {
    s.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(path, e.what());
  }
  return s;
}

InputScaling InputScaling::identity(int n) {
  return {num::Vector::Zero(n), num::Vector::Ones(n)};
}

InputScaling InputScaling::fit(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw InvalidInput("cannot fit input scaling to no rows");
  const auto n = static_cast<Eigen::Index>(rows.front().size());
  InputScaling out = identity(static_cast<int>(n));
  for (const auto& r : rows) {
    if (static_cast<Eigen::Index>(r.size()) != n) throw InvalidInput("ragged feature rows");
    for (Eigen::Index k = 0; k < n; ++k) out.shift[k] += r[static_cast<std::size_t>(k)];
  }
  out.shift /= static_cast<double>(rows.size());
  num::Vector var = num::Vector::Zero(n);
  for (const auto& r : rows) {
    for (Eigen::Index k = 0; k < n; ++k) var[k] += std::pow(r[static_cast<std::size_t>(k)] - out.shift[k], 2);
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    const double sd = std::sqrt(var[k] / static_cast<double>(rows.size()));
    out.scale[k] = sd > 1e-9 ? sd : 1.0;
  }
  return out;
}

void InputScaling::apply(std::span<const double> raw, double* out) const {
  if (static_cast<Eigen::Index>(raw.size()) != shift.size()) throw InvalidInput("feature size does not match input scaling");
  for (std::size_t k = 0; k < raw.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    out[k] = (raw[k] - shift[i]) / scale[i];
  }
}

GraphModel GraphModel::make(std::vector<SkillEntry> skills, const GraphSettings& settings) {
  settings.validate();
  if (skills.empty()) throw InvalidInput("graph needs at least one skill");
  GraphModel m;
  m.settings = settings;
  m.skills = std::move(skills);
  m.env_encoder.spec = {2, settings.hidden_size, settings.hidden_layers, settings.dim, num::OutputActivation::kNone};
  m.task_encoder.spec = {5, settings.hidden_size, settings.hidden_layers, settings.dim, num::OutputActivation::kNone};
  m.env_encoder.weights = num::init_weights(m.env_encoder.spec, num::InitScheme::kUniformScaled, settings.seed);
  m.task_encoder.weights = num::init_weights(m.task_encoder.spec, num::InitScheme::kUniformScaled, settings.seed + 1);
  {
    std::vector<std::vector<double>> env_rows, task_rows;
    for (const auto& s : m.skills) {
      env_rows.push_back(EntityFeature::environment(s.env).values);
      task_rows.push_back(EntityFeature::task(s.task).values);
    }
    m.env_input = InputScaling::fit(env_rows);
    m.task_input = InputScaling::fit(task_rows);
  }
  // rescale each encoder's output layer so library encodings start at norm init_scale
  auto rescale = [&](num::Net& net, EntityKind kind) {
    double sum = 0.0;
    for (const auto& s : m.skills) {
      const auto f = kind == EntityKind::kEnvironment ? EntityFeature::environment(s.env) : EntityFeature::task(s.task);
      sum += m.encode(f).norm();
    }
    const double mean = sum / static_cast<double>(m.skills.size());
    if (mean > 0.0) {
      net.weights.layers.back().weight *= settings.init_scale / mean;
      net.weights.layers.back().bias *= settings.init_scale / mean;
    }
  };
  rescale(m.env_encoder, EntityKind::kEnvironment);
  rescale(m.task_encoder, EntityKind::kTask);
  std::mt19937_64 rng(settings.seed + 2);
  m.skill_embeddings = settings.init_scale * num::orthogonal_matrix(settings.dim, m.skill_count(), rng);
  const num::Matrix rel = num::orthogonal_matrix(settings.dim, 4, rng);
  m.relation_normals = rel.leftCols(2);
  m.relation_translations = settings.init_scale * rel.rightCols(2);
  m.normalize_relations();
  return m;
}

num::Vector GraphModel::encode(const EntityFeature& f) const {
  const auto& net = f.kind == EntityKind::kEnvironment ? env_encoder : task_encoder;
  if (static_cast<int>(f.values.size()) != net.spec.input_dim) {
    throw InvalidInput(f.label() + " has " + std::to_string(f.values.size()) + " values, encoder expects " +
                       std::to_string(net.spec.input_dim));
  }
  num::Vector x(net.spec.input_dim);
  input_scaling(f.kind).apply(f.values, x.data());
  return net(x);
}

double GraphModel::score(const Triple& t) const {
  const num::Vector h = encode(t.head);
  const num::Vector b = std::holds_alternative<int>(t.tail)
                            ? num::Vector(skill_embeddings.col(std::get<int>(t.tail)))
                            : encode(std::get<EntityFeature>(t.tail));
  return transh_score_raw(h, normal(t.relation), translation(t.relation), b, settings.lambda);
}

int GraphModel::skill_index(const std::string& name) const {
  for (int k = 0; k < skill_count(); ++k) {
    if (skills[static_cast<std::size_t>(k)].name == name) return k;
  }
  return -1;
}

void GraphModel::normalize_relations() {
  for (int r = 0; r < 2; ++r) {
    const double n = relation_normals.col(r).norm();
    if (!(n > 0.0)) throw DivergenceError("relation normal collapsed to zero");
    relation_normals.col(r) /= n;
  }
}

double sample_loss(SampleKind kind, double s, double delta) {
  switch (kind) {
    case SampleKind::kPositive: return (s - 1.0) * (s - 1.0);
    case SampleKind::kNegative: return s * s;
    case SampleKind::kSoft: return std::max(0.0, s - 1.0 + delta);
  }
  return 0.0;
}

namespace {

double loss_slope(SampleKind kind, double s, double delta) {
  switch (kind) {
    case SampleKind::kPositive: return 2.0 * (s - 1.0);
    case SampleKind::kNegative: return 2.0 * s;
    case SampleKind::kSoft: return s - 1.0 + delta > 0.0 ? 1.0 : 0.0;
  }
  return 0.0;
}

/// Distinct entities of one kind encoded as a single batch.
struct EncodedSet {
  std::map<EntityFeature, Eigen::Index> column;
  num::Matrix input;
  num::Matrix output;
  num::ForwardCache cache;
  num::Matrix grad;

  void add(const EntityFeature& f) { column.emplace(f, static_cast<Eigen::Index>(column.size())); }
  void run(const num::Net& net, const InputScaling& scaling) {
    if (column.empty()) return;
    input.resize(net.spec.input_dim, static_cast<Eigen::Index>(column.size()));
    for (const auto& [f, c] : column) {
      if (static_cast<int>(f.values.size()) != net.spec.input_dim) {
        throw InvalidInput(f.label() + " does not match the encoder input size");
      }
      scaling.apply(f.values, input.col(c).data());
    }
    output = net.batch(input, &cache);
    grad = num::Matrix::Zero(output.rows(), output.cols());
  }
};

}  // namespace

double graph_loss(const GraphModel& model, std::span<const Triple> batch, GraphGradient* grad) {
  if (batch.empty()) throw InvalidInput("empty sample batch");
  EncodedSet env, task;
  auto enlist = [&](const EntityFeature& f) { (f.kind == EntityKind::kEnvironment ? env : task).add(f); };
  for (const auto& t : batch) {
    enlist(t.head);
    if (const auto* e = std::get_if<EntityFeature>(&t.tail)) enlist(*e);
  }
  env.run(model.env_encoder, model.env_input);
  task.run(model.task_encoder, model.task_input);
  auto set_of = [&](const EntityFeature& f) -> EncodedSet& {
    return f.kind == EntityKind::kEnvironment ? env : task;
  };

  if (grad != nullptr) {
    grad->env_encoder = num::NetWeights::zeros_like(model.env_encoder.weights);
    grad->task_encoder = num::NetWeights::zeros_like(model.task_encoder.weights);
    grad->skill_embeddings = num::Matrix::Zero(model.skill_embeddings.rows(), model.skill_embeddings.cols());
    grad->relation_normals = num::Matrix::Zero(model.dim(), 2);
    grad->relation_translations = num::Matrix::Zero(model.dim(), 2);
  }

  // each sample class contributes the mean over its members in the batch
  std::array<double, 3> class_size{};
  for (const auto& t : batch) class_size[static_cast<std::size_t>(t.kind)] += 1.0;
  if (!model.settings.class_balanced) class_size.fill(static_cast<double>(batch.size()));
  double total = 0.0;
  for (const auto& t : batch) {
    const double n = class_size[static_cast<std::size_t>(t.kind)];
    auto& hs = set_of(t.head);
    const Eigen::Index hc = hs.column.at(t.head);
    const num::Vector h = hs.output.col(hc);
    const auto* tail_entity = std::get_if<EntityFeature>(&t.tail);
    int skill = -1;
    num::Vector b;
    if (tail_entity != nullptr) {
      b = set_of(*tail_entity).output.col(set_of(*tail_entity).column.at(*tail_entity));
    } else {
      skill = std::get<int>(t.tail);
      if (skill < 0 || skill >= model.skill_count()) throw InvalidInput("triple references an unknown skill");
      b = model.skill_embeddings.col(skill);
    }
    const int r = static_cast<int>(t.relation);
    const auto g = transh_gradient(h, model.relation_normals.col(r), model.relation_translations.col(r), b,
                                   model.settings.lambda, 1.0);
    total += sample_loss(t.kind, g.score, t.delta) / n;
    if (grad == nullptr) continue;
    const double up = loss_slope(t.kind, g.score, t.delta) / n;
    if (up == 0.0) continue;
    hs.grad.col(hc) += up * g.dh;
    if (tail_entity != nullptr) {
      auto& ts = set_of(*tail_entity);
      ts.grad.col(ts.column.at(*tail_entity)) += up * g.db;
    } else {
      grad->skill_embeddings.col(skill) += up * g.db;
    }
    grad->relation_normals.col(r) += up * g.dw;
    grad->relation_translations.col(r) += up * g.dd;
  }
  if (grad != nullptr) {
    if (!env.column.empty()) {
      grad->env_encoder = num::backward_batch(model.env_encoder.spec, model.env_encoder.weights, env.cache, env.grad).params;
    }
    if (!task.column.empty()) {
      grad->task_encoder = num::backward_batch(model.task_encoder.spec, model.task_encoder.weights, task.cache, task.grad).params;
    }
  }
  return total;
}

GraphTrainReport train_graph(GraphModel& model, const std::vector<Triple>& samples,
                             const std::function<void(int, double)>& progress) {
  if (samples.empty()) throw InvalidInput("no samples to train on");
  const auto& s = model.settings;
  auto env_opt = num::OptimizerState::make(num::OptimizerKind::kAdam, s.encoder_lr, model.env_encoder.weights);
  auto task_opt = num::OptimizerState::make(num::OptimizerKind::kAdam, s.encoder_lr, model.task_encoder.weights);
  auto emb_opt = num::MatrixOptimizer::make(num::OptimizerKind::kAdam, s.embedding_lr, model.skill_embeddings);
  auto w_opt = num::MatrixOptimizer::make(num::OptimizerKind::kAdam, s.relation_lr, model.relation_normals);
  auto d_opt = num::MatrixOptimizer::make(num::OptimizerKind::kAdam, s.relation_lr, model.relation_translations);

  std::mt19937_64 rng(s.seed + 3);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  GraphTrainReport report;
  std::vector<Triple> batch(static_cast<std::size_t>(s.batch));
  GraphGradient g;
  for (int it = 0; it < s.iterations; ++it) {
    const double frac = s.iterations > 1 ? static_cast<double>(it) / (s.iterations - 1) : 0.0;
    const double decay = s.final_lr_ratio + (1.0 - s.final_lr_ratio) * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
    const double warm = s.warmup_iterations > 0 ? std::min(1.0, (it + 1.0) / s.warmup_iterations) : 1.0;
    env_opt.learning_rate = task_opt.learning_rate = s.encoder_lr * decay * warm;
    emb_opt.learning_rate = s.embedding_lr * decay * warm;
    w_opt.learning_rate = d_opt.learning_rate = s.relation_lr * decay * warm;
    for (auto& t : batch) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      t = samples[order[cursor++]];
    }
    const double loss = graph_loss(model, batch, &g);
    if (!std::isfinite(loss)) {
      throw DivergenceError("graph loss became non-finite at iteration " + std::to_string(it));
    }
    num::optimizer_step(env_opt, model.env_encoder.weights, g.env_encoder);
    num::optimizer_step(task_opt, model.task_encoder.weights, g.task_encoder);
    emb_opt.apply(model.skill_embeddings, g.skill_embeddings);
    w_opt.apply(model.relation_normals, g.relation_normals);
    d_opt.apply(model.relation_translations, g.relation_translations);
    model.normalize_relations();
    if (!model.skill_embeddings.allFinite() || !model.env_encoder.weights.all_finite() ||
        !model.task_encoder.weights.all_finite()) {
      throw DivergenceError("graph parameters became non-finite at iteration " + std::to_string(it));
    }
    report.loss.push_back(loss);
    if (progress) progress(it, loss);
  }
  model.trained = true;
  return report;
}

SampleQuality evaluate_samples(const GraphModel& model, const std::vector<Triple>& samples) {
  SampleQuality q;
  int pos = 0, neg = 0, soft = 0;
  for (const auto& t : samples) {
    const double s = model.score(t);
    switch (t.kind) {
      case SampleKind::kPositive:
        ++pos;
        q.positive_above += s > model.settings.alpha_high ? 1.0 : 0.0;
        break;
      case SampleKind::kNegative:
        ++neg;
        q.negative_below += s < 0.10 ? 1.0 : 0.0;
        break;
      case SampleKind::kSoft:
        ++soft;
        q.soft_within += s <= 1.0 - t.delta + 0.05 ? 1.0 : 0.0;
        break;
    }
  }
  q.positive_above = pos ? q.positive_above / pos : 1.0;
  q.negative_below = neg ? q.negative_below / neg : 1.0;
  q.soft_within = soft ? q.soft_within / soft : 1.0;
  return q;
}

}  // namespace sgswarm::graph

namespace sgswarm::graph {

double GradientCheckReport::worst() const {
  return std::max({skill_embeddings, relation_normals, relation_translations, env_encoder, task_encoder});
}

namespace {

std::vector<std::size_t> probe_indices(std::size_t n, int max_coords, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (max_coords > 0 && static_cast<std::size_t>(max_coords) < n) {
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<std::size_t>(max_coords));
    std::sort(idx.begin(), idx.end());
  }
  return idx;
}

// `set` writes a flat parameter vector into a model copy.
double probe_group(const GraphModel& model, std::span<const Triple> batch, std::vector<double> flat,
                   const std::vector<double>& analytic,
                   const std::function<void(GraphModel&, const std::vector<double>&)>& set, double eps,
                   int max_coords, std::mt19937_64& rng, std::size_t& probed) {
  const auto idx = probe_indices(flat.size(), max_coords, rng);
  std::vector<double> a, fd;
  GraphModel m = model;
  for (const auto i : idx) {
    const double x = flat[i];
    flat[i] = x + eps;
    set(m, flat);
    const double up = graph_loss(m, batch, nullptr);
    flat[i] = x - eps;
    set(m, flat);
    const double down = graph_loss(m, batch, nullptr);
    flat[i] = x;
    fd.push_back((up - down) / (2.0 * eps));
    a.push_back(analytic[i]);
  }
  probed += idx.size();
  return a.empty() ? 0.0 : num::max_relative_error(a, fd, 1e-6);
}

std::vector<double> flat_of(const num::Matrix& m) { return {m.data(), m.data() + m.size()}; }

}  // namespace

GradientCheckReport check_graph_gradients(const GraphModel& model, std::span<const Triple> batch, double epsilon,
                                          int max_coords_per_group, std::uint64_t seed) {
  GraphGradient g;
  graph_loss(model, batch, &g);
  std::mt19937_64 rng(seed);
  GradientCheckReport r;
  auto matrix_setter = [](num::Matrix GraphModel::*field) {
    return [field](GraphModel& m, const std::vector<double>& v) {
      m.*field = Eigen::Map<const num::Matrix>(v.data(), (m.*field).rows(), (m.*field).cols());
    };
  };
  auto net_setter = [](num::Net GraphModel::*field) {
    return [field](GraphModel& m, const std::vector<double>& v) { (m.*field).weights.assign_flat(v); };
  };
  r.skill_embeddings = probe_group(model, batch, flat_of(model.skill_embeddings), flat_of(g.skill_embeddings),
                                   matrix_setter(&GraphModel::skill_embeddings), epsilon, max_coords_per_group,
                                   rng, r.coordinates);
  r.relation_normals = probe_group(model, batch, flat_of(model.relation_normals), flat_of(g.relation_normals),
                                   matrix_setter(&GraphModel::relation_normals), epsilon, max_coords_per_group,
                                   rng, r.coordinates);
  r.relation_translations =
      probe_group(model, batch, flat_of(model.relation_translations), flat_of(g.relation_translations),
                  matrix_setter(&GraphModel::relation_translations), epsilon, max_coords_per_group, rng,
                  r.coordinates);
  r.env_encoder = probe_group(model, batch, model.env_encoder.weights.flatten(), g.env_encoder.flatten(),
                              net_setter(&GraphModel::env_encoder), epsilon, max_coords_per_group, rng,
                              r.coordinates);
  r.task_encoder = probe_group(model, batch, model.task_encoder.weights.flatten(), g.task_encoder.flatten(),
                               net_setter(&GraphModel::task_encoder), epsilon, max_coords_per_group, rng,
                               r.coordinates);
  return r;
}

}  // namespace sgswarm::graph
