#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "harness_internal.hpp"
#include "noloco/error.hpp"

namespace noloco {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw config_error("config: " + path + ": " + message);
}

void check_keys(const json& object, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : object.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) known = true;
    if (!known) fail(path.empty() ? item.key() : path + "." + item.key(), "unknown key");
  }
}

double get_number(const json& object, const std::string& path, const char* key,
                  double fallback) {
  if (!object.contains(key)) return fallback;
  const json& value = object.at(key);
  if (!value.is_number()) fail(path + key, "expected a number");
  return value.get<double>();
}

long get_integer(const json& object, const std::string& path, const char* key, long fallback) {
  if (!object.contains(key)) return fallback;
  const json& value = object.at(key);
  if (value.is_number_integer()) return value.get<long>();
  if (value.is_number_float()) {
    const double d = value.get<double>();
    if (d == std::floor(d)) return static_cast<long>(d);
  }
  fail(path + key, "expected an integer");
}

bool get_bool(const json& object, const std::string& path, const char* key, bool fallback) {
  if (!object.contains(key)) return fallback;
  const json& value = object.at(key);
  if (!value.is_boolean()) fail(path + key, "expected a boolean");
  return value.get<bool>();
}

std::string get_string(const json& object, const std::string& path, const char* key,
                       const std::string& fallback) {
  if (!object.contains(key)) return fallback;
  const json& value = object.at(key);
  if (!value.is_string()) fail(path + key, "expected a string");
  return value.get<std::string>();
}

WorkloadConfig parse_workload(const json& value) {
  WorkloadConfig workload;
  std::string kind;
  json object = json::object();
  if (value.is_string()) {
    kind = value.get<std::string>();
  } else if (value.is_object()) {
    object = value;
    kind = get_string(object, "workload.", "type", "quadratic");
  } else {
    fail("workload", "expected a string or an object");
  }

  if (kind == "quadratic") {
    workload.kind = WorkloadKind::kQuadratic;
  } else if (kind == "mlp") {
    workload.kind = WorkloadKind::kMlp;
    workload.noise_std = 0.05;
  } else {
    fail("workload.type", "expected \"quadratic\" or \"mlp\"");
  }

  check_keys(object, "workload",
             {"type", "dim", "eig_min", "eig_max", "init_scale", "noise_std", "in_dim", "out_dim",
              "hidden_width", "hidden_layers", "n_samples", "batch_size", "val_samples"});
  workload.dim = static_cast<int>(get_integer(object, "workload.", "dim", workload.dim));
  workload.eig_min = get_number(object, "workload.", "eig_min", workload.eig_min);
  workload.eig_max = get_number(object, "workload.", "eig_max", workload.eig_max);
  workload.init_scale = get_number(object, "workload.", "init_scale", workload.init_scale);
  workload.noise_std = get_number(object, "workload.", "noise_std", workload.noise_std);
  workload.in_dim = static_cast<int>(get_integer(object, "workload.", "in_dim", workload.in_dim));
  workload.out_dim =
      static_cast<int>(get_integer(object, "workload.", "out_dim", workload.out_dim));
  workload.hidden_width =
      static_cast<int>(get_integer(object, "workload.", "hidden_width", workload.hidden_width));
  workload.hidden_layers =
      static_cast<int>(get_integer(object, "workload.", "hidden_layers", workload.hidden_layers));
  workload.n_samples =
      static_cast<int>(get_integer(object, "workload.", "n_samples", workload.n_samples));
  workload.batch_size =
      static_cast<int>(get_integer(object, "workload.", "batch_size", workload.batch_size));
  workload.val_samples =
      static_cast<int>(get_integer(object, "workload.", "val_samples", workload.val_samples));
  return workload;
}

InnerOptConfig parse_inner(const json& root, long total_steps) {
  InnerOptConfig inner;
  inner.method = InnerMethod::kAdam;
  inner.lr = 0.01;
  inner.clip_norm = 1.0;
  inner.schedule = {ScheduleKind::kWarmupCosine, 100, 0.1, total_steps};

  if (!root.contains("inner")) return inner;
  const json& object = root.at("inner");
  if (!object.is_object()) fail("inner", "expected an object");
  check_keys(object, "inner",
             {"method", "lr", "m", "clip_norm", "schedule", "warmup_steps", "floor_fraction",
              "adam_beta1", "adam_beta2", "adam_eps"});

  const std::string method = get_string(object, "inner.", "method", "adam");
  if (method == "sgd")
    inner.method = InnerMethod::kSgd;
  else if (method == "adam")
    inner.method = InnerMethod::kAdam;
  else
    fail("inner.method", "expected \"sgd\" or \"adam\"");

  inner.lr = get_number(object, "inner.", "lr", inner.lr);
  if (object.contains("clip_norm")) {
    const json& clip = object.at("clip_norm");
    if (clip.is_null())
      inner.clip_norm.reset();
    else if (clip.is_number())
      inner.clip_norm = clip.get<double>();
    else
      fail("inner.clip_norm", "expected a number or null");
  }

  const std::string schedule = get_string(object, "inner.", "schedule", "warmup_cosine");
  if (schedule == "constant")
    inner.schedule.kind = ScheduleKind::kConstant;
  else if (schedule == "warmup_cosine")
    inner.schedule.kind = ScheduleKind::kWarmupCosine;
  else
    fail("inner.schedule", "expected \"constant\" or \"warmup_cosine\"");
  inner.schedule.warmup_steps =
      get_integer(object, "inner.", "warmup_steps", inner.schedule.warmup_steps);
  inner.schedule.floor_fraction =
      get_number(object, "inner.", "floor_fraction", inner.schedule.floor_fraction);
  inner.adam_beta1 = get_number(object, "inner.", "adam_beta1", inner.adam_beta1);
  inner.adam_beta2 = get_number(object, "inner.", "adam_beta2", inner.adam_beta2);
  inner.adam_eps = get_number(object, "inner.", "adam_eps", inner.adam_eps);
  return inner;
}

OuterOptConfig parse_outer(const json& root) {
  OuterOptConfig outer;
  json object = json::object();
  if (root.contains("outer")) {
    if (!root.at("outer").is_object()) fail("outer", "expected an object");
    object = root.at("outer");
  }
  check_keys(object, "outer",
             {"method", "alpha", "beta", "gamma", "group_size", "interval",
              "allow_unstable_gamma", "reset_inner_state"});

  const std::string method = get_string(object, "outer.", "method", "noloco");
  if (method == "noloco") {
    outer.method = OuterMethod::kNoloco;
    outer.alpha = 0.5;
    outer.interval = 50;
  } else if (method == "diloco") {
    outer.method = OuterMethod::kDiloco;
    outer.alpha = 0.3;
    outer.interval = 100;
  } else if (method == "sync-dp") {
    outer.method = OuterMethod::kSyncDp;
    outer.alpha = 0.0;
    outer.interval = 1;
  } else if (method == "none") {
    outer.method = OuterMethod::kNone;
    outer.alpha = 0.0;
    outer.interval = 1;
  } else {
    fail("outer.method", "expected \"noloco\", \"diloco\", \"sync-dp\" or \"none\"");
  }

  outer.alpha = get_number(object, "outer.", "alpha", outer.alpha);
  outer.beta = get_number(object, "outer.", "beta", outer.beta);
  if (object.contains("gamma") && !object.at("gamma").is_null()) {
    if (!object.at("gamma").is_number()) fail("outer.gamma", "expected a number or null");
    outer.gamma = object.at("gamma").get<double>();
  }
  outer.group_size = static_cast<int>(get_integer(object, "outer.", "group_size", 2));
  outer.interval = get_integer(object, "outer.", "interval", outer.interval);
  outer.allow_unstable_gamma = get_bool(object, "outer.", "allow_unstable_gamma", false);
  outer.reset_inner_state = get_bool(object, "outer.", "reset_inner_state", false);
  return outer;
}

RoutingConfig parse_routing(const json& root) {
  RoutingConfig routing;
  if (!root.contains("routing")) return routing;
  const json& value = root.at("routing");
  std::string mode;
  if (value.is_string()) {
    mode = value.get<std::string>();
  } else if (value.is_object()) {
    check_keys(value, "routing", {"mode", "resample_every"});
    mode = get_string(value, "routing.", "mode", "random");
    routing.resample_every = get_integer(value, "routing.", "resample_every", 1);
  } else {
    fail("routing", "expected a string or an object");
  }
  if (mode == "random")
    routing.mode = RoutingMode::kRandom;
  else if (mode == "fixed")
    routing.mode = RoutingMode::kFixed;
  else
    fail("routing.mode", "expected \"random\" or \"fixed\"");
  return routing;
}

}  // namespace

namespace detail {

ExperimentConfig experiment_config_from_json(const json& root) {
  if (!root.is_object()) throw config_error("config: expected a JSON object");
  check_keys(root, "",
             {"workload", "stages", "replicas", "inner", "outer", "routing", "steps", "seed",
              "metrics_every", "out", "latency", "horizon"});

  ExperimentConfig cfg;
  cfg.steps = get_integer(root, "", "steps", cfg.steps);
  if (root.contains("workload")) cfg.workload = parse_workload(root.at("workload"));
  cfg.stages = static_cast<int>(get_integer(root, "", "stages", cfg.stages));
  cfg.replicas = static_cast<int>(get_integer(root, "", "replicas", cfg.replicas));
  cfg.inner = parse_inner(root, cfg.steps);
  cfg.outer = parse_outer(root);
  cfg.routing = parse_routing(root);
  cfg.seed = static_cast<std::uint64_t>(get_integer(root, "", "seed", 1));
  cfg.metrics_every = get_integer(root, "", "metrics_every", cfg.metrics_every);
  cfg.out = get_string(root, "", "out", "");
  if (root.contains("latency")) {
    const json& lat = root.at("latency");
    if (!lat.is_object()) fail("latency", "expected an object");
    check_keys(lat, "latency", {"mu", "sigma2"});
    cfg.latency.mu = get_number(lat, "latency.", "mu", 0.0);
    cfg.latency.sigma2 = get_number(lat, "latency.", "sigma2", 0.0);
  }
  cfg.inner.steps_per_outer = cfg.outer.interval > 0 ? cfg.outer.interval : 1;
  validate_config(cfg);
  return cfg;
}

std::string format_double(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc()) return "0";
  return std::string(buffer, ptr);
}

}  // namespace detail

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& err) {
    throw config_error(std::string("config: invalid JSON: ") + err.what());
  }
  return detail::experiment_config_from_json(root);
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("config: cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_experiment_config(buffer.str());
}

void validate_config(const ExperimentConfig& cfg) {
  const WorkloadConfig& w = cfg.workload;
  if (w.kind == WorkloadKind::kQuadratic) {
    if (w.dim < 1) fail("workload.dim", "must be >= 1");
    if (!(w.eig_min > 0.0)) fail("workload.eig_min", "must be > 0");
    if (!(w.eig_max >= w.eig_min)) fail("workload.eig_max", "must be >= eig_min");
    if (cfg.stages != 1) fail("stages", "quadratic workload has no pipeline; use stages = 1");
  } else {
    if (w.in_dim < 1) fail("workload.in_dim", "must be >= 1");
    if (w.out_dim < 1) fail("workload.out_dim", "must be >= 1");
    if (w.hidden_width < 1) fail("workload.hidden_width", "must be >= 1");
    if (w.hidden_layers < 1) fail("workload.hidden_layers", "must be >= 1");
    if (cfg.stages < 1 || cfg.stages > w.hidden_layers + 1)
      fail("stages", "must be in [1, hidden_layers + 1]");
    if (w.n_samples < 1) fail("workload.n_samples", "must be >= 1");
    if (w.batch_size < 1) fail("workload.batch_size", "must be >= 1");
    if (w.val_samples < 1) fail("workload.val_samples", "must be >= 1");
    if (w.n_samples % cfg.replicas != 0)
      fail("workload.n_samples", "must be divisible by replicas");
    if ((w.n_samples / cfg.replicas) % w.batch_size != 0)
      fail("workload.batch_size", "must divide the per-replica shard size");
  }
  if (w.noise_std < 0.0) fail("workload.noise_std", "must be >= 0");

  if (cfg.replicas < 1) fail("replicas", "must be >= 1");
  if (cfg.steps < 1) fail("steps", "must be >= 1");
  if (cfg.metrics_every < 1) fail("metrics_every", "must be >= 1");

  if (!(cfg.inner.lr > 0.0)) fail("inner.lr", "must be > 0");
  if (cfg.inner.clip_norm && !(*cfg.inner.clip_norm > 0.0))
    fail("inner.clip_norm", "must be > 0 when set");
  if (cfg.inner.schedule.warmup_steps < 0) fail("inner.warmup_steps", "must be >= 0");
  if (cfg.inner.schedule.floor_fraction <= 0.0 || cfg.inner.schedule.floor_fraction > 1.0)
    fail("inner.floor_fraction", "must be in (0, 1]");

  const OuterOptConfig& outer = cfg.outer;
  if (outer.alpha < 0.0 || outer.alpha >= 1.0) fail("outer.alpha", "must be in [0, 1)");
  if (!(outer.beta > 0.0)) fail("outer.beta", "must be > 0");
  const bool has_outer_phase =
      outer.method == OuterMethod::kNoloco || outer.method == OuterMethod::kDiloco;
  if (has_outer_phase) {
    if (outer.interval < 1) fail("outer.interval", "must be >= 1");
    if (cfg.steps < outer.interval) fail("steps", "must cover at least one outer interval");
  }
  if (outer.method == OuterMethod::kNoloco) {
    if (outer.group_size < 2) fail("outer.group_size", "must be >= 2");
    if (cfg.replicas % outer.group_size != 0)
      fail("outer.group_size", "must divide replicas; ragged groups are rejected");
    const auto [lo, hi] = gamma_bounds(outer.alpha, outer.group_size);
    const double gamma = outer.resolved_gamma();
    if (!outer.allow_unstable_gamma && (gamma <= lo || gamma >= hi)) {
      std::ostringstream message;
      message << "outside the stability interval (" << lo << ", " << hi
              << "); set allow_unstable_gamma to override";
      fail("outer.gamma", message.str());
    }
  }
  if (cfg.latency.sigma2 < 0.0) fail("latency.sigma2", "must be >= 0");
}

QuadraticProblem build_quadratic_problem(const WorkloadConfig& workload, const RngStream& rng) {
  RngStream stream = rng;
  Matrix a = make_spd_matrix(workload.dim, workload.eig_min, workload.eig_max, stream);
  Matrix sigma = workload.noise_std * workload.noise_std *
                 Matrix::Identity(workload.dim, workload.dim);
  return make_quadratic_problem(std::move(a), std::move(sigma));
}

Vector quadratic_initial_point(const WorkloadConfig& workload) {
  return workload.init_scale * Vector::Ones(workload.dim);
}

}  // namespace noloco
