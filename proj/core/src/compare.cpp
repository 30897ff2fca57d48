#include <cmath>
#include <limits>

#include "harness_internal.hpp"
#include "noloco/analytic.hpp"
#include "noloco/error.hpp"

namespace noloco {
namespace {

using nlohmann::json;

json parse_or_fail(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& err) {
    throw config_error(std::string("config: invalid JSON: ") + err.what());
  }
}

MethodCurve run_method(const json& base, const std::string& method) {
  json patched = base;
  if (!patched.is_object()) throw config_error("config: expected a JSON object");
  patched["outer"]["method"] = method;
  const ExperimentConfig cfg = detail::experiment_config_from_json(patched);

  Trainer trainer(cfg);
  trainer.run();

  MethodCurve curve;
  curve.method = method;
  for (const MetricsRecord& r : trainer.metrics()) {
    curve.steps.push_back(r.step);
    double mean_loss = 0.0;
    for (double loss : r.loss_per_replica) mean_loss += loss;
    curve.train_loss.push_back(mean_loss / static_cast<double>(r.loss_per_replica.size()));
    curve.val_loss.push_back(r.val_loss);
    curve.replica_std.push_back(r.replica_std);
    curve.lr.push_back(r.lr);
  }
  return curve;
}

}  // namespace

ComparisonReport run_comparison(const std::string& json_text) {
  const json base = parse_or_fail(json_text);

  ComparisonReport report;
  report.curves.push_back(run_method(base, "noloco"));
  report.curves.push_back(run_method(base, "diloco"));
  report.curves.push_back(run_method(base, "sync-dp"));

  const MethodCurve& noloco = report.curves[0];
  const MethodCurve& diloco = report.curves[1];
  const MethodCurve& sync_dp = report.curves[2];
  report.rel_convergence_diff =
      relative_convergence_diff(diloco.val_loss, noloco.val_loss, sync_dp.val_loss);

  try {
    report.pearson_std_lr = pearson(noloco.replica_std, noloco.lr);
  } catch (const std::exception&) {
    report.pearson_std_lr = std::numeric_limits<double>::quiet_NaN();
  }

  // Communication summary at this run's scale.
  const ExperimentConfig cfg = detail::experiment_config_from_json(base);
  const double t_c = cfg.latency.sigma2 > 0.0 || cfg.latency.mu != 0.0
                         ? cfg.latency.mean_time()
                         : 1.0;
  if (cfg.replicas >= 2) {
    report.tree_time = tree_allreduce_time(cfg.replicas, t_c);
    report.pair_time = 2.0 * expected_pair_max(cfg.latency.mu, cfg.latency.sigma2);
    if (cfg.replicas % 2 == 0) {
      FleetSpec fleet;
      fleet.world = cfg.replicas;
      fleet.inner_steps = static_cast<int>(std::max<long>(1, cfg.outer.interval));
      fleet.outer_steps = 50;
      fleet.step_latency = cfg.latency;
      report.wallclock_ratio = wallclock_compare(fleet, RngStream(cfg.seed)).ratio;
    }
  }
  return report;
}

std::string comparison_to_json(const ComparisonReport& report) {
  nlohmann::ordered_json root;
  root["curves"] = nlohmann::ordered_json::array();
  for (const MethodCurve& curve : report.curves) {
    nlohmann::ordered_json entry;
    entry["method"] = curve.method;
    entry["steps"] = curve.steps;
    entry["train_loss"] = curve.train_loss;
    entry["val_loss"] = curve.val_loss;
    entry["replica_std"] = curve.replica_std;
    entry["lr"] = curve.lr;
    root["curves"].push_back(std::move(entry));
  }
  root["rel_convergence_diff"] = report.rel_convergence_diff;
  if (std::isnan(report.pearson_std_lr))
    root["pearson_std_lr"] = nullptr;
  else
    root["pearson_std_lr"] = report.pearson_std_lr;
  root["latency_summary"]["tree_allreduce_time"] = report.tree_time;
  root["latency_summary"]["pairwise_time"] = report.pair_time;
  root["latency_summary"]["wallclock_ratio"] = report.wallclock_ratio;
  return root.dump(2) + "\n";
}

std::vector<SweepRow> run_sweep(const std::string& json_text, const std::string& param,
                                const std::vector<double>& values) {
  if (values.empty()) throw config_error("sweep: no values given");
  const json base = parse_or_fail(json_text);

  std::string pointer = param;
  if (pointer == "batch_size") pointer = "/workload/batch_size";
  if (pointer.empty()) throw config_error("sweep: empty parameter name");
  if (pointer.front() != '/') {
    std::string converted = "/";
    for (char c : pointer) converted += (c == '.') ? '/' : c;
    pointer = converted;
  }

  std::vector<SweepRow> rows;
  for (double value : values) {
    json patched = base;
    try {
      if (value == std::floor(value) && std::abs(value) < 1e15)
        patched[json::json_pointer(pointer)] = static_cast<long long>(value);
      else
        patched[json::json_pointer(pointer)] = value;
    } catch (const json::exception& err) {
      throw config_error("sweep: cannot set " + pointer + ": " + err.what());
    }

    SweepRow row;
    row.value = value;
    for (const char* method : {"noloco", "diloco", "sync-dp"}) {
      const MethodCurve curve = run_method(patched, method);
      row.methods.push_back(method);
      row.final_val_loss.push_back(curve.val_loss.empty() ? 0.0 : curve.val_loss.back());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string sweep_to_json(const std::string& param, const std::vector<SweepRow>& rows) {
  nlohmann::ordered_json root;
  root["param"] = param;
  root["rows"] = nlohmann::ordered_json::array();
  for (const SweepRow& row : rows) {
    nlohmann::ordered_json entry;
    entry["value"] = row.value;
    for (std::size_t i = 0; i < row.methods.size(); ++i)
      entry["final_val_loss"][row.methods[i]] = row.final_val_loss[i];
    root["rows"].push_back(std::move(entry));
  }
  return root.dump(2) + "\n";
}

AnalyzeRequest parse_analyze_request(const std::string& json_text) {
  const json root = parse_or_fail(json_text);
  AnalyzeRequest request;
  request.experiment = detail::experiment_config_from_json(root);
  if (request.experiment.workload.kind != WorkloadKind::kQuadratic)
    throw config_error("config: workload: analytic predictions cover the quadratic workload only");
  long horizon = 0;
  if (root.contains("horizon")) {
    if (!root.at("horizon").is_number_integer())
      throw config_error("config: horizon: expected an integer");
    horizon = root.at("horizon").get<long>();
  }
  if (horizon <= 0) {
    const long interval = std::max<long>(1, request.experiment.outer.interval);
    horizon = request.experiment.steps / interval;
  }
  request.horizon = horizon;
  return request;
}

std::string analyze_to_json(const AnalyzeRequest& request) {
  const ExperimentConfig& cfg = request.experiment;
  AnalyticConfig analytic;
  analytic.problem =
      build_quadratic_problem(cfg.workload, RngStream(cfg.seed).derive(detail::kTagProblem));
  analytic.lr = cfg.inner.lr;
  analytic.inner_steps = std::max<long>(1, cfg.outer.interval);
  analytic.alpha = cfg.outer.alpha;
  analytic.beta = cfg.outer.beta;
  analytic.gamma = cfg.outer.resolved_gamma();
  analytic.group_size = cfg.outer.group_size;
  analytic.horizon = request.horizon;

  const Vector phi0 = quadratic_initial_point(cfg.workload);
  const AnalyticPrediction prediction = predict(analytic, phi0);

  nlohmann::ordered_json root;
  root["workload"] = "quadratic";
  root["dim"] = analytic.problem.dim();
  root["lr"] = analytic.lr;
  root["inner_steps"] = analytic.inner_steps;
  root["alpha"] = analytic.alpha;
  root["beta"] = analytic.beta;
  root["gamma"] = analytic.gamma;
  root["group_size"] = analytic.group_size;
  root["horizon"] = analytic.horizon;
  root["gamma_interval"] = {prediction.gamma_interval.first, prediction.gamma_interval.second};
  root["eigen_d"] = prediction.eigen_d;
  root["root_moduli"] = prediction.root_moduli;
  root["converges"] = prediction.converges;
  if (std::isnan(prediction.variance_asymptote))
    root["variance_asymptote"] = nullptr;
  else
    root["variance_asymptote"] = prediction.variance_asymptote;
  root["variance_trace"] = prediction.variance_trace;
  nlohmann::ordered_json phis = nlohmann::ordered_json::array();
  for (const Vector& phi : prediction.expected_phi) {
    std::vector<double> entries(phi.data(), phi.data() + phi.size());
    phis.push_back(entries);
  }
  root["expected_phi"] = std::move(phis);
  return root.dump(2) + "\n";
}

}  // namespace noloco
