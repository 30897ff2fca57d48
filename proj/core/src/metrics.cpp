#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "harness_internal.hpp"
#include "noloco/error.hpp"

namespace noloco {

double replica_weight_std(const std::vector<Vector>& replica_params) {
  if (replica_params.size() < 2)
    throw std::invalid_argument("replica_weight_std: need >= 2 replicas");
  const Eigen::Index dim = replica_params.front().size();
  for (const Vector& v : replica_params)
    if (v.size() != dim) throw shape_error("replica_weight_std: replica sizes differ");

  const double count = static_cast<double>(replica_params.size());
  Vector mean = Vector::Zero(dim);
  for (const Vector& v : replica_params) mean += v;
  mean /= count;

  double sum_sq = 0.0;  // sum over coordinates of per-coordinate variance
  for (const Vector& v : replica_params) sum_sq += (v - mean).squaredNorm();
  return std::sqrt(sum_sq / count);
}

std::vector<double> relative_convergence_diff(const std::vector<double>& a,
                                              const std::vector<double>& b,
                                              const std::vector<double>& ref) {
  if (a.size() != b.size() || a.size() != ref.size())
    throw shape_error("relative_convergence_diff: step axes differ");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (ref[i] == 0.0)
      throw numeric_error("relative_convergence_diff: reference is zero at index " +
                          std::to_string(i));
    out[i] = (a[i] - b[i]) / ref[i];
  }
  return out;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw shape_error("pearson: length mismatch");
  if (x.size() < 3) throw std::invalid_argument("pearson: need at least 3 points");
  const double n = static_cast<double>(x.size());
  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mean_x += x[i];
    mean_y += y[i];
  }
  mean_x /= n;
  mean_y /= n;
  double cov = 0.0, var_x = 0.0, var_y = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    cov += (x[i] - mean_x) * (y[i] - mean_y);
    var_x += (x[i] - mean_x) * (x[i] - mean_x);
    var_y += (y[i] - mean_y) * (y[i] - mean_y);
  }
  if (var_x == 0.0 || var_y == 0.0)
    throw numeric_error("pearson: correlation undefined for constant input");
  return cov / std::sqrt(var_x * var_y);
}

std::string metrics_to_jsonl(const std::vector<MetricsRecord>& records) {
  std::string out;
  for (const MetricsRecord& r : records) {
    nlohmann::ordered_json line;
    line["step"] = r.step;
    line["outer_step"] = r.outer_step;
    line["loss_per_replica"] = r.loss_per_replica;
    line["val_loss"] = r.val_loss;
    line["replica_std"] = r.replica_std;
    line["lr"] = r.lr;
    line["sim_time"] = r.sim_time;
    out += line.dump();
    out += '\n';
  }
  return out;
}

std::string metrics_to_csv(const std::vector<MetricsRecord>& records) {
  std::string out = "step,value,series\n";
  const auto row = [&out](long step, double value, const std::string& series) {
    out += std::to_string(step);
    out += ',';
    out += detail::format_double(value);
    out += ',';
    out += series;
    out += '\n';
  };
  for (const MetricsRecord& r : records) {
    for (std::size_t i = 0; i < r.loss_per_replica.size(); ++i)
      row(r.step, r.loss_per_replica[i], "loss_replica_" + std::to_string(i));
    row(r.step, r.val_loss, "val_loss");
    row(r.step, r.replica_std, "replica_std");
    row(r.step, r.lr, "lr");
    row(r.step, r.sim_time, "sim_time");
  }
  return out;
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
    if (ec) throw std::runtime_error("cannot create directory " + target.parent_path().string());
  }
  const fs::path temp = target.string() + ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + temp.string() + " for writing");
    out << contents;
    if (!out) throw std::runtime_error("failed writing " + temp.string());
  }
  std::error_code ec;
  fs::rename(temp, target, ec);
  if (ec) throw std::runtime_error("cannot rename " + temp.string() + " to " + path);
}

}  // namespace noloco
