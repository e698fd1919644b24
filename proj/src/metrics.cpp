#include "monoalign/metrics.hpp"

#include <fstream>
#include <sstream>
#include <tuple>

#include "monoalign/csv.hpp"

namespace monoalign {

MeanCi mean_ci(const std::vector<double>& values) {
  if (values.empty()) throw Error("mean_ci: no values");
  const double r = static_cast<double>(values.size());
  // Shifting by the first value keeps a constant series exactly constant.
  double shifted = 0;
  for (double v : values) shifted += v - values.front();
  const double mean = values.front() + shifted / r;
  double ss = 0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = values.size() > 1 ? std::sqrt(ss / (r - 1)) : 0.0;
  const double half = 1.96 * sd / std::sqrt(r);
  return {mean, mean - half, mean + half};
}

std::vector<CurvePoint> aggregate_curve(const std::vector<MetricPoint>& points,
                                        const std::string& metric) {
  if (metric != "auc_roc" && metric != "avg_precision")
    throw Error("aggregate_curve: unknown metric '" + metric + "'");
  std::map<std::pair<Eigen::Index, std::string>, std::vector<double>> groups;
  for (const auto& p : points)
    groups[{p.train_size, p.model_kind}].push_back(metric == "auc_roc" ? p.auc_roc : p.avg_precision);
  std::vector<CurvePoint> out;
  for (const auto& [key, values] : groups) {
    if (values.size() < 2)
      throw Error("aggregate_curve: size " + std::to_string(key.first) + " (" + key.second +
                  ") has a single seed");
    const auto ci = mean_ci(values);
    out.push_back({key.first, key.second, metric, ci.mean, ci.ci_low, ci.ci_high,
                   static_cast<int>(values.size())});
  }
  return out;
}

void write_curve_csv(const std::vector<CurvePoint>& curve, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_csv_row(out, {"train_size", "model_kind", "metric", "mean", "ci_low", "ci_high"});
  for (const auto& c : curve)
    write_csv_row(out, {std::to_string(c.train_size), c.model_kind, c.metric, format_double(c.mean),
                        format_double(c.ci_low), format_double(c.ci_high)});
}

std::vector<CurvePoint> read_curve_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const auto table = parse_csv(buf.str());
  std::vector<CurvePoint> out;
  for (std::size_t r = 1; r < table.size(); ++r) {
    const auto& rec = table[r];
    if (rec.size() != 6) throw Error(path.string() + ": malformed curve row");
    out.push_back({std::stoll(rec[0]), rec[1], rec[2], std::stod(rec[3]), std::stod(rec[4]),
                   std::stod(rec[5]), 0});
  }
  return out;
}

}  // namespace monoalign
