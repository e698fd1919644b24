#include "monoalign/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "monoalign/common.hpp"
#include "monoalign/csv.hpp"
#include "monoalign/explain.hpp"

namespace monoalign {

namespace fs = std::filesystem;

namespace {

int mode_rank(const std::string& mode) {
  if (mode == kConstrained) return 0;
  if (mode == kUnconstrained) return 1;
  return 2;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot open " + p.string());
  return nlohmann::json::parse(in);
}

void write_json_atomic(const fs::path& p, const nlohmann::json& j) {
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write " + tmp.string());
    out << j.dump(1) << "\n";
  }
  fs::rename(tmp, p);
}

struct Evaluated {
  TreeEnsemble model;
  CvCell chosen;
  Eigen::VectorXd proba;
  std::optional<ShapMatrix> shap;
};

}  // namespace

void SweepConfig::validate(const FeatureSchema& schema) const {
  if (sizes.empty()) throw Error("sweep: no train sizes");
  for (std::size_t i = 1; i < sizes.size(); ++i)
    if (!(sizes[i - 1] < sizes[i])) throw Error("sweep: sizes must be strictly ascending");
  if (seeds_per_size < 2) throw Error("sweep: need at least 2 seeds per size");
  if (modes.empty()) throw Error("sweep: no modes");
  for (const auto& m : modes)
    if (m != kConstrained && m != kUnconstrained && m != kOpposite) throw Error("sweep: unknown mode '" + m + "'");
  grid.validate();
  constraints.validate(schema);
  if (output_dir.empty()) throw Error("sweep: output directory not set");
}

nlohmann::json SweepConfig::to_json(const FeatureSchema& schema) const {
  return {{"sizes", sizes}, {"seeds_per_size", seeds_per_size}, {"grid", grid.to_json()},
          {"constraints", constraints.to_json(schema)}, {"modes", modes},
          {"base_seed", base_seed}, {"save_models", save_models},
          {"fixed", {{"lambda", fixed.lambda}, {"gamma", fixed.gamma},
                     {"min_child_weight", fixed.min_child_weight}}}};
}

nlohmann::json SweepRecord::to_json() const {
  nlohmann::json j{{"size", size},
                   {"replicate", replicate},
                   {"seed", seed},
                   {"mode", mode},
                   {"auc_roc", metrics.auc_roc},
                   {"avg_precision", metrics.avg_precision},
                   {"model_path", model_path},
                   {"subsample_fingerprint", subsample_fingerprint},
                   {"subsample_attempts", subsample_attempts},
                   {"chosen", {{"learning_rate", chosen.learning_rate},
                               {"rounds", chosen.rounds},
                               {"max_depth", chosen.max_depth},
                               {"mean_auc", chosen.mean_auc}}},
                   {"error", error}};
  if (distance) j["distance"] = distance->to_json();
  return j;
}

SweepRecord SweepRecord::from_json(const nlohmann::json& j) {
  SweepRecord r;
  r.size = j.at("size").get<Eigen::Index>();
  r.replicate = j.at("replicate").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.mode = j.at("mode").get<std::string>();
  r.metrics = {r.size, r.seed, r.mode, j.at("auc_roc").get<double>(), j.at("avg_precision").get<double>()};
  r.model_path = j.at("model_path").get<std::string>();
  r.subsample_fingerprint = j.at("subsample_fingerprint").get<std::string>();
  r.subsample_attempts = j.at("subsample_attempts").get<int>();
  const auto& c = j.at("chosen");
  r.chosen.learning_rate = c.at("learning_rate").get<double>();
  r.chosen.rounds = c.at("rounds").get<int>();
  r.chosen.max_depth = c.at("max_depth").get<int>();
  r.chosen.mean_auc = c.at("mean_auc").get<double>();
  r.error = j.at("error").get<std::string>();
  if (j.contains("distance")) r.distance = DistanceReport::from_json(j["distance"]);
  return r;
}

std::uint64_t cell_seed(std::uint64_t base_seed, Eigen::Index size, int replicate) {
  return combine_seed(base_seed, static_cast<std::uint64_t>(size), static_cast<std::uint64_t>(replicate));
}

std::string record_file_name(Eigen::Index size, int replicate, const std::string& mode) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "n%06lld_r%04d_%s.json", static_cast<long long>(size), replicate, mode.c_str());
  return buf;
}

std::vector<SweepRecord> run_sweep(const SweepConfig& config, const Dataset& train80, const Dataset& test,
                                   const std::function<void(const SweepRecord&)>& progress) {
  const auto& schema = *train80.schema;
  config.validate(schema);
  if (config.sizes.back() > train80.rows())
    throw Error("sweep: largest size " + std::to_string(config.sizes.back()) + " exceeds " +
                std::to_string(train80.rows()) + " train rows");
  const bool wants_opposite = std::count(config.modes.begin(), config.modes.end(), kOpposite) > 0;
  const bool wants_constrained = std::count(config.modes.begin(), config.modes.end(), kConstrained) > 0;
  if ((wants_opposite || wants_constrained) && !config.constraints.any())
    throw Error("sweep: constrained/opposite modes need at least one nonzero constraint");

  const fs::path records_dir = config.output_dir / "records";
  const fs::path models_dir = config.output_dir / "models";
  fs::create_directories(records_dir);
  if (config.save_models) fs::create_directories(models_dir);

  const auto opposite = opposite_constraints(config.constraints);
  const auto unconstrained = ConstraintVector::none(schema);
  auto constraints_for = [&](const std::string& mode) -> const ConstraintVector& {
    if (mode == kConstrained) return config.constraints;
    if (mode == kOpposite) return opposite;
    return unconstrained;
  };
  const bool need_shap = config.modes.size() > 1;

  struct Job {
    Eigen::Index size;
    int replicate;
  };
  std::vector<Job> jobs;
  for (auto size : config.sizes)
    for (int r = 0; r < config.seeds_per_size; ++r) jobs.push_back({size, r});

  std::mutex writer;
  std::vector<SweepRecord> records;
  std::atomic<std::size_t> next{0};

  auto run_job = [&](const Job& job) {
    const auto seed = cell_seed(config.base_seed, job.size, job.replicate);
    std::map<std::string, SweepRecord> existing;
    std::vector<std::string> missing;
    for (const auto& mode : config.modes) {
      const auto path = records_dir / record_file_name(job.size, job.replicate, mode);
      if (fs::exists(path)) {
        existing.emplace(mode, SweepRecord::from_json(read_json(path)));
      } else {
        missing.push_back(mode);
      }
    }
    std::vector<SweepRecord> fresh;
    if (!missing.empty()) {
      const auto sub = subsample_train(train80, job.size, seed);
      // The unconstrained model is the reference of every pairwise distance.
      std::set<std::string> to_fit(missing.begin(), missing.end());
      const bool ref_in_modes = std::count(config.modes.begin(), config.modes.end(), kUnconstrained) > 0;
      if (ref_in_modes && need_shap) {
        for (const auto& m : missing)
          if (m != kUnconstrained) to_fit.insert(kUnconstrained);
      }

      std::map<std::string, Evaluated> fitted;
      std::map<std::string, std::string> failures;
      for (const auto& mode : config.modes) {
        if (!to_fit.count(mode)) continue;
        try {
          auto res = train(sub.data, constraints_for(mode), config.grid, seed, config.fixed);
          Evaluated ev;
          ev.chosen = res.cv.cells[static_cast<std::size_t>(res.cv.best)];
          ev.model = std::move(res.model);
          ev.proba = predict_proba(ev.model, test);
          if (need_shap) ev.shap = tree_shap(ev.model, test);
          fitted.emplace(mode, std::move(ev));
        } catch (const Error& e) {
          failures.emplace(mode, e.what());
        }
      }

      for (const auto& mode : missing) {
        SweepRecord rec;
        rec.size = job.size;
        rec.replicate = job.replicate;
        rec.seed = seed;
        rec.mode = mode;
        rec.subsample_fingerprint = sub.fingerprint;
        rec.subsample_attempts = sub.attempts;
        rec.metrics = {job.size, seed, mode, 0, 0};
        if (auto f = failures.find(mode); f != failures.end()) {
          rec.error = f->second;
          fresh.push_back(std::move(rec));
          continue;
        }
        const auto& ev = fitted.at(mode);
        rec.chosen = ev.chosen;
        rec.metrics.auc_roc = auc_roc(ev.proba, test.labels);
        rec.metrics.avg_precision = average_precision(ev.proba, test.labels);
        if (mode != kUnconstrained && fitted.count(kUnconstrained)) {
          const auto& ref = fitted.at(kUnconstrained);
          rec.distance = compare_models(ev.proba, ref.proba, *ev.shap, *ref.shap, test.labels);
        }
        if (config.save_models) {
          rec.model_path = (fs::path("models") / record_file_name(job.size, job.replicate, mode)).string();
          ev.model.save(config.output_dir / rec.model_path);
        }
        fresh.push_back(std::move(rec));
      }
    }

    std::lock_guard<std::mutex> lock(writer);
    for (auto& rec : fresh) {
      write_json_atomic(records_dir / record_file_name(rec.size, rec.replicate, rec.mode), rec.to_json());
      if (progress) progress(rec);
      records.push_back(std::move(rec));
    }
    for (auto& [mode, rec] : existing) records.push_back(std::move(rec));
  };

  unsigned workers = config.workers > 0 ? static_cast<unsigned>(config.workers)
                                        : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(jobs.size()));
  std::exception_ptr failure;
  std::mutex failure_lock;
  auto worker = [&] {
    for (;;) {
      const auto i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      try {
        run_job(jobs[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_lock);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::sort(records.begin(), records.end(), [](const SweepRecord& a, const SweepRecord& b) {
    return std::make_tuple(a.size, a.replicate, mode_rank(a.mode)) <
           std::make_tuple(b.size, b.replicate, mode_rank(b.mode));
  });
  return records;
}

std::vector<SweepRecord> load_records(const fs::path& dir) {
  const fs::path records_dir = dir / "records";
  if (!fs::is_directory(records_dir)) throw Error("no records directory under " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(records_dir))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<SweepRecord> out;
  for (const auto& f : files) out.push_back(SweepRecord::from_json(read_json(f)));
  std::sort(out.begin(), out.end(), [](const SweepRecord& a, const SweepRecord& b) {
    return std::make_tuple(a.size, a.replicate, mode_rank(a.mode)) <
           std::make_tuple(b.size, b.replicate, mode_rank(b.mode));
  });
  return out;
}

std::vector<MetricPoint> metric_points(const std::vector<SweepRecord>& records) {
  std::vector<MetricPoint> out;
  for (const auto& r : records)
    if (r.ok()) out.push_back(r.metrics);
  return out;
}

std::vector<CurvePoint> distance_curves(const std::vector<SweepRecord>& records) {
  std::map<std::pair<Eigen::Index, std::string>, std::vector<const SweepRecord*>> groups;
  for (const auto& r : records)
    if (r.ok() && r.mode != kUnconstrained) groups[{r.size, r.mode}].push_back(&r);
  std::vector<CurvePoint> out;
  for (const auto& [key, recs] : groups) {
    std::vector<double> pred, rank, shap;
    for (const auto* r : recs) {
      if (!r->distance)
        throw Error("distance_curves: size " + std::to_string(key.first) + " replicate " +
                    std::to_string(r->replicate) + " (" + key.second + ") has no unconstrained pair");
      pred.push_back(r->distance->d_pred);
      rank.push_back(r->distance->d_rank);
      shap.push_back(r->distance->d_shap);
    }
    if (recs.size() < 2)
      throw Error("distance_curves: size " + std::to_string(key.first) + " has a single seed");
    for (const auto& [name, values] : {std::pair{"d_pred", &pred}, std::pair{"d_rank", &rank},
                                       std::pair{"d_shap", &shap}}) {
      const auto ci = mean_ci(*values);
      out.push_back({key.first, key.second, name, ci.mean, ci.ci_low, ci.ci_high,
                     static_cast<int>(values->size())});
    }
  }
  return out;
}

void write_records_csv(const std::vector<SweepRecord>& records, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_csv_row(out, {"train_size", "replicate", "seed", "model_kind", "auc_roc", "avg_precision",
                      "d_pred", "d_rank", "d_shap", "learning_rate", "rounds", "max_depth", "error"});
  for (const auto& r : records) {
    const bool d = r.distance.has_value();
    write_csv_row(out, {std::to_string(r.size), std::to_string(r.replicate), std::to_string(r.seed), r.mode,
                        format_double(r.metrics.auc_roc), format_double(r.metrics.avg_precision),
                        d ? format_double(r.distance->d_pred) : "", d ? format_double(r.distance->d_rank) : "",
                        d ? format_double(r.distance->d_shap) : "", format_double(r.chosen.learning_rate),
                        std::to_string(r.chosen.rounds), std::to_string(r.chosen.max_depth), r.error});
  }
}

}  // namespace monoalign
