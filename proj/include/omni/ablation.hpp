#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "omni/metrics.hpp"
#include "omni/model.hpp"
#include "omni/recover3d.hpp"

namespace omni {

struct EvalAggregate {
  int samples = 0;
  double pixel_error_mean = 0.0;
  double corner_error_mean = 0.0;  // over recovered samples with matching counts
  int corner_flagged = 0;          // unequal-count matches, excluded from the mean
  double iou_mean = 0.0;           // recovery failures count as IoU 0
  int recovery_failures = 0;
  RowGroupErrors row_groups;       // disagreement counts pooled over the set
};

// Evaluate a trained model on a labelled set: surface pixel error, corner
// error and 3D IoU through the full recovery path, and the per-row-group
// pixel error pooled over all samples.
inline EvalAggregate evaluate_model(const ModelConfig& cfg,
                                    const ModelParams<double>& params,
                                    const std::vector<DatasetSample>& eval_set,
                                    int g_rows) {
  EvalAggregate agg;
  agg.samples = static_cast<int>(eval_set.size());
  const CameraModel cam{kDefaultCameraHeight, cfg.width, cfg.height};
  double pix_sum = 0.0, corner_sum = 0.0, iou_sum = 0.0;
  int corner_used = 0;
  bool rg_init = false;
  for (const auto& s : eval_set) {
    const auto out = model_forward(s.image, cfg, params);
    const BoundaryMap pred = boundary_from_forward(out);
    pix_sum += pixel_error(pred, s.gt, cfg.height);
    const RowGroupErrors rg = row_group_error(pred, s.gt, cfg.height, g_rows);
    if (!rg_init) {
      agg.row_groups = rg;
      rg_init = true;
    } else {
      for (size_t g = 0; g < rg.groups.size(); ++g) {
        agg.row_groups.groups[g].pixels += rg.groups[g].pixels;
        agg.row_groups.groups[g].disagreements += rg.groups[g].disagreements;
      }
    }
    const RoomLayout3D gt_layout = layout_from_spec(s.spec);
    try {
      const RecoveryResult rec = recover_layout(pred, cam);
      iou_sum += iou_3d(rec.layout, gt_layout);
      const auto ce = corner_error(layout_corner_pixels(rec.layout, cfg.width, cfg.height),
                                   layout_corner_pixels(gt_layout, cfg.width, cfg.height),
                                   cfg.width, cfg.height);
      if (ce.unequal_count) {
        ++agg.corner_flagged;
      } else {
        corner_sum += ce.percent;
        ++corner_used;
      }
    } catch (const Error&) {
      ++agg.recovery_failures;  // IoU 0 for this sample
    }
  }
  if (agg.samples > 0) {
    agg.pixel_error_mean = pix_sum / agg.samples;
    agg.iou_mean = iou_sum / agg.samples;
  }
  if (corner_used > 0) agg.corner_error_mean = corner_sum / corner_used;
  return agg;
}

struct AblationRun {
  GridMode mode = GridMode::Planar;
  uint64_t seed = 0;
  EvalAggregate eval;
  double final_train_loss = 0.0;
  double train_seconds = 0.0;
};

struct AblationOptions {
  std::vector<GridMode> modes = {GridMode::Planar, GridMode::Equirect};
  int seeds = 3;
  uint64_t base_seed = 0;
  int epochs = 20;
  int g_rows = 8;  // polar analysis band width for desk-scale heights
  int jobs = 2;
  TrainOptions train;
};

struct AblationReport {
  std::vector<AblationRun> runs;
  int g_rows = 8;

  std::vector<const AblationRun*> runs_for(GridMode m) const {
    std::vector<const AblationRun*> out;
    for (const auto& r : runs)
      if (r.mode == m) out.push_back(&r);
    return out;
  }

  double mean_iou(GridMode m) const {
    const auto rs = runs_for(m);
    double s = 0.0;
    for (auto* r : rs) s += r->eval.iou_mean;
    return rs.empty() ? 0.0 : s / static_cast<double>(rs.size());
  }

  double mean_pixel_error(GridMode m) const {
    const auto rs = runs_for(m);
    double s = 0.0;
    for (auto* r : rs) s += r->eval.pixel_error_mean;
    return rs.empty() ? 0.0 : s / static_cast<double>(rs.size());
  }

  // mean pixel error of the pooled row groups [lo, hi]
  double mean_group_error(GridMode m, int group_lo, int group_hi) const {
    const auto rs = runs_for(m);
    double s = 0.0;
    for (auto* r : rs) {
      int64_t pix = 0, bad = 0;
      for (const auto& g : r->eval.row_groups.groups)
        if (g.index >= group_lo && g.index <= group_hi) {
          pix += g.pixels;
          bad += g.disagreements;
        }
      s += pix ? 100.0 * static_cast<double>(bad) / static_cast<double>(pix) : 0.0;
    }
    return rs.empty() ? 0.0 : s / static_cast<double>(rs.size());
  }

  // mean per-group error curve for one mode
  std::vector<double> group_curve(GridMode m) const {
    const auto rs = runs_for(m);
    std::vector<double> out;
    if (rs.empty()) return out;
    const size_t ng = rs.front()->eval.row_groups.groups.size();
    out.assign(ng, 0.0);
    for (auto* r : rs)
      for (size_t g = 0; g < ng; ++g)
        out[g] += r->eval.row_groups.groups[g].error_pct() / static_cast<double>(rs.size());
    return out;
  }
};

// Train one model per (mode, seed) under identical data order, augmentation
// stream, and initialization, then evaluate all of them on the same set.
inline AblationReport ablation_compare(const std::vector<DatasetSample>& train_set,
                                       const std::vector<DatasetSample>& eval_set,
                                       ModelConfig base_cfg, const AblationOptions& opt) {
  check(opt.seeds >= 1 && !opt.modes.empty(), ErrorCode::InvalidConfig,
        "ablation needs at least one seed and mode");
  std::vector<uint64_t> seeds;
  {
    Rng rng(opt.base_seed, "ablate-seeds");
    for (int i = 0; i < opt.seeds; ++i) seeds.push_back(rng.next_u64());
  }

  struct Job {
    GridMode mode;
    uint64_t seed;
  };
  std::vector<Job> jobs;
  for (GridMode m : opt.modes)
    for (uint64_t s : seeds) jobs.push_back({m, s});

  AblationReport report;
  report.g_rows = opt.g_rows;
  report.runs.resize(jobs.size());

  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      const Job& job = jobs[i];
      ModelConfig cfg = base_cfg;
      cfg.mode = job.mode;
      cfg.seed = job.seed;
      TrainOptions topt = opt.train;
      topt.epochs = opt.epochs;
      topt.seed = job.seed;  // same seed => same order/augmentation across modes
      const auto t0 = std::chrono::steady_clock::now();
      TrainResult tr = train(train_set, {}, cfg, topt);
      const auto t1 = std::chrono::steady_clock::now();
      AblationRun run;
      run.mode = job.mode;
      run.seed = job.seed;
      run.final_train_loss = tr.log.empty() ? 0.0 : tr.log.back().train_loss;
      run.train_seconds = std::chrono::duration<double>(t1 - t0).count();
      run.eval = evaluate_model(cfg, tr.params, eval_set, opt.g_rows);
      report.runs[i] = std::move(run);
    }
  };
  const int nthreads = std::max(1, std::min<int>(opt.jobs, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return report;
}

inline nlohmann::json ablation_to_json(const AblationReport& rep) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : rep.runs) {
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& g : r.eval.row_groups.groups)
      groups.push_back({{"group", g.index},
                        {"pole_distance_lo", g.pole_distance_lo},
                        {"pole_distance_hi", g.pole_distance_hi},
                        {"partial", g.partial},
                        {"pixel_error", g.error_pct()}});
    runs.push_back({{"mode", grid_mode_name(r.mode)},
                    {"seed", r.seed},
                    {"pixel_error", r.eval.pixel_error_mean},
                    {"corner_error", r.eval.corner_error_mean},
                    {"corner_flagged", r.eval.corner_flagged},
                    {"iou_3d", r.eval.iou_mean},
                    {"recovery_failures", r.eval.recovery_failures},
                    {"final_train_loss", r.final_train_loss},
                    {"train_seconds", r.train_seconds},
                    {"row_groups", groups}});
  }
  nlohmann::json summary;
  for (GridMode m : {GridMode::Planar, GridMode::Equirect, GridMode::Gnomonic}) {
    if (rep.runs_for(m).empty()) continue;
    double px = 0, px2 = 0, iou = 0, iou2 = 0, ce = 0, ce2 = 0;
    const auto rs = rep.runs_for(m);
    for (auto* r : rs) {
      px += r->eval.pixel_error_mean;
      px2 += r->eval.pixel_error_mean * r->eval.pixel_error_mean;
      iou += r->eval.iou_mean;
      iou2 += r->eval.iou_mean * r->eval.iou_mean;
      ce += r->eval.corner_error_mean;
      ce2 += r->eval.corner_error_mean * r->eval.corner_error_mean;
    }
    const double n = static_cast<double>(rs.size());
    auto stddev = [&](double s, double s2) {
      const double var = s2 / n - (s / n) * (s / n);
      return std::sqrt(std::max(0.0, var));
    };
    summary[grid_mode_name(m)] = {
        {"pixel_error_mean", px / n},
        {"pixel_error_std", stddev(px, px2)},
        {"corner_error_mean", ce / n},
        {"corner_error_std", stddev(ce, ce2)},
        {"iou_3d_mean", iou / n},
        {"iou_3d_std", stddev(iou, iou2)},
        {"polar_group_error_mean", rep.mean_group_error(m, 0, 1)},
    };
  }
  return {{"g_rows", rep.g_rows}, {"runs", runs}, {"summary", summary}};
}

// Fig. 7-style contrast table.
inline void write_row_group_csv(const std::filesystem::path& path,
                                const AblationReport& rep) {
  std::ofstream f(path);
  check(f.good(), ErrorCode::IoError, "cannot write " + path.string());
  const auto planar = rep.group_curve(GridMode::Planar);
  const auto equi = rep.group_curve(GridMode::Equirect);
  const auto rs = rep.runs_for(GridMode::Planar);
  f << "group,pole_distance_lo,pole_distance_hi,pixel_error_planar,pixel_error_equirect\n";
  f.precision(17);
  const size_t n = std::min(planar.size(), equi.size());
  for (size_t g = 0; g < n; ++g) {
    const auto& grp = rs.front()->eval.row_groups.groups[g];
    f << g << ',' << grp.pole_distance_lo << ',' << grp.pole_distance_hi << ','
      << planar[g] << ',' << equi[g] << "\n";
  }
}

}  // namespace omni
