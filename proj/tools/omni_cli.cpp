// Command-line surface of the OmniLayout pipeline: synthetic data generation,
// training, inference, 3D recovery, evaluation, the conv-mode ablation, and
// sampling-grid dumps. Every subcommand is deterministic given --seed and the
// effective config, which is echoed into each output directory.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "omni/ablation.hpp"
#include "omni/config.hpp"
#include "omni/metrics.hpp"
#include "omni/model.hpp"
#include "omni/recover3d.hpp"
#include "omni/synthrooms.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::pair<int, int> parse_dims(const std::string& s) {
  const auto x = s.find('x');
  omni::check(x != std::string::npos && x > 0 && x + 1 < s.size(),
              omni::ErrorCode::InvalidConfig, "expected AxB, got: " + s);
  return {std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1))};
}

omni::Tensor<double> image_from_png(const fs::path& path) {
  int W = 0, H = 0;
  const auto rgb = omni::read_png_rgb8(path, W, H);
  auto img = omni::Tensor<double>::zeros({3, H, W});
  const size_t plane = static_cast<size_t>(H) * W;
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c)
      for (int ch = 0; ch < 3; ++ch)
        img.data()[ch * plane + static_cast<size_t>(r) * W + c] =
            rgb[(static_cast<size_t>(r) * W + c) * 3 + ch] / 255.0;
  return img;
}

void write_json_file(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path);
  omni::check(f.good(), omni::ErrorCode::IoError, "cannot write " + path.string());
  f << j.dump(2) << "\n";
}

json read_json_file(const fs::path& path) {
  std::ifstream f(path);
  omni::check(f.good(), omni::ErrorCode::IoError, "cannot open " + path.string());
  json j;
  f >> j;
  return j;
}

// Deterministic in-memory eval set (used by `ablate` when no --eval-data).
std::vector<omni::DatasetSample> make_eval_set(const omni::GenConfig& gen, int count,
                                               uint64_t seed, int W, int H,
                                               const char* stream) {
  std::vector<omni::DatasetSample> out;
  omni::Rng idx(seed, stream);
  const uint64_t base = idx.next_u64();
  for (int i = 0; i < count; ++i) {
    const uint64_t room_seed =
        base ^ (0x9e3779b97f4a7c15ull * (static_cast<uint64_t>(i) + 1));
    omni::DatasetSample s;
    s.spec = omni::sample_room(gen, room_seed);
    const auto gt = omni::gt_boundaries(s.spec, W);
    s.gt = gt.map;
    s.corner_cols = gt.corner_cols;
    s.image = omni::render(s.spec, W, H, gen.noise_sigma);
    out.push_back(std::move(s));
  }
  return out;
}

struct EvalDirStats {
  int samples = 0;
  int with_layout = 0;
  double pixel_error_mean = 0.0;
  double corner_error_mean = 0.0;
  int corner_flagged = 0;
  double iou_mean = 0.0;
  std::vector<omni::RowGroup> groups;
  std::vector<json> per_sample;
};

EvalDirStats eval_pred_dir(const fs::path& pred,
                           const std::vector<omni::DatasetSample>& gt_set, int H,
                           int g_rows) {
  EvalDirStats st;
  double pix = 0, ce = 0, iou = 0;
  int ce_n = 0;
  for (size_t i = 0; i < gt_set.size(); ++i) {
    const fs::path map_file = pred / (omni::sample_stem(static_cast<int>(i)) + ".map.json");
    if (!fs::exists(map_file)) continue;
    const auto& gt = gt_set[i];
    const omni::BoundaryMap m = omni::boundary_from_json(read_json_file(map_file));
    const double pe = omni::pixel_error(m, gt.gt, H);
    pix += pe;
    ++st.samples;
    const auto rg = omni::row_group_error(m, gt.gt, H, g_rows);
    if (st.groups.empty()) {
      st.groups = rg.groups;
    } else {
      for (size_t g = 0; g < rg.groups.size(); ++g) {
        st.groups[g].pixels += rg.groups[g].pixels;
        st.groups[g].disagreements += rg.groups[g].disagreements;
      }
    }
    json sample = {{"index", i}, {"pixel_error", pe}};
    const fs::path layout_file =
        pred / (omni::sample_stem(static_cast<int>(i)) + ".layout.json");
    if (fs::exists(layout_file)) {
      ++st.with_layout;
      const omni::RoomLayout3D pl = omni::layout_from_json(read_json_file(layout_file));
      const omni::RoomLayout3D gl = omni::layout_from_spec(gt.spec);
      const double v = omni::iou_3d(pl, gl);
      iou += v;
      sample["iou_3d"] = v;
      const int W = gt.gt.width;
      const auto cr = omni::corner_error(omni::layout_corner_pixels(pl, W, H),
                                         omni::layout_corner_pixels(gl, W, H), W, H);
      sample["corner_error"] = cr.percent;
      sample["corner_unequal_count"] = cr.unequal_count;
      if (cr.unequal_count) {
        ++st.corner_flagged;
      } else {
        ce += cr.percent;
        ++ce_n;
      }
    }
    st.per_sample.push_back(std::move(sample));
  }
  omni::check(st.samples > 0, omni::ErrorCode::EmptyDataset,
              "no NNNNN.map.json predictions found in " + pred.string());
  st.pixel_error_mean = pix / st.samples;
  if (st.with_layout > 0) st.iou_mean = iou / st.with_layout;
  if (ce_n > 0) st.corner_error_mean = ce / ce_n;
  return st;
}

json eval_stats_to_json(const EvalDirStats& st) {
  json groups = json::array();
  for (const auto& g : st.groups)
    groups.push_back({{"group", g.index},
                      {"pole_distance_lo", g.pole_distance_lo},
                      {"pole_distance_hi", g.pole_distance_hi},
                      {"partial", g.partial},
                      {"pixel_error", g.error_pct()}});
  return {{"samples", st.samples},
          {"with_layout", st.with_layout},
          {"pixel_error_mean", st.pixel_error_mean},
          {"corner_error_mean", st.corner_error_mean},
          {"corner_flagged", st.corner_flagged},
          {"iou_3d_mean", st.iou_mean},
          {"row_groups", groups},
          {"per_sample", st.per_sample}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"OmniLayout: spherical-convolution room layout pipeline"};
  app.require_subcommand(1);

  // Shared pattern: defaults -> config file -> explicit flags.
  struct Ctx {
    std::string config_path;
    omni::RunConfig cfg;
  };

  int rc = 0;

  // ---- gen-data ------------------------------------------------------------
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic room dataset");
  std::string gen_out;
  auto gen_ctx = std::make_shared<Ctx>();
  gen->add_option("--out", gen_out, "Output dataset directory")->required();
  auto* gen_config = gen->add_option("--config", gen_ctx->config_path, "JSON config file");
  auto* gen_count = gen->add_option("--count", gen_ctx->cfg.count, "Number of rooms")
                        ->capture_default_str();
  auto* gen_seed = gen->add_option("--seed", gen_ctx->cfg.seed, "Root RNG seed")
                       ->capture_default_str();
  auto* gen_w = gen->add_option("--width", gen_ctx->cfg.width, "Panorama width")
                    ->capture_default_str();
  auto* gen_h = gen->add_option("--height", gen_ctx->cfg.height, "Panorama height")
                    ->capture_default_str();
  gen->callback([&, gen_ctx] {
    omni::RunConfig cfg;
    if (gen_config->count()) cfg.load_file(gen_ctx->config_path);
    if (gen_count->count()) cfg.count = gen_ctx->cfg.count;
    if (gen_seed->count()) cfg.seed = gen_ctx->cfg.seed;
    if (gen_w->count()) cfg.width = gen_ctx->cfg.width;
    if (gen_h->count()) cfg.height = gen_ctx->cfg.height;
    omni::check(cfg.count >= 1, omni::ErrorCode::InvalidConfig, "--count must be >= 1");
    omni::generate_dataset(gen_out, cfg.gen_config(), cfg.count, cfg.seed, cfg.width,
                           cfg.height);
    cfg.echo_to(gen_out);
    std::cerr << "wrote " << cfg.count << " samples to " << gen_out << "\n";
  });

  // ---- train ---------------------------------------------------------------
  auto* tr = app.add_subcommand("train", "Train the boundary prediction network");
  std::string tr_data, tr_out;
  auto tr_ctx = std::make_shared<Ctx>();
  tr->add_option("--data", tr_data, "Training dataset directory")->required();
  tr->add_option("--out", tr_out, "Checkpoint output directory")->required();
  auto* tr_config = tr->add_option("--config", tr_ctx->config_path, "JSON config file");
  auto* tr_mode = tr->add_option("--mode", tr_ctx->cfg.mode,
                                 "Conv mode: planar|equirect|gnomonic")
                      ->capture_default_str();
  auto* tr_epochs = tr->add_option("--epochs", tr_ctx->cfg.epochs, "Training epochs")
                        ->capture_default_str();
  auto* tr_batch = tr->add_option("--batch", tr_ctx->cfg.batch, "Batch size")
                       ->capture_default_str();
  auto* tr_lr = tr->add_option("--lr", tr_ctx->cfg.lr, "Adam learning rate")
                    ->capture_default_str();
  auto* tr_seed = tr->add_option("--seed", tr_ctx->cfg.seed, "Root RNG seed")
                      ->capture_default_str();
  auto* tr_val = tr->add_option("--val-frac", tr_ctx->cfg.val_frac,
                                "Fraction of samples held out for validation")
                     ->capture_default_str();
  auto* tr_nostretch = tr->add_flag("--no-stretch", "Disable PanoStretch augmentation");
  tr->callback([&, tr_ctx] {
    omni::RunConfig cfg;
    if (tr_config->count()) cfg.load_file(tr_ctx->config_path);
    if (tr_mode->count()) cfg.mode = tr_ctx->cfg.mode;
    if (tr_epochs->count()) cfg.epochs = tr_ctx->cfg.epochs;
    if (tr_batch->count()) cfg.batch = tr_ctx->cfg.batch;
    if (tr_lr->count()) cfg.lr = tr_ctx->cfg.lr;
    if (tr_seed->count()) cfg.seed = tr_ctx->cfg.seed;
    if (tr_val->count()) cfg.val_frac = tr_ctx->cfg.val_frac;
    if (tr_nostretch->count()) cfg.stretch = false;

    auto samples = omni::load_dataset(tr_data);
    const int H = samples.front().image.dim(1), W = samples.front().image.dim(2);
    cfg.height = H;
    cfg.width = W;
    const size_t nval =
        std::min(samples.size() - 1,
                 static_cast<size_t>(std::lround(cfg.val_frac * samples.size())));
    std::vector<omni::DatasetSample> val(samples.end() - static_cast<long>(nval),
                                         samples.end());
    samples.resize(samples.size() - nval);

    const omni::ModelConfig mc = cfg.model_config();
    const auto res = omni::train(samples, val, mc, cfg.train_options());
    omni::save_checkpoint(tr_out, mc, res.params);
    cfg.echo_to(tr_out);
    std::ofstream mf(fs::path(tr_out) / "metrics.csv");
    mf << "epoch,train_loss,val_pixel_error\n";
    mf.precision(17);
    for (const auto& e : res.log)
      mf << e.epoch << ',' << e.train_loss << ',' << e.val_pixel_error << "\n";
    std::cerr << "checkpoint written to " << tr_out << "\n";
  });

  // ---- infer ---------------------------------------------------------------
  auto* inf = app.add_subcommand("infer", "Predict a boundary map from a panorama");
  std::string inf_ckpt, inf_image, inf_out, inf_data, inf_outdir;
  bool inf_f32 = false;
  inf->add_option("--ckpt", inf_ckpt, "Checkpoint directory")->required();
  inf->add_option("--image", inf_image, "Input panorama PNG");
  inf->add_option("--out", inf_out, "Output boundary map JSON");
  inf->add_option("--data", inf_data, "Dataset directory (batch mode)");
  inf->add_option("--out-dir", inf_outdir, "Output directory for NNNNN.map.json (batch mode)");
  inf->add_flag("--f32", inf_f32, "Run inference in 32-bit floats");
  inf->callback([&] {
    omni::check((!inf_image.empty() && !inf_out.empty()) ||
                    (!inf_data.empty() && !inf_outdir.empty()),
                omni::ErrorCode::InvalidConfig,
                "need --image/--out or --data/--out-dir");
    std::optional<std::pair<omni::ModelConfig, omni::ModelParams<float>>> ck32;
    std::optional<std::pair<omni::ModelConfig, omni::ModelParams<double>>> ck64;
    if (inf_f32)
      ck32 = omni::load_checkpoint<float>(inf_ckpt);
    else
      ck64 = omni::load_checkpoint<double>(inf_ckpt);
    auto run_one = [&](const omni::Tensor<double>& img, const fs::path& out_path) {
      omni::BoundaryMap map;
      if (inf_f32) {
        const auto& [mc, params] = *ck32;
        omni::check(img.dim(1) == mc.height && img.dim(2) == mc.width,
                    omni::ErrorCode::ShapeMismatch, "image dims do not match checkpoint");
        std::vector<float> d(img.data(), img.data() + img.numel());
        const auto imgf = omni::Tensor<float>::from_data(img.shape(), std::move(d));
        map = omni::boundary_from_forward(omni::model_forward(imgf, mc, params));
      } else {
        const auto& [mc, params] = *ck64;
        omni::check(img.dim(1) == mc.height && img.dim(2) == mc.width,
                    omni::ErrorCode::ShapeMismatch, "image dims do not match checkpoint");
        map = omni::boundary_from_forward(omni::model_forward(img, mc, params));
      }
      write_json_file(out_path, omni::boundary_to_json(map));
    };
    if (!inf_image.empty()) run_one(image_from_png(inf_image), inf_out);
    if (!inf_data.empty()) {
      fs::create_directories(inf_outdir);
      for (int i = 0;; ++i) {
        const fs::path png = fs::path(inf_data) / (omni::sample_stem(i) + ".png");
        if (!fs::exists(png)) break;
        run_one(image_from_png(png),
                fs::path(inf_outdir) / (omni::sample_stem(i) + ".map.json"));
      }
    }
  });

  // ---- recover -------------------------------------------------------------
  auto* rec = app.add_subcommand("recover", "Recover the 3D layout from a boundary map");
  std::string rec_map, rec_out, rec_trace, rec_mapdir, rec_outdir;
  double rec_cam_h = omni::kDefaultCameraHeight;
  rec->add_option("--map", rec_map, "Boundary map JSON");
  rec->add_option("--out", rec_out, "Output layout JSON");
  rec->add_option("--trace", rec_trace, "Also write the ceiling-view trace CSV here");
  rec->add_option("--map-dir", rec_mapdir, "Directory of NNNNN.map.json (batch mode)");
  rec->add_option("--out-dir", rec_outdir, "Output directory for NNNNN.layout.json");
  rec->add_option("--camera-height", rec_cam_h, "Camera height in meters")
      ->capture_default_str();
  rec->callback([&] {
    omni::check((!rec_map.empty() && !rec_out.empty()) ||
                    (!rec_mapdir.empty() && !rec_outdir.empty()),
                omni::ErrorCode::InvalidConfig, "need --map/--out or --map-dir/--out-dir");
    auto run_one = [&](const fs::path& in, const fs::path& out, const fs::path& trace) {
      const omni::BoundaryMap map = omni::boundary_from_json(read_json_file(in));
      const omni::CameraModel cam{rec_cam_h, map.width, map.width / 2};
      const omni::RecoveryResult r = omni::recover_layout(map, cam);
      write_json_file(out, omni::recovery_to_json(r));
      if (!trace.empty()) omni::write_trace_csv(trace, r.height.trace);
    };
    if (!rec_map.empty()) run_one(rec_map, rec_out, rec_trace);
    if (!rec_mapdir.empty()) {
      fs::create_directories(rec_outdir);
      for (int i = 0;; ++i) {
        const fs::path in = fs::path(rec_mapdir) / (omni::sample_stem(i) + ".map.json");
        if (!fs::exists(in)) break;
        try {
          run_one(in, fs::path(rec_outdir) / (omni::sample_stem(i) + ".layout.json"), {});
        } catch (const omni::Error& e) {
          std::cerr << "sample " << i << ": recovery failed: " << e.what() << "\n";
        }
      }
    }
  });

  // ---- eval ----------------------------------------------------------------
  auto* ev = app.add_subcommand("eval", "Evaluate predictions against ground truth");
  std::string ev_pred, ev_pred_planar, ev_pred_equirect, ev_gt, ev_report, ev_csv;
  auto ev_ctx = std::make_shared<Ctx>();
  ev->add_option("--pred", ev_pred, "Prediction directory (NNNNN.map.json [+ .layout.json])");
  ev->add_option("--pred-planar", ev_pred_planar, "Planar-mode prediction directory");
  ev->add_option("--pred-equirect", ev_pred_equirect, "Equirect-mode prediction directory");
  ev->add_option("--gt", ev_gt, "Ground-truth dataset directory")->required();
  ev->add_option("--report", ev_report, "Output report JSON")->required();
  ev->add_option("--csv", ev_csv, "Row-group CSV output");
  auto* ev_config = ev->add_option("--config", ev_ctx->config_path, "JSON config file");
  auto* ev_grows = ev->add_option("--g-rows", ev_ctx->cfg.g_rows, "Row-group width in rows")
                       ->capture_default_str();
  ev->callback([&, ev_ctx] {
    omni::RunConfig cfg;
    if (ev_config->count()) cfg.load_file(ev_ctx->config_path);
    if (ev_grows->count()) cfg.g_rows = ev_ctx->cfg.g_rows;
    const bool dual = !ev_pred_planar.empty() && !ev_pred_equirect.empty();
    omni::check(dual || !ev_pred.empty(), omni::ErrorCode::InvalidConfig,
                "need --pred or both --pred-planar and --pred-equirect");
    const auto gt_set = omni::load_dataset(ev_gt);
    const int H = gt_set.front().image.dim(1);

    json report;
    if (dual) {
      const auto sp = eval_pred_dir(ev_pred_planar, gt_set, H, cfg.g_rows);
      const auto se = eval_pred_dir(ev_pred_equirect, gt_set, H, cfg.g_rows);
      report = {{"planar", eval_stats_to_json(sp)}, {"equirect", eval_stats_to_json(se)}};
      if (!ev_csv.empty()) {
        std::ofstream f(ev_csv);
        f << "group,pole_distance_lo,pole_distance_hi,pixel_error_planar,"
             "pixel_error_equirect\n";
        f.precision(17);
        for (size_t g = 0; g < sp.groups.size(); ++g)
          f << g << ',' << sp.groups[g].pole_distance_lo << ','
            << sp.groups[g].pole_distance_hi << ',' << sp.groups[g].error_pct() << ','
            << se.groups[g].error_pct() << "\n";
      }
    } else {
      const auto st = eval_pred_dir(ev_pred, gt_set, H, cfg.g_rows);
      report = eval_stats_to_json(st);
      if (!ev_csv.empty()) {
        std::ofstream f(ev_csv);
        f << "group,pole_distance_lo,pole_distance_hi,pixel_error\n";
        f.precision(17);
        for (const auto& g : st.groups)
          f << g.index << ',' << g.pole_distance_lo << ',' << g.pole_distance_hi << ','
            << g.error_pct() << "\n";
      }
    }
    write_json_file(ev_report, report);
  });

  // ---- ablate ----------------------------------------------------------------
  auto* ab = app.add_subcommand("ablate", "Train and compare conv modes");
  std::string ab_data, ab_out, ab_evaldata;
  auto ab_ctx = std::make_shared<Ctx>();
  ab->add_option("--data", ab_data, "Training dataset directory")->required();
  ab->add_option("--out", ab_out, "Report output directory")->required();
  ab->add_option("--eval-data", ab_evaldata,
                 "Labelled eval dataset (default: generated from seed)");
  auto* ab_config = ab->add_option("--config", ab_ctx->config_path, "JSON config file");
  auto* ab_seeds = ab->add_option("--seeds", ab_ctx->cfg.ablate_seeds, "Seeds per mode")
                       ->capture_default_str();
  auto* ab_epochs = ab->add_option("--epochs", ab_ctx->cfg.ablate_epochs,
                                   "Training epochs per run")
                        ->capture_default_str();
  auto* ab_evalcount = ab->add_option("--eval-count", ab_ctx->cfg.ablate_eval_count,
                                      "Generated eval set size")
                           ->capture_default_str();
  auto* ab_grows = ab->add_option("--g-rows", ab_ctx->cfg.ablate_g_rows,
                                  "Row-group width for the polar analysis")
                       ->capture_default_str();
  auto* ab_jobs = ab->add_option("--jobs", ab_ctx->cfg.jobs, "Parallel training runs")
                      ->capture_default_str();
  auto* ab_seed = ab->add_option("--seed", ab_ctx->cfg.seed, "Root RNG seed")
                      ->capture_default_str();
  std::vector<std::string> ab_modes;
  auto* ab_modes_opt =
      ab->add_option("--modes", ab_modes, "Conv modes to compare")
          ->delimiter(',')
          ->default_str("planar,equirect");
  ab->callback([&, ab_ctx] {
    omni::RunConfig cfg;
    if (ab_config->count()) cfg.load_file(ab_ctx->config_path);
    if (ab_seeds->count()) cfg.ablate_seeds = ab_ctx->cfg.ablate_seeds;
    if (ab_epochs->count()) cfg.ablate_epochs = ab_ctx->cfg.ablate_epochs;
    if (ab_evalcount->count()) cfg.ablate_eval_count = ab_ctx->cfg.ablate_eval_count;
    if (ab_grows->count()) cfg.ablate_g_rows = ab_ctx->cfg.ablate_g_rows;
    if (ab_jobs->count()) cfg.jobs = ab_ctx->cfg.jobs;
    if (ab_seed->count()) cfg.seed = ab_ctx->cfg.seed;
    if (ab_modes_opt->count()) cfg.ablate_modes = ab_modes;

    const auto train_set = omni::load_dataset(ab_data);
    const int H = train_set.front().image.dim(1), W = train_set.front().image.dim(2);
    cfg.height = H;
    cfg.width = W;
    std::vector<omni::DatasetSample> eval_set;
    if (!ab_evaldata.empty())
      eval_set = omni::load_dataset(ab_evaldata);
    else
      eval_set = make_eval_set(cfg.gen_config(), cfg.ablate_eval_count, cfg.seed, W, H,
                               "evalrooms");

    omni::AblationOptions opt;
    opt.modes.clear();
    for (const auto& m : cfg.ablate_modes) opt.modes.push_back(omni::grid_mode_from_name(m));
    opt.seeds = cfg.ablate_seeds;
    opt.base_seed = cfg.seed;
    opt.epochs = cfg.ablate_epochs;
    opt.g_rows = cfg.ablate_g_rows;
    opt.jobs = cfg.jobs;
    opt.train = cfg.train_options();

    const auto report = omni::ablation_compare(train_set, eval_set, cfg.model_config(), opt);
    fs::create_directories(ab_out);
    write_json_file(fs::path(ab_out) / "report.json", omni::ablation_to_json(report));
    const bool have_both = !report.runs_for(omni::GridMode::Planar).empty() &&
                           !report.runs_for(omni::GridMode::Equirect).empty();
    if (have_both)
      omni::write_row_group_csv(fs::path(ab_out) / "row_group.csv", report);
    cfg.echo_to(ab_out);
    for (const auto& m : opt.modes)
      std::cerr << omni::grid_mode_name(m)
                << ": pixel_error=" << report.mean_pixel_error(m)
                << "% iou=" << report.mean_iou(m)
                << " polar(0-1)=" << report.mean_group_error(m, 0, 1) << "%\n";
  });

  // ---- grid-dump -------------------------------------------------------------
  auto* gd = app.add_subcommand("grid-dump", "Dump sampling-grid tap coordinates as CSV");
  std::string gd_mode = "equirect", gd_shape = "64x128", gd_kernel = "3x3",
              gd_stride = "1x1", gd_out;
  std::optional<double> gd_step;
  double gd_step_val = 0.0;
  gd->add_option("--mode", gd_mode, "planar|equirect|gnomonic")->capture_default_str();
  gd->add_option("--shape", gd_shape, "Input dims HxW")->capture_default_str();
  gd->add_option("--kernel", gd_kernel, "Kernel dims KHxKW")->capture_default_str();
  gd->add_option("--stride", gd_stride, "Stride SHxSW")->capture_default_str();
  auto* gd_step_opt = gd->add_option("--angular-step", gd_step_val,
                                     "Tap spacing in radians (default: pixel pitch)");
  gd->add_option("--out", gd_out, "Output CSV (default: stdout)");
  gd->callback([&] {
    const auto [H, W] = parse_dims(gd_shape);
    const auto [kh, kw] = parse_dims(gd_kernel);
    const auto [sh, sw] = parse_dims(gd_stride);
    if (gd_step_opt->count()) gd_step = gd_step_val;
    const auto grid = omni::build_grid(omni::grid_mode_from_name(gd_mode), kh, kw, H, W,
                                       sh, sw, gd_step);
    std::ofstream file;
    std::ostream* os = &std::cout;
    if (!gd_out.empty()) {
      file.open(gd_out);
      omni::check(file.good(), omni::ErrorCode::IoError, "cannot write " + gd_out);
      os = &file;
    }
    // tap indices follow the angular convention: i up, j right; u_src is the
    // absolute source column for output column 0
    *os << "row,i,j,u_src,v_src\n";
    os->precision(17);
    for (int r = 0; r < grid.H_out; ++r)
      for (int ki = 0; ki < kh; ++ki)
        for (int kj = 0; kj < kw; ++kj) {
          const auto& t = grid.tap(r, ki, kj);
          *os << r << ',' << ((kh - 1) / 2 - ki) << ',' << (kj - (kw - 1) / 2) << ','
              << t.du << ',' << t.v_src << "\n";
        }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const omni::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return rc;
}
