#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "omni/ablation.hpp"
#include "omni/model.hpp"
#include "omni/synthrooms.hpp"

namespace omni {

// Flat experiment configuration shared by every subcommand. Every field has
// a default; unknown keys in a config file are rejected; the effective
// (post-default, post-override) config is echoed into every output directory
// so runs stay reproducible from their artifacts alone.
struct RunConfig {
  uint64_t seed = 0;

  // model
  int width = 128;
  int height = 64;
  std::string mode = "equirect";
  std::vector<int> channels = {16, 32, 64, 128};
  int blocks_per_stage = 1;
  int gru_hidden = 64;
  int cols_per_step = 4;

  // training
  int epochs = 30;
  int batch = 4;
  double lr = 3e-4;
  bool stretch = true;
  double stretch_min = 0.5;
  double stretch_max = 2.0;
  double val_frac = 0.1;

  // data generation
  int count = 16;
  double extent_min = 3.0;
  double extent_max = 8.0;
  double room_height_min = 2.4;
  double room_height_max = 3.6;
  double clearance = 0.3;
  double l_fraction = 0.5;
  double noise_sigma = 0.02;

  // evaluation
  int g_rows = 25;

  // ablation
  int ablate_seeds = 3;
  int ablate_epochs = 20;
  int ablate_eval_count = 60;
  int ablate_g_rows = 8;
  std::vector<std::string> ablate_modes = {"planar", "equirect"};
  int jobs = 2;

  ModelConfig model_config() const {
    ModelConfig m;
    m.height = height;
    m.width = width;
    m.mode = grid_mode_from_name(mode);
    m.channels = channels;
    m.blocks_per_stage = blocks_per_stage;
    m.gru_hidden = gru_hidden;
    m.cols_per_step = cols_per_step;
    m.seed = seed;
    return m;
  }

  GenConfig gen_config() const {
    GenConfig g;
    g.extent_min = extent_min;
    g.extent_max = extent_max;
    g.height_min = room_height_min;
    g.height_max = room_height_max;
    g.clearance = clearance;
    g.l_fraction = l_fraction;
    g.noise_sigma = noise_sigma;
    return g;
  }

  TrainOptions train_options() const {
    TrainOptions t;
    t.epochs = epochs;
    t.batch = batch;
    t.lr = lr;
    t.stretch = stretch;
    t.stretch_min = stretch_min;
    t.stretch_max = stretch_max;
    t.seed = seed;
    return t;
  }

  nlohmann::json to_json() const {
    return {{"seed", seed},
            {"width", width},
            {"height", height},
            {"mode", mode},
            {"channels", channels},
            {"blocks_per_stage", blocks_per_stage},
            {"gru_hidden", gru_hidden},
            {"cols_per_step", cols_per_step},
            {"epochs", epochs},
            {"batch", batch},
            {"lr", lr},
            {"stretch", stretch},
            {"stretch_min", stretch_min},
            {"stretch_max", stretch_max},
            {"val_frac", val_frac},
            {"count", count},
            {"extent_min", extent_min},
            {"extent_max", extent_max},
            {"room_height_min", room_height_min},
            {"room_height_max", room_height_max},
            {"clearance", clearance},
            {"l_fraction", l_fraction},
            {"noise_sigma", noise_sigma},
            {"g_rows", g_rows},
            {"ablate_seeds", ablate_seeds},
            {"ablate_epochs", ablate_epochs},
            {"ablate_eval_count", ablate_eval_count},
            {"ablate_g_rows", ablate_g_rows},
            {"ablate_modes", ablate_modes},
            {"jobs", jobs}};
  }

  void apply_json(const nlohmann::json& j) {
    for (const auto& [key, val] : j.items()) {
      if (key == "seed") seed = val.get<uint64_t>();
      else if (key == "width") width = val.get<int>();
      else if (key == "height") height = val.get<int>();
      else if (key == "mode") mode = val.get<std::string>();
      else if (key == "channels") channels = val.get<std::vector<int>>();
      else if (key == "blocks_per_stage") blocks_per_stage = val.get<int>();
      else if (key == "gru_hidden") gru_hidden = val.get<int>();
      else if (key == "cols_per_step") cols_per_step = val.get<int>();
      else if (key == "epochs") epochs = val.get<int>();
      else if (key == "batch") batch = val.get<int>();
      else if (key == "lr") lr = val.get<double>();
      else if (key == "stretch") stretch = val.get<bool>();
      else if (key == "stretch_min") stretch_min = val.get<double>();
      else if (key == "stretch_max") stretch_max = val.get<double>();
      else if (key == "val_frac") val_frac = val.get<double>();
      else if (key == "count") count = val.get<int>();
      else if (key == "extent_min") extent_min = val.get<double>();
      else if (key == "extent_max") extent_max = val.get<double>();
      else if (key == "room_height_min") room_height_min = val.get<double>();
      else if (key == "room_height_max") room_height_max = val.get<double>();
      else if (key == "clearance") clearance = val.get<double>();
      else if (key == "l_fraction") l_fraction = val.get<double>();
      else if (key == "noise_sigma") noise_sigma = val.get<double>();
      else if (key == "g_rows") g_rows = val.get<int>();
      else if (key == "ablate_seeds") ablate_seeds = val.get<int>();
      else if (key == "ablate_epochs") ablate_epochs = val.get<int>();
      else if (key == "ablate_eval_count") ablate_eval_count = val.get<int>();
      else if (key == "ablate_g_rows") ablate_g_rows = val.get<int>();
      else if (key == "ablate_modes") ablate_modes = val.get<std::vector<std::string>>();
      else if (key == "jobs") jobs = val.get<int>();
      else fail(ErrorCode::InvalidConfig, "unknown config key: " + key);
    }
  }

  void load_file(const std::filesystem::path& path) {
    std::ifstream f(path);
    check(f.good(), ErrorCode::IoError, "cannot open config: " + path.string());
    nlohmann::json j;
    try {
      f >> j;
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::InvalidConfig, std::string("config parse error: ") + e.what());
    }
    apply_json(j);
  }

  void echo_to(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    std::ofstream f(dir / "effective_config.json");
    check(f.good(), ErrorCode::IoError, "cannot write effective config");
    f << to_json().dump(2) << "\n";
  }
};

}  // namespace omni
