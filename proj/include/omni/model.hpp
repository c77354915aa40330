#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "omni/boundary.hpp"
#include "omni/conv.hpp"
#include "omni/loss.hpp"
#include "omni/metrics.hpp"
#include "omni/optim.hpp"
#include "omni/rng.hpp"
#include "omni/rnn.hpp"
#include "omni/synthrooms.hpp"
#include "omni/tns.hpp"

namespace omni {

// Tiny OmniLayout: a strided grid-conv encoder whose multi-scale feature
// strips are folded into a sequence for a Bi-GRU head that emits per-column
// (y_c, y_f, y_w). The three conv modes differ only in sampling locations,
// never in parameter count or shape.
struct ModelConfig {
  int in_channels = 3;
  int height = 64;
  int width = 128;
  GridMode mode = GridMode::Equirect;
  std::vector<int> channels = {16, 32, 64, 128};
  int blocks_per_stage = 1;
  int gru_hidden = 64;
  int cols_per_step = 4;  // g: columns predicted per GRU step
  uint64_t seed = 0;

  int stages() const { return static_cast<int>(channels.size()); }
  int seq_len() const { return width / cols_per_step; }

  void validate() const {
    check(!channels.empty() && in_channels >= 1 && gru_hidden >= 1 &&
              blocks_per_stage >= 1 && cols_per_step >= 1,
          ErrorCode::InvalidConfig, "model config fields must be positive");
    check(width % (4 * cols_per_step) == 0, ErrorCode::InvalidConfig,
          "width must be divisible by 4*cols_per_step");
    check(height % (1 << stages()) == 0 && width % (1 << stages()) == 0,
          ErrorCode::InvalidConfig, "input dims must survive all stride-2 stages");
  }

  // channel count of the concatenated feature strips
  int strip_dim() const {
    int d = 0;
    int h = height;
    for (int c : channels) {
      h /= 2;
      d += c * h;
    }
    return d;
  }
};

inline nlohmann::json model_config_to_json(const ModelConfig& c) {
  return {{"in_channels", c.in_channels},
          {"height", c.height},
          {"width", c.width},
          {"mode", grid_mode_name(c.mode)},
          {"channels", c.channels},
          {"blocks_per_stage", c.blocks_per_stage},
          {"gru_hidden", c.gru_hidden},
          {"cols_per_step", c.cols_per_step},
          {"seed", c.seed}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.in_channels = j.at("in_channels").get<int>();
  c.height = j.at("height").get<int>();
  c.width = j.at("width").get<int>();
  c.mode = grid_mode_from_name(j.at("mode").get<std::string>());
  c.channels = j.at("channels").get<std::vector<int>>();
  c.blocks_per_stage = j.at("blocks_per_stage").get<int>();
  c.gru_hidden = j.at("gru_hidden").get<int>();
  c.cols_per_step = j.at("cols_per_step").get<int>();
  c.seed = j.at("seed").get<uint64_t>();
  return c;
}

template <typename T>
struct ConvParams {
  Tensor<T> w, b;
};

template <typename T>
struct ModelParams {
  std::vector<std::vector<ConvParams<T>>> convs;  // per stage, unit order
  GruParams<T> gru_fwd, gru_bwd;
  ConvParams<T> head;

  std::vector<std::pair<std::string, Tensor<T>>> named() const {
    std::vector<std::pair<std::string, Tensor<T>>> out;
    for (size_t s = 0; s < convs.size(); ++s)
      for (size_t u = 0; u < convs[s].size(); ++u) {
        const std::string base = "stage" + std::to_string(s) + ".conv" + std::to_string(u);
        out.push_back({base + ".w", convs[s][u].w});
        out.push_back({base + ".b", convs[s][u].b});
      }
    for (auto [dir, g] : {std::pair{"fwd", &gru_fwd}, std::pair{"bwd", &gru_bwd}}) {
      const std::string base = std::string("gru_") + dir;
      out.push_back({base + ".Wz", g->Wz});
      out.push_back({base + ".Wr", g->Wr});
      out.push_back({base + ".Wh", g->Wh});
      out.push_back({base + ".bz", g->bz});
      out.push_back({base + ".br", g->br});
      out.push_back({base + ".bh", g->bh});
    }
    out.push_back({"head.w", head.w});
    out.push_back({"head.b", head.b});
    return out;
  }

  std::vector<Tensor<T>> all() const {
    std::vector<Tensor<T>> out;
    for (auto& [name, t] : named()) out.push_back(t);
    return out;
  }

  int64_t count() const {
    int64_t n = 0;
    for (auto& t : all()) n += t.numel();
    return n;
  }
};

template <typename T>
ModelParams<T> init_params(const ModelConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed, "init");
  auto conv_init = [&](int cout, int cin, int kh, int kw) {
    ConvParams<T> p;
    p.w = Tensor<T>::zeros({cout, cin, kh, kw}, true);
    const double std = std::sqrt(2.0 / (cin * kh * kw));
    for (int64_t i = 0; i < p.w.numel(); ++i)
      p.w.data()[i] = static_cast<T>(rng.normal(0.0, std));
    p.b = Tensor<T>::zeros({cout}, true);
    return p;
  };
  auto mat_init = [&](int rows, int cols) {
    Tensor<T> t = Tensor<T>::zeros({rows, cols}, true);
    const double s = 1.0 / std::sqrt(static_cast<double>(cols));
    for (int64_t i = 0; i < t.numel(); ++i)
      t.data()[i] = static_cast<T>(rng.uniform(-s, s));
    return t;
  };

  ModelParams<T> p;
  int cin = cfg.in_channels;
  for (int s = 0; s < cfg.stages(); ++s) {
    const int cout = cfg.channels[static_cast<size_t>(s)];
    std::vector<ConvParams<T>> units;
    units.push_back(conv_init(cout, cin, 3, 3));  // strided
    units.push_back(conv_init(cout, cout, 3, 3)); // residual
    for (int bpe = 1; bpe < cfg.blocks_per_stage; ++bpe) {
      units.push_back(conv_init(cout, cout, 3, 3));
      units.push_back(conv_init(cout, cout, 3, 3));
    }
    p.convs.push_back(std::move(units));
    cin = cout;
  }
  const int D = cfg.strip_dim();
  const int K = cfg.gru_hidden;
  for (GruParams<T>* g : {&p.gru_fwd, &p.gru_bwd}) {
    g->Wz = mat_init(K, D + K);
    g->Wr = mat_init(K, D + K);
    g->Wh = mat_init(K, D + K);
    g->bz = Tensor<T>::zeros({K}, true);
    g->br = Tensor<T>::zeros({K}, true);
    g->bh = Tensor<T>::zeros({K}, true);
  }
  p.head.w = mat_init(3 * cfg.cols_per_step, 2 * K);
  p.head.b = Tensor<T>::zeros({3 * cfg.cols_per_step}, true);
  return p;
}

// Deep stages of a desk-scale input reach feature maps only a few rows tall,
// where a one-pixel tap pitch would push the 3x3 kernel's angular extent to
// the pi/2 limit of build_grid. Cap the tap spacing there (planar grids take
// integer taps regardless).
inline std::optional<double> stage_angular_step(int kh, int kw, int H, int W) {
  if (kh <= 1 && kw <= 1) return std::nullopt;
  const double cap = 0.98 * kHalfPi / (std::max(kh, kw) - 1);
  const double pitch = std::max(kPi / H, kTwoPi / W);
  if (pitch <= cap) return std::nullopt;
  return cap;
}

// x + f(x), with a 1x1 grid conv on the shortcut when channel counts differ.
template <typename T>
Tensor<T> residual_add(const Tensor<T>& x, const Tensor<T>& fx,
                       const ConvParams<T>* shortcut, GridMode mode) {
  if (x.dim(0) == fx.dim(0)) return add(x, fx);
  check(shortcut != nullptr, ErrorCode::ShapeMismatch,
        "residual with channel change needs a 1x1 shortcut");
  auto g = GridCache::instance().get(mode, 1, 1, x.dim(1), x.dim(2));
  return add(grid_conv(x, shortcut->w, shortcut->b, g), fx);
}

template <typename T>
std::vector<Tensor<T>> encoder_forward(const Tensor<T>& img, const ModelConfig& cfg,
                                       const ModelParams<T>& p) {
  check(img.ndim() == 3 && img.dim(0) == cfg.in_channels && img.dim(1) == cfg.height &&
            img.dim(2) == cfg.width,
        ErrorCode::ShapeMismatch, "encoder_forward: image does not match config");
  std::vector<Tensor<T>> outs;
  Tensor<T> x = img;
  int H = cfg.height, W = cfg.width;
  for (int s = 0; s < cfg.stages(); ++s) {
    const auto& units = p.convs[static_cast<size_t>(s)];
    auto gs = GridCache::instance().get(cfg.mode, 3, 3, H, W, 2, 2,
                                        stage_angular_step(3, 3, H, W));
    x = relu(grid_conv(x, units[0].w, units[0].b, gs));
    H /= 2;
    W /= 2;
    auto g1 = GridCache::instance().get(cfg.mode, 3, 3, H, W, 1, 1,
                                        stage_angular_step(3, 3, H, W));
    x = add(x, grid_conv(x, units[1].w, units[1].b, g1));
    for (size_t u = 2; u + 1 < units.size(); u += 2) {
      Tensor<T> t = relu(grid_conv(x, units[u].w, units[u].b, g1));
      x = add(x, grid_conv(t, units[u + 1].w, units[u + 1].b, g1));
    }
    outs.push_back(x);
  }
  return outs;
}

template <typename T>
struct ForwardOut {
  Tensor<T> yc, yf, yw_logits;  // each [W]
};

template <typename T>
ForwardOut<T> model_forward(const Tensor<T>& img, const ModelConfig& cfg,
                            const ModelParams<T>& p) {
  const auto feats = encoder_forward(img, cfg, p);
  const int steps = cfg.seq_len();
  std::vector<Tensor<T>> strips;
  strips.reserve(feats.size());
  for (const auto& f : feats) {
    // [C, H, W] -> [H*C, W] -> [H*C, steps]
    strips.push_back(adaptive_width_pool(fold_height_major(f), steps));
  }
  Tensor<T> seq = transpose2d(concat_rows2d(strips));  // [steps, D]
  Tensor<T> gru = bi_gru(seq, p.gru_fwd, p.gru_bwd);   // [steps, 2K]

  const int g = cfg.cols_per_step;
  std::vector<Tensor<T>> yc_parts, yf_parts, yw_parts;
  yc_parts.reserve(static_cast<size_t>(steps));
  for (int t = 0; t < steps; ++t) {
    Tensor<T> y = add(matvec(p.head.w, row(gru, t)), p.head.b);  // [3g]
    yc_parts.push_back(slice1d(y, 0, g));
    yf_parts.push_back(slice1d(y, g, g));
    yw_parts.push_back(slice1d(y, 2 * g, g));
  }
  auto concat_all = [](std::vector<Tensor<T>>& parts) {
    Tensor<T> out = parts[0];
    for (size_t i = 1; i < parts.size(); ++i) out = concat(out, parts[i]);
    return out;
  };
  return {concat_all(yc_parts), concat_all(yf_parts), concat_all(yw_parts)};
}

// y_w logits become probabilities at this interface.
template <typename T>
BoundaryMap boundary_from_forward(const ForwardOut<T>& out) {
  const int W = out.yc.dim(0);
  BoundaryMap m = BoundaryMap::zeros(W);
  for (int c = 0; c < W; ++c) {
    m.y_c[static_cast<size_t>(c)] = static_cast<double>(out.yc.data()[c]);
    m.y_f[static_cast<size_t>(c)] = static_cast<double>(out.yf.data()[c]);
    m.y_w[static_cast<size_t>(c)] =
        1.0 / (1.0 + std::exp(-static_cast<double>(out.yw_logits.data()[c])));
  }
  return m;
}

// L1 on both boundaries plus BCE-with-logits on the smoothed corner target,
// summed with unit weights.
template <typename T>
Tensor<T> model_loss(const ForwardOut<T>& out, const BoundaryMap& gt) {
  check(out.yc.dim(0) == gt.width, ErrorCode::ShapeMismatch, "model_loss: width");
  auto to_tensor = [](const std::vector<double>& v) {
    std::vector<T> data(v.begin(), v.end());
    return Tensor<T>::from_data({static_cast<int>(v.size())}, std::move(data));
  };
  Tensor<T> lc = l1_loss(out.yc, to_tensor(gt.y_c));
  Tensor<T> lf = l1_loss(out.yf, to_tensor(gt.y_f));
  Tensor<T> lw = bce_with_logits(out.yw_logits, to_tensor(gt.y_w));
  return add(add(lc, lf), lw);
}

// ---------------------------------------------------------------------------
// Checkpoints: a directory of .tns files plus manifest.json naming each
// parameter and recording the ModelConfig (including the grid mode), so
// inference rebuilds identical grids.

template <typename T>
void save_checkpoint(const std::filesystem::path& dir, const ModelConfig& cfg,
                     const ModelParams<T>& params) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["format"] = "omni-checkpoint-v1";
  manifest["model_config"] = model_config_to_json(cfg);
  manifest["params"] = nlohmann::json::array();
  for (const auto& [name, t] : params.named()) {
    const std::string file = name + ".tns";
    write_tns(dir / file, t);
    manifest["params"].push_back({{"name", name}, {"file", file}});
  }
  std::ofstream f(dir / "manifest.json");
  check(f.good(), ErrorCode::IoError, "cannot write checkpoint manifest");
  f << manifest.dump(2) << "\n";
}

template <typename T>
std::pair<ModelConfig, ModelParams<T>> load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream f(dir / "manifest.json");
  check(f.good(), ErrorCode::IoError, "missing checkpoint manifest in " + dir.string());
  nlohmann::json manifest;
  f >> manifest;
  check(manifest.at("format") == "omni-checkpoint-v1", ErrorCode::IoError,
        "unknown checkpoint format");
  const ModelConfig cfg = model_config_from_json(manifest.at("model_config"));
  ModelParams<T> params = init_params<T>(cfg);
  auto named = params.named();
  check(named.size() == manifest.at("params").size(), ErrorCode::IoError,
        "checkpoint parameter count mismatch");
  size_t i = 0;
  for (auto& [name, t] : named) {
    const auto& entry = manifest.at("params").at(i++);
    check(entry.at("name") == name, ErrorCode::IoError,
          "checkpoint parameter order mismatch at " + name);
    Tensor<double> loaded = read_tns<double>(dir / entry.at("file").get<std::string>());
    check(loaded.shape() == t.shape(), ErrorCode::IoError,
          "checkpoint shape mismatch at " + name);
    for (int64_t k = 0; k < t.numel(); ++k)
      t.data()[k] = static_cast<T>(loaded.data()[k]);
  }
  return {cfg, params};
}

// ---------------------------------------------------------------------------
// Training

struct TrainOptions {
  int epochs = 30;
  int batch = 4;
  double lr = 3e-4;
  bool stretch = true;           // PanoStretch augmentation on the fly
  double stretch_min = 0.5, stretch_max = 2.0;
  uint64_t seed = 0;             // shuffle + augmentation streams
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_pixel_error = -1.0;  // -1 when no validation set
};

struct TrainResult {
  ModelParams<double> params;
  std::vector<EpochStats> log;
};

inline double dataset_pixel_error(const std::vector<DatasetSample>& set,
                                  const ModelConfig& cfg,
                                  const ModelParams<double>& params) {
  double total = 0.0;
  for (const auto& s : set) {
    const auto out = model_forward(s.image, cfg, params);
    total += pixel_error(boundary_from_forward(out), s.gt, cfg.height);
  }
  return set.empty() ? -1.0 : total / static_cast<double>(set.size());
}

inline TrainResult train(const std::vector<DatasetSample>& train_set,
                         const std::vector<DatasetSample>& val_set,
                         const ModelConfig& cfg, const TrainOptions& opt) {
  check(!train_set.empty(), ErrorCode::EmptyDataset, "train: empty dataset");
  cfg.validate();

  TrainResult res;
  res.params = init_params<double>(cfg);
  auto plist = res.params.all();
  AdamState<double> adam;
  adam.lr = opt.lr;

  Rng shuffle_rng(opt.seed, "shuffle");
  Rng stretch_rng(opt.seed, "stretch");
  std::vector<size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), size_t{0});

  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    size_t seen = 0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(opt.batch)) {
      const size_t bs = std::min(static_cast<size_t>(opt.batch), order.size() - start);
      for (auto& p : plist) p.zero_grad();
      for (size_t k = 0; k < bs; ++k) {
        const DatasetSample& s = train_set[order[start + k]];
        Tensor<double> image = s.image;
        BoundaryMap gt = s.gt;
        if (opt.stretch) {
          StretchFactors f;
          f.kx = stretch_rng.log_uniform(opt.stretch_min, opt.stretch_max);
          f.kz = stretch_rng.log_uniform(opt.stretch_min, opt.stretch_max);
          auto [warped, layout] = pano_stretch(image, layout_from_spec(s.spec), f);
          image = std::move(warped);
          gt = layout_boundaries(layout, cfg.width).map;
        }
        auto out = model_forward(image, cfg, res.params);
        Tensor<double> loss = scale(model_loss(out, gt), 1.0 / static_cast<double>(bs));
        loss.backward();
        loss_sum += loss.item() * static_cast<double>(bs);
        ++seen;
      }
      adam_step(plist, adam);
    }
    EpochStats st;
    st.epoch = epoch;
    st.train_loss = loss_sum / static_cast<double>(seen);
    if (!val_set.empty()) st.val_pixel_error = dataset_pixel_error(val_set, cfg, res.params);
    res.log.push_back(st);
  }
  return res;
}

}  // namespace omni
