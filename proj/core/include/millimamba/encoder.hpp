#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "millimamba/nn.hpp"
#include "millimamba/ssm.hpp"

namespace millimamba::encoder {

using tensor::ParamStore;

enum class ScanOrder { kRaster, kSerpentine };
enum class EncoderType { kMamba, kTransformer };

struct EncoderConfig {
  std::size_t channels = 32;  // C_f
  std::size_t frames = 3;     // T
  std::size_t height = 16;    // H, angle bins
  std::size_t doppler = 8;    // D, merged away by the stem
  std::size_t width = 32;     // W, range bins
  std::size_t layers = 4;     // L_e
  std::size_t d_state = 16;
  std::size_t views = 2;
  std::size_t expand = 2;
  std::size_t conv_kernel = 4;
  std::size_t dt_rank = 0;  // 0 selects ceil(C_f / 16)
  ScanOrder scan = ScanOrder::kRaster;
  EncoderType type = EncoderType::kMamba;

  static constexpr std::size_t kDownsample = 4;

  void validate() const;
  std::size_t grid_h() const { return height / kDownsample; }
  std::size_t grid_w() const { return width / kDownsample; }
  std::size_t tokens() const { return frames * views * grid_h() * grid_w(); }
  std::size_t inner() const { return expand * channels; }
  std::size_t resolved_dt_rank() const { return dt_rank ? dt_rank : (channels + 15) / 16; }
};

struct TokenCoord {
  std::size_t frame = 0;
  std::size_t view = 0;
  std::size_t angle = 0;
  std::size_t range = 0;
  bool operator==(const TokenCoord&) const = default;
};

// Position of (f, view, a, r) in the flattened sequence: range fastest, then
// angle, then view, then frame. Serpentine order reverses range on odd angle
// rows.
std::size_t scan_index(const TokenCoord& c, const EncoderConfig& cfg);
TokenCoord scan_coord(std::size_t index, const EncoderConfig& cfg);

// Per-view stem: [2][T][H][D][W] -> [C_f][T][H/4][W/4].
class Stem {
 public:
  Stem(ParamStore& store, const std::string& name, const EncoderConfig& cfg);
  Tensor operator()(const Tensor& input) const;

 private:
  struct ResBlock {
    Tensor conv1_w, conv1_b, conv2_w, conv2_b;
    Tensor skip_w;  // 1x1x1 projection when channels change
    Tensor operator()(const Tensor& x) const;
  };
  static ResBlock make_block(ParamStore& store, const std::string& name, std::size_t in, std::size_t out);

  EncoderConfig cfg_;
  Tensor merge_w_, merge_b_;
  ResBlock blocks_[3];
};

// One SSM branch of a Vim layer.
struct SsmBranch {
  Tensor conv_w, conv_b;  // [E][K], [E]
  nn::Linear x_proj;      // E -> dt_rank + 2 n
  nn::Linear dt_proj;     // dt_rank -> E
  Tensor a_log;           // [E][n]
  Tensor skip;            // [E]
  std::size_t dt_rank = 0;
  std::size_t d_state = 0;
  Direction direction = Direction::kForward;

  SsmBranch() = default;
  SsmBranch(ParamStore& store, const std::string& name, std::size_t inner, std::size_t dt_rank, std::size_t d_state,
            std::size_t kernel, Direction direction);
  // x: [L][E] -> [L][E]
  Tensor operator()(const Tensor& x) const;
};

class VimLayer {
 public:
  VimLayer(ParamStore& store, const std::string& name, const EncoderConfig& cfg);
  // tokens: [N][C_f] -> [N][C_f]
  Tensor operator()(const Tensor& tokens) const;

  const nn::Linear& out_proj() const { return out_proj_; }
  const SsmBranch& branch(Direction d) const { return d == Direction::kForward ? fwd_ : bwd_; }

 private:
  std::size_t inner_;
  nn::LayerNorm norm_;
  nn::Linear in_proj_;
  SsmBranch fwd_, bwd_;
  nn::Linear out_proj_;
};

// Parameter name letter for a view: "h" or "v".
std::string view_key(std::size_t view_id);

class Encoder {
 public:
  // `view_ids` lists the radar views in concatenation order (0 = horizontal,
  // 1 = vertical); its size must equal cfg.views.
  Encoder(ParamStore& store, const EncoderConfig& cfg, std::vector<std::size_t> view_ids);

  // One [2][T][H][D][W] input per view, in view_ids order. Returns F' [N][C_f].
  Tensor encode(std::span<const Tensor> views) const;
  // Positional embeddings laid out in scan order, [N][C_f].
  Tensor positional_tokens() const;
  // Flattens per-view [T][h][w][C] blocks into scan order.
  Tensor flatten(std::span<const Tensor> per_view) const;

  // Throws NumericError unless every A = -exp(a_log) is strictly negative.
  void check_stability() const;

  const EncoderConfig& config() const { return cfg_; }
  const std::vector<VimLayer>& layers() const { return layers_; }

 private:
  EncoderConfig cfg_;
  std::vector<std::size_t> view_ids_;
  std::vector<Stem> stems_;
  std::vector<Tensor> pos_;  // [h][w][C_f] per view
  std::vector<VimLayer> layers_;
  nn::LayerNorm final_norm_;
  std::vector<std::size_t> order_;  // serpentine gather, empty for raster
};

}  // namespace millimamba::encoder
