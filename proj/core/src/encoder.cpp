#include "millimamba/encoder.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "millimamba/error.hpp"
#include "millimamba/ops.hpp"

namespace millimamba::encoder {

namespace ops = tensor;

void EncoderConfig::validate() const {
  require(channels >= 2 && channels % 2 == 0, "encoder: channels must be even and >= 2");
  require(frames >= 1, "encoder: frames must be >= 1");
  require(height % kDownsample == 0 && height > 0, "encoder: H must be a positive multiple of 4");
  require(width % kDownsample == 0 && width > 0, "encoder: W must be a positive multiple of 4");
  require(doppler >= 1, "encoder: doppler dim must be >= 1");
  require(layers >= 1, "encoder: layers must be >= 1");
  require(d_state >= 1, "encoder: d_state must be >= 1");
  require(views == 1 || views == 2, "encoder: views must be 1 or 2");
  require(expand >= 1 && conv_kernel >= 1, "encoder: expand and conv_kernel must be >= 1");
}

std::size_t scan_index(const TokenCoord& c, const EncoderConfig& cfg) {
  const std::size_t h = cfg.grid_h(), w = cfg.grid_w();
  if (c.frame >= cfg.frames || c.view >= cfg.views || c.angle >= h || c.range >= w)
    fail("scan_index: coordinate out of bounds");
  std::size_t r = c.range;
  if (cfg.scan == ScanOrder::kSerpentine && c.angle % 2 == 1) r = w - 1 - r;
  return ((c.frame * cfg.views + c.view) * h + c.angle) * w + r;
}

TokenCoord scan_coord(std::size_t index, const EncoderConfig& cfg) {
  if (index >= cfg.tokens()) fail("scan_coord: index out of bounds");
  const std::size_t h = cfg.grid_h(), w = cfg.grid_w();
  TokenCoord c;
  c.range = index % w;
  index /= w;
  c.angle = index % h;
  index /= h;
  c.view = index % cfg.views;
  c.frame = index / cfg.views;
  if (cfg.scan == ScanOrder::kSerpentine && c.angle % 2 == 1) c.range = w - 1 - c.range;
  return c;
}

// ---------------------------------------------------------------------------

Stem::ResBlock Stem::make_block(ParamStore& store, const std::string& name, std::size_t in, std::size_t out) {
  ResBlock b;
  b.conv1_w = store.normal(name + ".conv1.weight", {out, in, 3, 3, 3});
  b.conv1_b = store.constant(name + ".conv1.bias", {out}, 0.0);
  b.conv2_w = store.normal(name + ".conv2.weight", {out, out, 3, 3, 3});
  b.conv2_b = store.constant(name + ".conv2.bias", {out}, 0.0);
  if (in != out) b.skip_w = store.normal(name + ".skip.weight", {out, in, 1, 1, 1});
  return b;
}

Tensor Stem::ResBlock::operator()(const Tensor& x) const {
  Tensor y = ops::silu(ops::conv3d_same(x, conv1_w, conv1_b));
  y = ops::conv3d_same(y, conv2_w, conv2_b);
  Tensor shortcut = skip_w.defined() ? ops::conv3d(x, skip_w, Tensor(), {}) : x;
  return ops::silu(ops::add(shortcut, y));
}

Stem::Stem(ParamStore& store, const std::string& name, const EncoderConfig& cfg) : cfg_(cfg) {
  const std::size_t half = cfg.channels / 2;
  merge_w_ = store.normal(name + ".merge.weight", {half, 2 * cfg.doppler, 1, 1, 1});
  merge_b_ = store.constant(name + ".merge.bias", {half}, 0.0);
  blocks_[0] = make_block(store, name + ".block1", half, half);
  blocks_[1] = make_block(store, name + ".block2", half, cfg.channels);
  blocks_[2] = make_block(store, name + ".block3", cfg.channels, cfg.channels);
}

Tensor Stem::operator()(const Tensor& input) const {
  const auto& c = cfg_;
  const tensor::Shape expected{2, c.frames, c.height, c.doppler, c.width};
  if (input.shape() != expected)
    fail("stem: expected input " + tensor::to_string(expected) + ", got " + tensor::to_string(input.shape()));
  // [2][T][H][D][W] -> [2][D][T][H][W] -> [2D][T][H][W]: real/imag and doppler
  // become channels so the 1x1x1 merge conv spans the whole doppler axis.
  Tensor x = ops::permute(input, {0, 3, 1, 2, 4});
  x = ops::reshape(x, {2 * c.doppler, c.frames, c.height, c.width});
  x = ops::silu(ops::conv3d(x, merge_w_, merge_b_, {}));
  x = blocks_[0](x);
  x = ops::avg_pool3d(x, {1, 2, 2});
  x = blocks_[1](x);
  x = ops::avg_pool3d(x, {1, 2, 2});
  return blocks_[2](x);
}

// ---------------------------------------------------------------------------

SsmBranch::SsmBranch(ParamStore& store, const std::string& name, std::size_t inner, std::size_t rank,
                     std::size_t n, std::size_t kernel, Direction dir)
    : dt_rank(rank), d_state(n), direction(dir) {
  conv_w = store.normal(name + ".conv.weight", {inner, kernel});
  conv_b = store.constant(name + ".conv.bias", {inner}, 0.0);
  x_proj = nn::Linear(store, name + ".x_proj", inner, rank + 2 * n, false);
  dt_proj = nn::Linear(store, name + ".dt_proj", rank, inner, false);
  // Step sizes start log-uniform in [1e-3, 1e-1] through an inverse-softplus bias.
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> dt_bias(inner);
  for (auto& b : dt_bias) {
    const double dt = std::exp(std::log(1e-3) + unit(store.rng()) * (std::log(1e-1) - std::log(1e-3)));
    b = dt + std::log(-std::expm1(-dt));
  }
  dt_proj.bias = store.values(name + ".dt_proj.bias", {inner}, std::move(dt_bias));
  std::vector<double> a(inner * n);
  for (std::size_t i = 0; i < inner; ++i)
    for (std::size_t k = 0; k < n; ++k) a[i * n + k] = std::log(static_cast<double>(k + 1));
  a_log = store.values(name + ".a_log", {inner, n}, std::move(a));
  skip = store.constant(name + ".d", {inner}, 1.0);
}

Tensor SsmBranch::operator()(const Tensor& x) const {
  Tensor u = ops::silu(causal_conv1d(x, conv_w, conv_b, direction));
  Tensor proj = x_proj(u);
  Tensor dt_in = ops::slice(proj, 1, 0, dt_rank);
  Tensor b = ops::slice(proj, 1, dt_rank, dt_rank + d_state);
  Tensor c = ops::slice(proj, 1, dt_rank + d_state, dt_rank + 2 * d_state);
  Tensor delta = ops::softplus(dt_proj(dt_in));
  Tensor a = ops::scale(ops::exp(a_log), -1.0);
  return selective_scan(u, delta, a, b, c, skip, direction);
}

VimLayer::VimLayer(ParamStore& store, const std::string& name, const EncoderConfig& cfg)
    : inner_(cfg.inner()),
      norm_(store, name + ".norm", cfg.channels),
      in_proj_(store, name + ".in_proj", cfg.channels, 2 * cfg.inner()),
      fwd_(store, name + ".fwd", cfg.inner(), cfg.resolved_dt_rank(), cfg.d_state, cfg.conv_kernel,
           Direction::kForward),
      bwd_(store, name + ".bwd", cfg.inner(), cfg.resolved_dt_rank(), cfg.d_state, cfg.conv_kernel,
           Direction::kBackward),
      out_proj_(store, name + ".out_proj", cfg.inner(), cfg.channels) {}

Tensor VimLayer::operator()(const Tensor& tokens) const {
  require(tokens.rank() == 2 && tokens.dim(1) == norm_.gamma.size(), "vim_layer: tokens must be [N][C_f]");
  Tensor xz = in_proj_(norm_(tokens));
  Tensor x = ops::slice(xz, 1, 0, inner_);
  Tensor z = ops::slice(xz, 1, inner_, 2 * inner_);
  Tensor y = ops::add(fwd_(x), bwd_(x));
  y = ops::mul(y, ops::silu(z));
  return ops::add(tokens, out_proj_(y));
}

// ---------------------------------------------------------------------------

std::string view_key(std::size_t view_id) {
  if (view_id > 1) fail("view id must be 0 (horizontal) or 1 (vertical)");
  return view_id == 0 ? "h" : "v";
}

Encoder::Encoder(ParamStore& store, const EncoderConfig& cfg, std::vector<std::size_t> view_ids)
    : cfg_(cfg), view_ids_(std::move(view_ids)) {
  cfg_.validate();
  if (cfg_.type == EncoderType::kTransformer)
    throw std::runtime_error("encoder type 'transformer' is not implemented");
  require(view_ids_.size() == cfg_.views, "encoder: view list does not match configured view count");
  for (std::size_t v : view_ids_) stems_.emplace_back(store, "encoder.stem." + view_key(v), cfg_);
  for (std::size_t v : view_ids_)
    pos_.push_back(store.normal("encoder.pos." + view_key(v), {cfg_.grid_h(), cfg_.grid_w(), cfg_.channels}));
  for (std::size_t i = 0; i < cfg_.layers; ++i) layers_.emplace_back(store, "encoder.vim." + std::to_string(i), cfg_);
  final_norm_ = nn::LayerNorm(store, "encoder.norm", cfg_.channels);
  if (cfg_.scan == ScanOrder::kSerpentine) {
    // order_[p] = raster position of the token that lands at sequence position p.
    EncoderConfig raster = cfg_;
    raster.scan = ScanOrder::kRaster;
    order_.resize(cfg_.tokens());
    for (std::size_t p = 0; p < order_.size(); ++p) order_[p] = scan_index(scan_coord(p, cfg_), raster);
  }
}

Tensor Encoder::flatten(std::span<const Tensor> per_view) const {
  const std::size_t t = cfg_.frames, hw = cfg_.grid_h() * cfg_.grid_w(), c = cfg_.channels;
  std::vector<Tensor> parts;
  for (const auto& v : per_view) parts.push_back(ops::reshape(v, {t, 1, hw, c}));
  Tensor seq = parts.size() == 1 ? parts[0] : ops::concat(parts, 1);
  seq = ops::reshape(seq, {cfg_.tokens(), c});
  return order_.empty() ? seq : ops::gather(seq, order_);
}

Tensor Encoder::encode(std::span<const Tensor> views) const {
  require(views.size() == cfg_.views, "encode: expected one input per configured view");
  std::vector<Tensor> per_view;
  for (std::size_t i = 0; i < views.size(); ++i) {
    Tensor f = stems_[i](views[i]);         // [C][T][h][w]
    f = ops::permute(f, {1, 2, 3, 0});      // [T][h][w][C]
    per_view.push_back(ops::add(f, pos_[i]));
  }
  Tensor x = flatten(per_view);
  for (const auto& layer : layers_) x = layer(x);
  return final_norm_(x);
}

Tensor Encoder::positional_tokens() const {
  const std::size_t t = cfg_.frames, h = cfg_.grid_h(), w = cfg_.grid_w(), c = cfg_.channels;
  std::vector<Tensor> per_view;
  for (const auto& p : pos_) per_view.push_back(ops::add(Tensor::zeros({t, h, w, c}), p));
  return flatten(per_view);
}

void Encoder::check_stability() const {
  for (const auto& layer : layers_) {
    for (Direction d : {Direction::kForward, Direction::kBackward}) {
      for (double v : layer.branch(d).a_log.data()) {
        if (!std::isfinite(v) || !(std::exp(v) > 0.0))
          throw NumericError("encoder: state matrix lost strict stability (a_log = " + std::to_string(v) + ")");
      }
    }
  }
}

}  // namespace millimamba::encoder
