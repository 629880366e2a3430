#include "millimamba/diagnostics.hpp"

#include <random>

#include "millimamba/encoder.hpp"
#include "millimamba/objective.hpp"

namespace millimamba {

tensor::GradCheckReport end_to_end_gradcheck(const TinyModelSpec& spec, const tensor::GradCheckOptions& options) {
  tensor::ParamStore store(spec.seed);
  encoder::EncoderConfig ec;
  ec.channels = spec.channels;
  ec.frames = spec.frames;
  ec.height = spec.height;
  ec.doppler = spec.doppler;
  ec.width = spec.width;
  ec.layers = spec.encoder_layers;
  ec.d_state = spec.d_state;
  ec.views = spec.views;
  std::vector<std::size_t> view_ids;
  for (std::size_t v = 0; v < spec.views; ++v) view_ids.push_back(v);
  encoder::Encoder enc(store, ec, view_ids);
  decoder::DecoderConfig dc;
  dc.layers = spec.decoder_layers;
  dc.heads = spec.heads;
  dc.d_model = spec.d_model;
  dc.joints = spec.joints;
  dc.frames = spec.frames;
  dc.memory_dim = spec.channels;
  dc.strategy = spec.strategy;
  decoder::Decoder dec(store, dc);

  std::mt19937_64 rng(spec.seed + 17);
  std::normal_distribution<double> noise(0.0, spec.jitter);
  for (auto t : store.tensors())
    for (double& v : t.mutable_data()) v += noise(rng);

  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<tensor::Tensor> inputs;
  for (std::size_t v = 0; v < spec.views; ++v) {
    tensor::Shape shape{2, spec.frames, spec.height, spec.doppler, spec.width};
    std::vector<double> data(tensor::numel(shape));
    for (auto& x : data) x = unit(rng);
    inputs.emplace_back(shape, std::move(data));
  }
  PoseWindow gt(dc.query_frames(), spec.joints);
  std::uniform_real_distribution<double> coord(0.2, 0.8);
  for (auto& c : gt.coords) c = coord(rng);

  objective::OksParams oks = objective::OksParams::defaults(spec.joints);
  auto fn = [&] {
    auto pred = dec.decode(enc.encode(inputs), enc.positional_tokens());
    return objective::total_loss(pred, gt, spec.lambda_vel, oks).total;
  };
  return tensor::grad_check(fn, store.tensors(), options);
}

}  // namespace millimamba
