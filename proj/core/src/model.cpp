#include "millimamba/model.hpp"

#include <fstream>

#include "millimamba/error.hpp"

namespace millimamba {

namespace {

const ModelConfig& checked(const ModelConfig& cfg) {
  cfg.validate();
  return cfg;
}

}  // namespace

Model::Model(const ModelConfig& cfg)
    : cfg_(checked(cfg)),
      store_(cfg.seed),
      encoder_(store_, cfg.encoder_config(), cfg.views),
      decoder_(store_, cfg.decoder_config()) {}

tensor::Tensor Model::forward(std::span<const tensor::Tensor> views) const {
  tensor::Tensor memory = encoder_.encode(views);
  return decoder_.decode(memory, encoder_.positional_tokens());
}

PoseWindow Model::target(const PoseWindow& window) const {
  require(window.frames == cfg_.frames && window.joints == cfg_.joints, "target: window shape mismatch");
  return cfg_.strategy == decoder::Strategy::kManyToMany ? window : window.frame((cfg_.frames - 1) / 2);
}

std::size_t Model::center_row() const {
  return cfg_.strategy == decoder::Strategy::kManyToMany ? (cfg_.frames - 1) / 2 : 0;
}

void Model::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint '" + path + "'");
  store_.save(out);
  if (!out) throw std::runtime_error("failed while writing checkpoint '" + path + "'");
}

void Model::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open checkpoint '" + path + "'");
  store_.load(in);
  encoder_.check_stability();
}

}  // namespace millimamba
