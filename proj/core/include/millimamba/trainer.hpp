#pragma once

#include <functional>
#include <string>
#include <vector>

#include "millimamba/dataset.hpp"
#include "millimamba/model.hpp"

namespace millimamba {

struct TrainRecord {
  std::size_t step = 0;
  double total = 0.0;
  double oks = 0.0;
  double vel = 0.0;
  double grad_norm = 0.0;
  double wall_time = 0.0;  // seconds since training started

  std::string to_json() const;  // one line
};

struct TrainOptions {
  std::size_t steps = 0;  // 0 takes cfg.steps
  std::size_t checkpoint_every = 0;  // 0 takes cfg.checkpoint_every
  std::string checkpoint_prefix;     // "<prefix>step<N>.mmck"; empty disables
  std::function<void(const TrainRecord&)> on_record;
};

struct TrainResult {
  std::vector<TrainRecord> records;
  bool aborted = false;
  std::size_t failed_step = 0;
  std::string error;
};

// Mean losses of one batch of windows; differentiable when a tape is active.
struct BatchLoss {
  tensor::Tensor total;
  double oks = 0.0;
  double vel = 0.0;
};
BatchLoss batch_loss(const Model& model, const LabeledSequence& data, std::span<const WindowSpan> windows);

// Mean total loss over every window of `data`, without recording.
double dataset_loss(const Model& model, const LabeledSequence& data);

// Adam over shuffled mini-batches (seeded by cfg.seed). A non-finite value
// stops training and is reported through TrainResult.
TrainResult train(Model& model, const LabeledSequence& data, const TrainOptions& options = {});

struct InferResult {
  PoseWindow poses;  // one row per window, frame_ids = centre frames
  std::vector<std::size_t> windows;
  std::size_t skipped_leading = 0;
  std::size_t skipped_trailing = 0;
};

// Centre-frame prediction for every full window; boundary frames are skipped.
InferResult infer(const Model& model, const FeatureSequence& features);

objective::ApReport evaluate(const Model& model, const LabeledSequence& data);

struct AblationSpec {
  std::string axis;  // config key, or T for frames
  std::vector<std::string> values;
  std::size_t train_frames = 0;  // 0 takes cfg.scene_frames
  std::size_t test_frames = 0;   // 0 takes cfg.scene_frames
};

struct AblationRow {
  std::string value;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  objective::ApReport report;
};

// One train + evaluate run per value; the test scene uses seed + 1.
std::vector<AblationRow> ablate(const ModelConfig& base, const AblationSpec& spec,
                                const std::function<void(const std::string&)>& progress = {});
std::string ablation_table(const std::string& axis, const std::vector<AblationRow>& rows);

}  // namespace millimamba
