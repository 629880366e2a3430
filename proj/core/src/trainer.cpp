#include "millimamba/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "millimamba/error.hpp"
#include "millimamba/ops.hpp"
#include "millimamba/optim.hpp"

namespace millimamba {

std::string TrainRecord::to_json() const {
  nlohmann::json j;
  j["step"] = step;
  j["total"] = total;
  j["oks"] = oks;
  j["vel"] = vel;
  j["grad_norm"] = grad_norm;
  j["wall_time_s"] = wall_time;
  return j.dump();
}

BatchLoss batch_loss(const Model& model, const LabeledSequence& data, std::span<const WindowSpan> windows) {
  require(!windows.empty(), "batch_loss: empty batch");
  const auto& cfg = model.config();
  const auto params = cfg.oks_params();
  BatchLoss out;
  tensor::Tensor sum;
  for (const auto& w : windows) {
    const auto inputs = data.features.window_inputs(w.first);
    const auto pred = model.forward(inputs);
    const auto gt = model.target(data.script.poses(w.first, cfg.frames));
    auto terms = objective::total_loss(pred, gt, cfg.lambda_vel, params);
    sum = sum.defined() ? tensor::add(sum, terms.total) : terms.total;
    out.oks += terms.oks.item();
    out.vel += terms.vel.item();
  }
  const double inv = 1.0 / static_cast<double>(windows.size());
  out.total = tensor::scale(sum, inv);
  out.oks *= inv;
  out.vel *= inv;
  return out;
}

double dataset_loss(const Model& model, const LabeledSequence& data) {
  tensor::NoGradGuard guard;
  const auto windows = make_windows(data.features.frames(), model.config().frames, model.config().window_stride);
  double acc = 0.0;
  for (const auto& w : windows) acc += batch_loss(model, data, std::span(&w, 1)).total.item();
  return acc / static_cast<double>(windows.size());
}

TrainResult train(Model& model, const LabeledSequence& data, const TrainOptions& options) {
  const auto& cfg = model.config();
  const std::size_t steps = options.steps ? options.steps : cfg.steps;
  const std::size_t cadence = options.checkpoint_every ? options.checkpoint_every : cfg.checkpoint_every;
  const auto windows = make_windows(data.features.frames(), cfg.frames, cfg.window_stride);
  require(data.script.frame_count == data.features.frames(), "train: labels and features cover different frames");

  auto params = model.params().tensors();
  tensor::AdamOptions adam_opts;
  adam_opts.lr = cfg.lr;
  adam_opts.beta1 = cfg.beta1;
  adam_opts.beta2 = cfg.beta2;
  adam_opts.eps = cfg.adam_eps;
  adam_opts.weight_decay = cfg.weight_decay;
  tensor::Adam adam(params, adam_opts);

  // Fixed iteration order: reshuffle the window list every epoch from one RNG.
  std::mt19937_64 rng(cfg.seed ^ 0x5DEECE66DULL);
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t cursor = 0;

  TrainResult result;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t step = 0; step < steps; ++step) {
    std::vector<WindowSpan> batch;
    for (std::size_t b = 0; b < cfg.batch; ++b) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      batch.push_back(windows[order[cursor++]]);
    }
    TrainRecord rec;
    rec.step = step;
    try {
      model.params().zero_grad();
      tensor::Tape tape;
      tensor::TapeScope scope(tape);
      const auto loss = batch_loss(model, data, batch);
      tape.backward(loss.total);
      rec.total = loss.total.item();
      rec.oks = loss.oks;
      rec.vel = loss.vel;
      double sq = 0.0;
      for (const auto& p : params)
        for (double g : p.grad()) sq += g * g;
      rec.grad_norm = std::sqrt(sq);
      if (!std::isfinite(rec.grad_norm)) throw NumericError("non-finite gradient norm");
      adam.step();
      model.encoder().check_stability();
    } catch (const NumericError& e) {
      result.aborted = true;
      result.failed_step = step;
      result.error = e.what();
      return result;
    }
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.records.push_back(rec);
    if (options.on_record) options.on_record(rec);
    if (cadence && !options.checkpoint_prefix.empty() && (step + 1) % cadence == 0)
      model.save(options.checkpoint_prefix + "step" + std::to_string(step + 1) + ".mmck");
  }
  return result;
}

InferResult infer(const Model& model, const FeatureSequence& features) {
  const auto& cfg = model.config();
  tensor::NoGradGuard guard;
  const auto windows = make_windows(features.frames(), cfg.frames, cfg.window_stride);
  InferResult out;
  out.poses = PoseWindow(windows.size(), cfg.joints);
  const std::size_t row = model.center_row();
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto pred = model.forward(features.window_inputs(windows[i].first));
    const auto v = pred.data();
    for (std::size_t j = 0; j < cfg.joints; ++j) {
      out.poses.x(i, j) = v[(row * cfg.joints + j) * 2];
      out.poses.y(i, j) = v[(row * cfg.joints + j) * 2 + 1];
    }
    out.poses.frame_ids.push_back(windows[i].center);
    out.windows.push_back(i);
  }
  out.skipped_leading = windows.front().center;
  out.skipped_trailing = features.frames() - 1 - windows.back().center;
  return out;
}

objective::ApReport evaluate(const Model& model, const LabeledSequence& data) {
  const auto result = infer(model, data.features);
  PoseWindow gt(result.poses.frames, model.config().joints);
  for (std::size_t i = 0; i < result.poses.frames; ++i) {
    const auto frame = data.script.poses(result.poses.frame_ids[i], 1);
    std::copy(frame.coords.begin(), frame.coords.end(), gt.coords.begin() + static_cast<std::ptrdiff_t>(i * gt.joints * 2));
    gt.frame_ids.push_back(result.poses.frame_ids[i]);
  }
  return objective::evaluate_ap(result.poses, gt, model.config().oks_params());
}

std::vector<AblationRow> ablate(const ModelConfig& base, const AblationSpec& spec,
                                const std::function<void(const std::string&)>& progress) {
  require(!spec.values.empty(), "ablate: no values given");
  const std::string key = spec.axis == "T" ? "frames" : spec.axis;
  std::vector<AblationRow> rows;
  for (const auto& value : spec.values) {
    ModelConfig cfg = base;
    // "hv" stands for both views since the value list itself is comma separated.
    cfg.set(key, key == "views" && value == "hv" ? "h,v" : value);
    cfg.validate();
    if (progress) progress(spec.axis + " = " + value);
    const std::size_t train_frames = spec.train_frames ? spec.train_frames : cfg.scene_frames;
    const std::size_t test_frames = spec.test_frames ? spec.test_frames : cfg.scene_frames;
    const auto train_data = simulate_sequence(cfg, train_frames, cfg.seed);
    const auto test_data = simulate_sequence(cfg, test_frames, cfg.seed + 1);
    Model model(cfg);
    AblationRow row;
    row.value = value;
    row.initial_loss = dataset_loss(model, train_data);
    const auto result = train(model, train_data);
    if (result.aborted)
      throw NumericError("ablate: training for " + spec.axis + " = " + value + " aborted at step " +
                         std::to_string(result.failed_step) + ": " + result.error);
    row.final_loss = dataset_loss(model, train_data);
    row.report = evaluate(model, test_data);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string ablation_table(const std::string& axis, const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1);
  os << "| " << axis << " | AP | AP50 | AP75 | mean OKS | train loss (start -> end) |\n";
  os << "|---|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    os << "| " << r.value << " | " << 100.0 * r.report.ap << " | " << 100.0 * r.report.ap50 << " | "
       << 100.0 * r.report.ap75 << " | " << std::setprecision(3) << r.report.mean_oks << " | " << r.initial_loss
       << " -> " << r.final_loss << " |\n"
       << std::setprecision(1);
  }
  return os.str();
}

}  // namespace millimamba
