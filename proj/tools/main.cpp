// millimamba command-line front end.
//
// Exit codes: 0 success, 1 invalid input or usage, 2 runtime failure
// (numerical error, failed gradient check, I/O failure).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "millimamba/diagnostics.hpp"
#include "millimamba/error.hpp"
#include "millimamba/json_io.hpp"
#include "millimamba/trainer.hpp"

namespace fs = std::filesystem;
using namespace millimamba;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kRuntime = 2;

// Raised for a failed check rather than bad input.
struct CheckFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool out_required) {
  cmd->add_option("--config", c.config_path, "Flat key = value config file");
  cmd->add_option("--seed", c.seed, "Overrides the config seed");
  auto* out = cmd->add_option("--out", c.out, "Output path");
  if (out_required) out->required();
}

ModelConfig load_config(const Common& c) {
  ModelConfig cfg = c.config_path.empty() ? ModelConfig{} : ModelConfig::load(c.config_path);
  if (c.seed) cfg.seed = *c.seed;
  cfg.validate();
  return cfg;
}

void write_binary(const std::string& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  body(out);
  if (!out) throw std::runtime_error("failed while writing '" + path + "'");
}

std::ifstream open_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open '" + path + "'");
  return in;
}

// A data directory written by `simulate`, optionally with heatmaps.mmh3 from
// `preprocess`.
LabeledSequence load_data(const std::string& dir, const ModelConfig& cfg) {
  LabeledSequence data;
  data.script = io::scene_from_json(io::read_text((fs::path(dir) / "scene.json").string()));
  const auto heatmaps = fs::path(dir) / "heatmaps.mmh3";
  if (cfg.input == InputRepr::kFft3d && fs::exists(heatmaps)) {
    auto in = open_binary(heatmaps.string());
    std::vector<dsp::Heatmap3D> maps;
    dsp::Heatmap3D hm;
    while (dsp::read_heatmap(in, hm)) maps.push_back(std::move(hm));
    data.features = FeatureSequence::from_heatmaps(maps, cfg);
  } else {
    auto in = open_binary((fs::path(dir) / "cubes.mmrc").string());
    data.features = FeatureSequence::from_cube_stream(radar::read_cube_stream(in), cfg);
  }
  require(data.features.frames() == data.script.frame_count, "data directory: scene and radar frame counts differ");
  return data;
}

void print_report(const objective::ApReport& r) {
  std::printf("frames = %zu\n", r.frames);
  std::printf("AP = %.1f\nAP50 = %.1f\nAP75 = %.1f\nmean OKS = %.4f\n", 100.0 * r.ap, 100.0 * r.ap50,
              100.0 * r.ap75, r.mean_oks);
  if (!r.groups.empty()) {
    std::string head = "|", rule = "|", row = "|";
    for (const auto& [name, v] : r.groups) {
      head += " " + name + " |";
      rule += "---|";
      char buf[32];
      std::snprintf(buf, sizeof buf, " %.1f |", v ? 100.0 * *v : 0.0);
      row += v ? std::string(buf) : std::string(" - |");
    }
    std::printf("%s\n%s\n%s\n", head.c_str(), rule.c_str(), row.c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"millimamba: radar heatmaps to human pose"};
  app.require_subcommand(1);

  // simulate
  Common sim;
  std::optional<std::size_t> sim_frames;
  auto* simulate = app.add_subcommand("simulate", "Synthesize a radar sequence with ground-truth poses");
  add_common(simulate, sim, true);
  simulate->add_option("--frames", sim_frames, "Frame count (default: scene_frames)");

  // preprocess
  std::string pre_in, pre_out, pre_window = "rect", pre_mode = "3d";
  std::size_t pre_target = 8, pre_pad = 64, pre_workers = 1;
  std::string pre_config;
  auto* preprocess = app.add_subcommand("preprocess", "Clutter removal, chirp subsampling and FFTs");
  preprocess->add_option("--config", pre_config, "Take defaults for the flags below from a config file");
  preprocess->add_option("--in", pre_in, "MMRC cube stream")->required();
  preprocess->add_option("--out", pre_out, "Output heatmap stream (MMH3 or MMH4)")->required();
  preprocess->add_option("--chirp-target", pre_target, "Chirps kept per frame");
  preprocess->add_option("--angle-pad", pre_pad, "Angle FFT size");
  preprocess->add_option("--window", pre_window, "rect or hann")->check(CLI::IsMember({"rect", "hann"}));
  preprocess->add_option("--mode", pre_mode, "3d or 4d")->check(CLI::IsMember({"3d", "4d"}));
  preprocess->add_option("--workers", pre_workers, "Worker threads (3d mode)");

  // bench-heatmap
  std::size_t bench_frames = 20, bench_runs = 5;
  std::string bench_out;
  auto* bench = app.add_subcommand("bench-heatmap", "Compare 3D and 4D FFT preprocessing cost");
  bench->add_option("--frames", bench_frames, "Frames per run");
  bench->add_option("--runs", bench_runs, "Timed runs (>= 5)");
  bench->add_option("--out", bench_out, "Write the report as JSON");

  // train
  Common tr;
  std::string tr_data;
  std::optional<std::size_t> tr_steps;
  auto* train_cmd = app.add_subcommand("train", "Train on a simulated data directory");
  add_common(train_cmd, tr, true);
  train_cmd->add_option("--data", tr_data, "Directory written by simulate")->required();
  train_cmd->add_option("--steps", tr_steps, "Overrides the config step budget");

  // eval
  Common ev;
  std::string ev_pred, ev_gt, ev_ckpt, ev_data;
  auto* eval = app.add_subcommand("eval", "OKS-based AP of predictions or of a checkpoint");
  add_common(eval, ev, false);
  eval->add_option("--pred", ev_pred, "Predicted poses JSON");
  eval->add_option("--gt", ev_gt, "Ground-truth poses JSON");
  eval->add_option("--checkpoint", ev_ckpt, "MMCK checkpoint");
  eval->add_option("--data", ev_data, "Directory written by simulate");

  // infer
  Common inf;
  std::string inf_ckpt, inf_data;
  auto* infer_cmd = app.add_subcommand("infer", "Centre-frame poses for every full window");
  add_common(infer_cmd, inf, true);
  infer_cmd->add_option("--checkpoint", inf_ckpt, "MMCK checkpoint")->required();
  infer_cmd->add_option("--data", inf_data, "Directory written by simulate")->required();

  // gradcheck
  std::size_t gc_samples = 40;
  double gc_tol = 1e-3;
  std::uint64_t gc_seed = 0;
  std::string gc_strategy = "many_to_many";
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of the end-to-end loss");
  gradcheck->add_option("--samples", gc_samples, "Parameter coordinates to check");
  gradcheck->add_option("--tol", gc_tol, "Relative error tolerance");
  gradcheck->add_option("--seed", gc_seed, "Seed for parameters, inputs and sampling");
  gradcheck->add_option("--strategy", gc_strategy, "many_to_many or many_to_one");

  // ablate
  Common ab;
  std::string ab_axis;
  std::vector<std::string> ab_values;
  std::optional<std::size_t> ab_steps, ab_train_frames, ab_test_frames;
  auto* ablate_cmd = app.add_subcommand("ablate", "Train and evaluate once per value of a config axis");
  add_common(ablate_cmd, ab, false);
  ablate_cmd->add_option("--axis", ab_axis, "T, views, strategy, lambda_vel, input, encoder or any config key")
      ->required();
  ablate_cmd->add_option("--values", ab_values, "Comma-separated values (views: h, v, hv)")
      ->required()
      ->delimiter(',');
  ablate_cmd->add_option("--steps", ab_steps, "Overrides the config step budget");
  ablate_cmd->add_option("--train-frames", ab_train_frames, "Frames in the training scene");
  ablate_cmd->add_option("--test-frames", ab_test_frames, "Frames in the test scene");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kInvalid;
  }

  try {
    if (*simulate) {
      const ModelConfig cfg = load_config(sim);
      auto spec = cfg.scene_spec();
      if (sim_frames) spec.frame_count = *sim_frames;
      fs::create_directories(sim.out);
      const auto script = radar::make_scene(spec, cfg.seed);
      std::ofstream cubes((fs::path(sim.out) / "cubes.mmrc").string(), std::ios::binary);
      if (!cubes) throw std::runtime_error("cannot write cubes.mmrc");
      radar::for_each_frame(script, spec, cfg.seed, cfg.dataset_options(), [&](std::size_t, radar::FrameCubes&& fc) {
        radar::write_cube(cubes, fc.horizontal);
        radar::write_cube(cubes, fc.vertical);
      });
      cubes.close();
      io::write_text((fs::path(sim.out) / "scene.json").string(), io::scene_to_json(script));
      io::write_text((fs::path(sim.out) / "poses.json").string(),
                     io::poses_to_json(script.poses(0, script.frame_count), script.image_width, script.image_height));
      io::write_text((fs::path(sim.out) / "config.txt").string(), cfg.serialize());
      std::printf("wrote %zu frames x 2 views to %s\n", script.frame_count, sim.out.c_str());
    } else if (*preprocess) {
      dsp::PreprocessOptions opts;
      if (!pre_config.empty()) opts = ModelConfig::load(pre_config).preprocess_options();
      if (!pre_config.empty() && preprocess->count("--window") == 0) pre_window = dsp::window_name(opts.window);
      if (pre_config.empty() || preprocess->count("--chirp-target")) opts.chirp_target = pre_target;
      if (pre_config.empty() || preprocess->count("--angle-pad")) opts.angle_pad = pre_pad;
      opts.window = dsp::parse_window(pre_window);
      auto in = open_binary(pre_in);
      const auto cubes = radar::read_cube_stream(in);
      write_binary(pre_out, [&](std::ostream& os) {
        if (pre_mode == "3d") {
          for (const auto& hm : dsp::preprocess_batch(cubes, opts, pre_workers)) dsp::write_heatmap(os, hm);
        } else {
          for (const auto& c : cubes) dsp::write_heatmap(os, dsp::preprocess_4d(c, opts));
        }
      });
      std::printf("wrote %zu %s heatmaps to %s\n", cubes.size(), pre_mode.c_str(), pre_out.c_str());
    } else if (*bench) {
      const auto report = dsp::bench_heatmaps(bench_frames, bench_runs);
      std::printf("latency per frame: 3d %.3f ms, 4d %.3f ms (ratio %.2fx, reference %.1fx)\n",
                  1e3 * report.latency_3d, 1e3 * report.latency_4d, report.latency_ratio(),
                  dsp::BenchReport::kReferenceLatencyRatio);
      std::printf("peak bytes: 3d %zu, 4d %zu (ratio %.2fx, reference %.1fx)\n",
                  static_cast<std::size_t>(report.peak_bytes_3d), static_cast<std::size_t>(report.peak_bytes_4d),
                  report.memory_ratio(), dsp::BenchReport::kReferenceMemoryRatio);
      std::printf("absolute ratios depend on hardware and on the 4D antenna-grouping convention\n");
      if (!bench_out.empty()) io::write_text(bench_out, report.to_json());
    } else if (*train_cmd) {
      ModelConfig cfg = load_config(tr);
      if (tr_steps) cfg.steps = *tr_steps;
      const auto data = load_data(tr_data, cfg);
      fs::create_directories(tr.out);
      Model model(cfg);
      std::ofstream records((fs::path(tr.out) / "train.jsonl").string());
      TrainOptions opts;
      opts.checkpoint_prefix = (fs::path(tr.out) / "").string();
      opts.on_record = [&](const TrainRecord& r) {
        records << r.to_json() << "\n";
        if (r.step % 100 == 0 || r.step + 1 == cfg.steps)
          std::printf("step %zu  loss %.5f  oks %.5f  vel %.6f  |g| %.3g\n", r.step, r.total, r.oks, r.vel,
                      r.grad_norm);
      };
      const auto result = train(model, data, opts);
      io::write_text((fs::path(tr.out) / "config.txt").string(), cfg.serialize());
      if (result.aborted) {
        records << nlohmann::json{{"aborted_step", result.failed_step}, {"error", result.error}}.dump() << "\n";
        std::fprintf(stderr, "training aborted at step %zu: %s\n", result.failed_step, result.error.c_str());
        return kRuntime;
      }
      model.save((fs::path(tr.out) / "checkpoint.mmck").string());
      std::printf("saved %s\n", (fs::path(tr.out) / "checkpoint.mmck").string().c_str());
    } else if (*eval) {
      objective::ApReport report;
      if (!ev_pred.empty() || !ev_gt.empty()) {
        require(!ev_pred.empty() && !ev_gt.empty(), "eval: --pred and --gt go together");
        const auto pred = io::poses_from_json(io::read_text(ev_pred));
        const auto gt = io::poses_from_json(io::read_text(ev_gt));
        const ModelConfig cfg = load_config(ev);
        auto params = cfg.oks_params();
        params.k = objective::default_falloffs(gt.joints);
        report = objective::evaluate_ap(pred, gt, params);
      } else {
        require(!ev_ckpt.empty() && !ev_data.empty(), "eval: give --pred/--gt or --checkpoint/--data");
        const ModelConfig cfg = load_config(ev);
        Model model(cfg);
        model.load(ev_ckpt);
        report = evaluate(model, load_data(ev_data, cfg));
      }
      print_report(report);
      if (!ev.out.empty()) io::write_text(ev.out, report.to_json());
    } else if (*infer_cmd) {
      const ModelConfig cfg = load_config(inf);
      Model model(cfg);
      model.load(inf_ckpt);
      const auto data = load_data(inf_data, cfg);
      const auto result = infer(model, data.features);
      io::write_text(inf.out, io::poses_to_json(result.poses, data.script.image_width, data.script.image_height,
                                                result.windows));
      std::printf("wrote %zu poses (skipped %zu leading and %zu trailing boundary frames)\n", result.poses.frames,
                  result.skipped_leading, result.skipped_trailing);
    } else if (*gradcheck) {
      TinyModelSpec spec;
      spec.seed = gc_seed;
      spec.strategy = decoder::parse_strategy(gc_strategy);
      tensor::GradCheckOptions opts;
      opts.samples = gc_samples;
      opts.tolerance = gc_tol;
      opts.seed = gc_seed;
      const auto report = end_to_end_gradcheck(spec, opts);
      std::printf("%s\n", report.summary().c_str());
      if (!report.passed) throw CheckFailed("gradient check failed");
    } else if (*ablate_cmd) {
      ModelConfig cfg = load_config(ab);
      if (ab_steps) cfg.steps = *ab_steps;
      AblationSpec spec;
      spec.axis = ab_axis;
      spec.values = ab_values;
      spec.train_frames = ab_train_frames.value_or(0);
      spec.test_frames = ab_test_frames.value_or(0);
      const auto rows = ablate(cfg, spec, [](const std::string& s) {
        std::printf("running %s\n", s.c_str());
        std::fflush(stdout);
      });
      const auto table = ablation_table(ab_axis, rows);
      std::printf("\n%s", table.c_str());
      if (!ab.out.empty()) io::write_text(ab.out, table);
    }
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInvalid;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntime;
  }
  return kOk;
}
