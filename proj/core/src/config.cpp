#include "millimamba/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include "millimamba/error.hpp"

namespace millimamba {

std::string input_repr_name(InputRepr r) { return r == InputRepr::kFft3d ? "fft3d" : "fft4d"; }

std::string views_name(const std::vector<std::size_t>& views) {
  std::string out;
  for (std::size_t i = 0; i < views.size(); ++i) out += (i ? "," : "") + encoder::view_key(views[i]);
  return out;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) fail("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  std::istringstream is(v);
  is.imbue(std::locale::classic());
  double out = 0.0;
  is >> out;
  if (is.fail() || !is.eof() || !std::isfinite(out))
    fail("config: '" + key + "' expects a finite number, got '" + v + "'");
  return out;
}

std::string format_real(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return os.str();
}

std::vector<std::size_t> parse_views(const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item == "h") out.push_back(0);
    else if (item == "v") out.push_back(1);
    else fail("config: views expects a list of h and v, got '" + v + "'");
  }
  return out;
}

struct Field {
  const char* key;
  std::function<std::string(const ModelConfig&)> get;
  std::function<void(ModelConfig&, const std::string&)> set;
};

#define MM_SIZE(name) \
  Field{#name, [](const ModelConfig& c) { return std::to_string(c.name); }, \
        [](ModelConfig& c, const std::string& v) { c.name = parse_size(#name, v); }}
#define MM_REAL(name) \
  Field{#name, [](const ModelConfig& c) { return format_real(c.name); }, \
        [](ModelConfig& c, const std::string& v) { c.name = parse_real(#name, v); }}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      MM_SIZE(frames),
      MM_SIZE(window_stride),
      MM_SIZE(antennas),
      MM_SIZE(chirps),
      MM_SIZE(samples),
      MM_SIZE(chirp_target),
      MM_SIZE(angle_pad),
      MM_SIZE(elevation_pad),
      Field{"window", [](const ModelConfig& c) { return std::string(dsp::window_name(c.window)); },
            [](ModelConfig& c, const std::string& v) { c.window = dsp::parse_window(v); }},
      Field{"input", [](const ModelConfig& c) { return input_repr_name(c.input); },
            [](ModelConfig& c, const std::string& v) {
              if (v == "fft3d") c.input = InputRepr::kFft3d;
              else if (v == "fft4d") c.input = InputRepr::kFft4d;
              else fail("config: input expects fft3d or fft4d, got '" + v + "'");
            }},
      Field{"views", [](const ModelConfig& c) { return views_name(c.views); },
            [](ModelConfig& c, const std::string& v) { c.views = parse_views(v); }},
      MM_SIZE(scene_frames),
      MM_REAL(noise),
      MM_SIZE(channels),
      MM_SIZE(encoder_layers),
      MM_SIZE(d_state),
      MM_SIZE(expand),
      MM_SIZE(conv_kernel),
      Field{"scan", [](const ModelConfig& c) {
              return std::string(c.scan == encoder::ScanOrder::kRaster ? "raster" : "serpentine");
            },
            [](ModelConfig& c, const std::string& v) {
              if (v == "raster") c.scan = encoder::ScanOrder::kRaster;
              else if (v == "serpentine") c.scan = encoder::ScanOrder::kSerpentine;
              else fail("config: scan expects raster or serpentine, got '" + v + "'");
            }},
      Field{"encoder", [](const ModelConfig& c) {
              return std::string(c.encoder_type == encoder::EncoderType::kMamba ? "mamba" : "transformer");
            },
            [](ModelConfig& c, const std::string& v) {
              if (v == "mamba") c.encoder_type = encoder::EncoderType::kMamba;
              else if (v == "transformer") c.encoder_type = encoder::EncoderType::kTransformer;
              else fail("config: encoder expects mamba or transformer, got '" + v + "'");
            }},
      MM_SIZE(decoder_layers),
      MM_SIZE(heads),
      MM_SIZE(d_model),
      MM_SIZE(joints),
      Field{"strategy", [](const ModelConfig& c) { return decoder::strategy_name(c.strategy); },
            [](ModelConfig& c, const std::string& v) { c.strategy = decoder::parse_strategy(v); }},
      MM_REAL(lambda_vel),
      Field{"oks_scale", [](const ModelConfig& c) { return objective::scale_mode_name(c.oks_scale); },
            [](ModelConfig& c, const std::string& v) { c.oks_scale = objective::parse_scale_mode(v); }},
      MM_REAL(oks_fixed_scale),
      MM_SIZE(batch),
      MM_REAL(lr),
      MM_REAL(weight_decay),
      MM_REAL(beta1),
      MM_REAL(beta2),
      MM_REAL(adam_eps),
      MM_SIZE(steps),
      MM_SIZE(checkpoint_every),
      Field{"seed", [](const ModelConfig& c) { return std::to_string(c.seed); },
            [](ModelConfig& c, const std::string& v) {
              std::uint64_t out = 0;
              const auto* end = v.data() + v.size();
              auto [p, ec] = std::from_chars(v.data(), end, out);
              if (ec != std::errc() || p != end) fail("config: 'seed' expects a non-negative integer, got '" + v + "'");
              c.seed = out;
            }},
      Field{"precision", [](const ModelConfig& c) { return c.precision; },
            [](ModelConfig& c, const std::string& v) { c.precision = v; }},
      MM_SIZE(workers),
  };
  return table;
}

#undef MM_SIZE
#undef MM_REAL

}  // namespace

void ModelConfig::set(const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (key == f.key) {
      f.set(*this, value);
      return;
    }
  }
  fail("config: unknown key '" + key + "'");
}

ModelConfig ModelConfig::parse(const std::string& text) {
  ModelConfig cfg;
  std::istringstream is(text);
  std::string line;
  std::set<std::string> seen;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) fail("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    cfg.set(key, value);
  }
  cfg.validate();
  return cfg;
}

ModelConfig ModelConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string ModelConfig::serialize() const {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.key) + " = " + f.get(*this) + "\n";
  return out;
}

void ModelConfig::validate() const {
  require(frames >= 1 && frames % 2 == 1, "config: frames (T) must be odd");
  require(window_stride >= 1, "config: window_stride must be >= 1");
  require(antennas >= 1 && chirps >= 1 && samples >= 1, "config: radar dims must be positive");
  require(chirp_target >= 1 && chirps % chirp_target == 0, "config: chirps must be divisible by chirp_target");
  require(angle_pad >= (input == InputRepr::kFft4d ? std::size_t{8} : antennas),
          "config: angle_pad must cover the antenna count");
  require(input != InputRepr::kFft4d || antennas == 12, "config: fft4d input needs the 12-antenna layout");
  require(elevation_pad >= 2, "config: elevation_pad must be >= 2");
  require(!views.empty() && views.size() <= 2, "config: views must list one or two radars");
  require(views.size() == 1 || views[0] != views[1], "config: views must be distinct");
  require(scene_frames >= frames, "config: scene_frames must be >= frames");
  require(noise >= 0.0, "config: noise must be >= 0");
  require(lambda_vel >= 0.0, "config: lambda_vel must be >= 0");
  require(batch >= 1, "config: batch must be >= 1");
  require(lr > 0.0, "config: lr must be positive");
  require(weight_decay >= 0.0, "config: weight_decay must be >= 0");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "config: Adam betas must lie in [0, 1)");
  require(adam_eps > 0.0, "config: adam_eps must be positive");
  require(precision == "double", "config: only precision = double is supported");
  require(workers >= 1, "config: workers must be >= 1");
  require(joints == kDefaultJoints, "config: the synthetic skeleton has 14 joints");
  encoder_config().validate();
  decoder_config().validate();
  oks_params().validate(joints);
}

encoder::EncoderConfig ModelConfig::encoder_config() const {
  encoder::EncoderConfig e;
  e.channels = channels;
  e.frames = frames;
  e.height = input_height();
  e.doppler = input_doppler();
  e.width = input_width();
  e.layers = encoder_layers;
  e.d_state = d_state;
  e.views = views.size();
  e.expand = expand;
  e.conv_kernel = conv_kernel;
  e.scan = scan;
  e.type = encoder_type;
  return e;
}

decoder::DecoderConfig ModelConfig::decoder_config() const {
  decoder::DecoderConfig d;
  d.layers = decoder_layers;
  d.heads = heads;
  d.d_model = d_model;
  d.joints = joints;
  d.frames = frames;
  d.memory_dim = channels;
  d.strategy = strategy;
  return d;
}

objective::OksParams ModelConfig::oks_params() const {
  objective::OksParams p = objective::OksParams::defaults(joints);
  p.scale_mode = oks_scale;
  p.fixed_scale = oks_fixed_scale;
  return p;
}

dsp::PreprocessOptions ModelConfig::preprocess_options() const {
  dsp::PreprocessOptions o;
  o.chirp_target = chirp_target;
  o.angle_pad = angle_pad;
  o.window = window;
  o.elevation_pad = elevation_pad;
  return o;
}

radar::DatasetOptions ModelConfig::dataset_options() const {
  radar::DatasetOptions o;
  o.dims = radar::CubeDims{antennas, chirps, samples};
  // Keep the reference depth in the middle of the range axis.
  o.mapping.reference_range_bin = static_cast<double>(samples) / 2.0;
  return o;
}

radar::SceneSpec ModelConfig::scene_spec() const {
  radar::SceneSpec s;
  s.frame_count = scene_frames;
  s.joint_count = joints;
  s.noise_stddev = noise;
  return s;
}

}  // namespace millimamba
