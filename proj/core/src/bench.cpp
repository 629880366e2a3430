#include <algorithm>
#include <chrono>
#include <random>
#include <sstream>

#include "millimamba/dsp.hpp"
#include "millimamba/error.hpp"

namespace millimamba::dsp {
namespace {

volatile double g_sink = 0.0;

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

template <typename Fn>
std::size_t peak_bytes_of(Fn&& fn) {
  auto& counters = MemoryCounters::instance();
  const std::size_t base = counters.current();
  counters.reset_peak();
  fn();
  return counters.peak() - base;
}

}  // namespace

BenchReport bench_heatmaps(std::size_t frames, std::size_t runs, const PreprocessOptions& options,
                           radar::CubeDims dims) {
  require(runs >= 5, "bench_heatmaps: runs must be >= 5");
  require(frames >= 1, "bench_heatmaps: frames must be >= 1");

  std::mt19937_64 rng(0);
  std::uniform_real_distribution<double> range(0.0, static_cast<double>(dims.samples));
  std::uniform_real_distribution<double> doppler(1.0, static_cast<double>(dims.chirps));
  std::uniform_real_distribution<double> angle(-0.45, 0.45);
  std::vector<RadarCube> cubes;
  cubes.reserve(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    std::vector<radar::Scatterer> sc(14);
    for (auto& s : sc) {
      s.range_bin = range(rng);
      s.doppler_bin = doppler(rng);
      s.angle_freq = angle(rng);
    }
    cubes.push_back(subsample_chirps(remove_clutter(radar::synthesize_cube(sc, dims, f)),
                                     options.chirp_target));
  }

  BenchReport report;
  report.frames = frames;
  report.runs = runs;
  report.peak_bytes_3d = peak_bytes_of([&] { (void)heatmap_3d(cubes.front(), options); });
  report.peak_bytes_4d = peak_bytes_of([&] { (void)heatmap_4d(cubes.front(), options); });

  using Clock = std::chrono::steady_clock;
  std::vector<double> t3, t4;
  double sink = 0.0;
  for (std::size_t r = 0; r < runs; ++r) {
    auto start = Clock::now();
    for (const auto& c : cubes) sink += std::abs(heatmap_3d(c, options).values[1]);
    t3.push_back(std::chrono::duration<double>(Clock::now() - start).count() / static_cast<double>(frames));
    start = Clock::now();
    for (const auto& c : cubes) sink += std::abs(heatmap_4d(c, options).values[1]);
    t4.push_back(std::chrono::duration<double>(Clock::now() - start).count() / static_cast<double>(frames));
  }
  g_sink = sink;
  report.latency_3d = median(t3);
  report.latency_4d = median(t4);
  return report;
}

std::string BenchReport::to_json() const {
  std::ostringstream os;
  os.precision(9);
  os << "{\n"
     << "  \"frames\": " << frames << ",\n"
     << "  \"runs\": " << runs << ",\n"
     << "  \"peak_bytes_3d\": " << peak_bytes_3d << ",\n"
     << "  \"peak_bytes_4d\": " << peak_bytes_4d << ",\n"
     << "  \"latency_3d_s\": " << latency_3d << ",\n"
     << "  \"latency_4d_s\": " << latency_4d << ",\n"
     << "  \"memory_ratio\": " << memory_ratio() << ",\n"
     << "  \"latency_ratio\": " << latency_ratio() << ",\n"
     << "  \"reference_memory_ratio\": " << kReferenceMemoryRatio << ",\n"
     << "  \"reference_latency_ratio\": " << kReferenceLatencyRatio << ",\n"
     << "  \"note\": \"absolute ratios depend on hardware and on the 4D antenna-grouping convention\"\n"
     << "}\n";
  return os.str();
}

}  // namespace millimamba::dsp
