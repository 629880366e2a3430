#include "millimamba/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "millimamba/error.hpp"

namespace millimamba::tensor {

std::string GradCheckReport::summary() const {
  std::ostringstream os;
  os << (passed ? "pass" : "FAIL") << ": " << entries.size() << " coordinates, max relative error "
     << max_rel_error;
  return os.str();
}

GradCheckReport grad_check(const std::function<Tensor()>& fn, std::span<const Tensor> params,
                           const GradCheckOptions& options) {
  require(options.h > 0.0, "grad_check: step h must be positive");
  require(!params.empty(), "grad_check: no parameters");

  std::vector<Tensor> ps(params.begin(), params.end());
  for (auto& p : ps) {
    p.zero_grad();
    p.set_requires_grad(true);
  }
  {
    Tape tape;
    TapeScope scope(tape);
    Tensor loss = fn();
    tape.backward(loss);
  }

  // (param, index) pairs to probe.
  std::vector<std::pair<std::size_t, std::size_t>> coords;
  std::size_t total = 0;
  for (const auto& p : ps) total += p.size();
  std::mt19937_64 rng(options.seed);
  if (total <= options.samples) {
    for (std::size_t i = 0; i < ps.size(); ++i) {
      for (std::size_t k = 0; k < ps[i].size(); ++k) coords.emplace_back(i, k);
    }
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, total - 1);
    for (std::size_t s = 0; s < options.samples; ++s) {
      std::size_t flat = pick(rng);
      std::size_t i = 0;
      while (flat >= ps[i].size()) flat -= ps[i++].size();
      coords.emplace_back(i, flat);
    }
  }

  GradCheckReport report;
  NoGradGuard no_grad;
  for (auto [i, k] : coords) {
    auto data = ps[i].mutable_data();
    const double theta = data[k];
    const double step = options.h * std::max(1.0, std::abs(theta));
    data[k] = theta + step;
    const double up = fn().item();
    data[k] = theta - step;
    const double down = fn().item();
    data[k] = theta;
    GradCheckEntry e;
    e.param = i;
    e.index = k;
    e.numeric = (up - down) / (2.0 * step);
    const auto g = ps[i].grad();
    e.analytic = g.empty() ? 0.0 : g[k];
    const double denom = std::max({std::abs(e.analytic), std::abs(e.numeric), options.abs_floor});
    e.rel_error = std::abs(e.analytic - e.numeric) / denom;
    report.max_rel_error = std::max(report.max_rel_error, e.rel_error);
    report.entries.push_back(e);
  }
  report.passed = report.max_rel_error < options.tolerance;
  return report;
}

}  // namespace millimamba::tensor
