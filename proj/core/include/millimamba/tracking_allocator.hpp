#pragma once

#include <atomic>
#include <cstddef>
#include <new>

namespace millimamba::dsp {

// Byte counters for every buffer allocated through TrackingAllocator.
// The benchmark resets the peak to the current level, runs one stage and reads
// the difference.
class MemoryCounters {
 public:
  static MemoryCounters& instance() {
    static MemoryCounters counters;
    return counters;
  }

  void on_alloc(std::size_t bytes) {
    const auto now = current_.fetch_add(bytes, std::memory_order_relaxed) + bytes;
    auto peak = peak_.load(std::memory_order_relaxed);
    while (now > peak && !peak_.compare_exchange_weak(peak, now, std::memory_order_relaxed)) {
    }
  }
  void on_free(std::size_t bytes) { current_.fetch_sub(bytes, std::memory_order_relaxed); }

  std::size_t current() const { return current_.load(std::memory_order_relaxed); }
  std::size_t peak() const { return peak_.load(std::memory_order_relaxed); }
  void reset_peak() { peak_.store(current(), std::memory_order_relaxed); }

 private:
  std::atomic<std::size_t> current_{0};
  std::atomic<std::size_t> peak_{0};
};

template <typename T>
struct TrackingAllocator {
  using value_type = T;

  TrackingAllocator() noexcept = default;
  template <typename U>
  TrackingAllocator(const TrackingAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    auto* p = static_cast<T*>(::operator new(n * sizeof(T)));
    MemoryCounters::instance().on_alloc(n * sizeof(T));
    return p;
  }
  void deallocate(T* p, std::size_t n) noexcept {
    MemoryCounters::instance().on_free(n * sizeof(T));
    ::operator delete(p);
  }

  template <typename U>
  bool operator==(const TrackingAllocator<U>&) const noexcept { return true; }
};

}  // namespace millimamba::dsp
