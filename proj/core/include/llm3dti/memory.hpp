#pragma once

#include <atomic>
#include <cstddef>
#include <memory>

namespace llm3dti {

// Byte accounting for numeric buffers. Every Matrix allocates through
// TrackedAllocator, so these counters give a portable peak-memory figure
// that does not depend on the OS allocator or RSS sampling.
namespace memory {

std::size_t current_bytes() noexcept;
std::size_t peak_bytes() noexcept;
// Resets the high-water mark to the current usage.
void reset_peak() noexcept;

void note_alloc(std::size_t bytes) noexcept;
void note_free(std::size_t bytes) noexcept;

}  // namespace memory

template <typename T>
struct TrackedAllocator {
  using value_type = T;

  TrackedAllocator() noexcept = default;
  template <typename U>
  TrackedAllocator(const TrackedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    T* p = std::allocator<T>{}.allocate(n);
    memory::note_alloc(n * sizeof(T));
    return p;
  }
  void deallocate(T* p, std::size_t n) noexcept {
    memory::note_free(n * sizeof(T));
    std::allocator<T>{}.deallocate(p, n);
  }

  template <typename U>
  bool operator==(const TrackedAllocator<U>&) const noexcept {
    return true;
  }
};

}  // namespace llm3dti
