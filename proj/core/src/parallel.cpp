#include "vpsfem/parallel.hpp"

#include <cstdlib>
#include <string>

namespace vpsfem {

int thread_count_from_env() {
  const char* raw = std::getenv("VPSFEM_THREADS");
  if (raw == nullptr) return 0;
  try {
    const int n = std::stoi(raw);
    return n > 0 ? n : 0;
  } catch (const std::exception&) {
    return 0;
  }
}

}  // namespace vpsfem
