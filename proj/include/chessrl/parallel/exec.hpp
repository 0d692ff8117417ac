#pragma once

#include <cstddef>
#include <exception>
#include <string>
#include <vector>

namespace chessrl::parallel {

/// Every data-parallel kernel in the library takes an Exec argument. The
/// serial path is the reference implementation; the OpenMP path must produce
/// identical results (reductions are ordered by index, never by thread).
enum class Exec { Serial, Parallel };

/// Caps the OpenMP team size for all kernels. n <= 0 restores the default.
void set_thread_limit(int n);
int thread_limit();

/// "serial" or "parallel". parse_exec throws ConfigError.
std::string to_string(Exec exec);
Exec parse_exec(const std::string& text);

/// Runs f(i) for i in [0, n). Exceptions are captured per index and the one
/// with the lowest index is rethrown after the loop, so error reporting does
/// not depend on scheduling.
template <typename F>
void for_each_index(Exec exec, std::size_t n, F&& f) {
  if (exec == Exec::Serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  const long long count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < count; ++i) {
    try {
      f(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Ordered map: out[i] = f(i).
template <typename T, typename F>
std::vector<T> map_index(Exec exec, std::size_t n, F&& f) {
  std::vector<T> out(n);
  for_each_index(exec, n, [&](std::size_t i) { out[i] = f(i); });
  return out;
}

}  // namespace chessrl::parallel
