#include "chessrl/parallel/exec.hpp"

#include <omp.h>

#include "chessrl/errors.hpp"

namespace chessrl::parallel {

namespace {
int g_default_threads = 0;
}

void set_thread_limit(int n) {
  if (g_default_threads == 0) g_default_threads = omp_get_max_threads();
  omp_set_num_threads(n > 0 ? n : g_default_threads);
}

int thread_limit() { return omp_get_max_threads(); }

std::string to_string(Exec exec) { return exec == Exec::Serial ? "serial" : "parallel"; }

Exec parse_exec(const std::string& text) {
  if (text == "serial") return Exec::Serial;
  if (text == "parallel") return Exec::Parallel;
  throw ConfigError("exec must be 'serial' or 'parallel', got '" + text + "'");
}

}  // namespace chessrl::parallel
