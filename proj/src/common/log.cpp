#include "common/log.hpp"

#include <mutex>

namespace hawkeye {
namespace {

std::mutex sink_mutex;
LogSink& sink() {
  static LogSink s;
  return s;
}

}  // namespace

void set_log_sink(LogSink s) {
  std::lock_guard lock(sink_mutex);
  sink() = std::move(s);
}

void log_line(std::string_view line) {
  std::lock_guard lock(sink_mutex);
  if (sink()) sink()(line);
}

}  // namespace hawkeye
