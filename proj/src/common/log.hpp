#pragma once

#include <functional>
#include <string_view>

#include <fmt/format.h>

namespace hawkeye {

using LogSink = std::function<void(std::string_view)>;

// Progress messages from long-running training and evaluation loops. The
// default sink discards everything; the CLI installs one that writes stderr.
void set_log_sink(LogSink sink);
void log_line(std::string_view line);

template <typename... Args>
void logf(fmt::format_string<Args...> format, Args&&... args) {
  log_line(fmt::format(format, std::forward<Args>(args)...));
}

}  // namespace hawkeye
