#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <string>

namespace lingad {

using WarningHandler = std::function<void(const std::string&)>;

namespace detail {
inline WarningHandler& warning_handler() {
  static WarningHandler handler = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
  return handler;
}
inline std::mutex& warning_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

/// Replaces the warning sink (stderr by default). Returns the previous one.
inline WarningHandler set_warning_handler(WarningHandler handler) {
  std::lock_guard lock(detail::warning_mutex());
  auto old = std::move(detail::warning_handler());
  detail::warning_handler() = std::move(handler);
  return old;
}

inline void warn(const std::string& message) {
  std::lock_guard lock(detail::warning_mutex());
  if (detail::warning_handler()) detail::warning_handler()(message);
}

}  // namespace lingad
