#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace harvex::log {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

// Threshold comes from the LOG_LEVEL environment variable
// (error|warn|info|debug); defaults to warn.
inline Level threshold() {
  static const Level value = [] {
    const char* env = std::getenv("LOG_LEVEL");
    if (env == nullptr) return Level::Warn;
    if (std::strcmp(env, "error") == 0) return Level::Error;
    if (std::strcmp(env, "warn") == 0) return Level::Warn;
    if (std::strcmp(env, "info") == 0) return Level::Info;
    if (std::strcmp(env, "debug") == 0) return Level::Debug;
    return Level::Warn;
  }();
  return value;
}

inline void emit(Level level, const std::string& message) {
  if (level > threshold()) return;
  const char* tag = "warn";
  switch (level) {
    case Level::Error: tag = "error"; break;
    case Level::Warn: tag = "warn"; break;
    case Level::Info: tag = "info"; break;
    case Level::Debug: tag = "debug"; break;
  }
  std::fprintf(stderr, "[%s] %s\n", tag, message.c_str());
}

inline void error(const std::string& m) { emit(Level::Error, m); }
inline void warn(const std::string& m) { emit(Level::Warn, m); }
inline void info(const std::string& m) { emit(Level::Info, m); }
inline void debug(const std::string& m) { emit(Level::Debug, m); }

}  // namespace harvex::log
