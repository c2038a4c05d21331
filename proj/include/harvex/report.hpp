#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "harvex/errors.hpp"
#include "harvex/linalg.hpp"

namespace harvex {

namespace report {

// 17 significant digits: lossless double round-trip and stable bytes.
inline std::string format_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

inline std::string hex64(std::uint64_t value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(value));
  return buffer;
}

// Minimal JSON emitter with caller-controlled key order and the double
// formatting above, so identical runs serialize to identical bytes.
class JsonWriter {
 public:
  JsonWriter& begin_object() { return token("{", true); }
  JsonWriter& end_object() { return close("}"); }
  JsonWriter& begin_array() { return token("[", true); }
  JsonWriter& end_array() { return close("]"); }

  JsonWriter& key(const std::string& name) {
    separate();
    out_ += quote(name);
    out_ += ":";
    pending_value_ = true;
    return *this;
  }

  JsonWriter& value(double v) { return raw(format_double(v)); }
  JsonWriter& value(int v) { return raw(std::to_string(v)); }
  JsonWriter& value(long v) { return raw(std::to_string(v)); }
  JsonWriter& value(std::uint64_t v) { return raw(std::to_string(v)); }
  JsonWriter& value(bool v) { return raw(v ? "true" : "false"); }
  JsonWriter& value(const std::string& v) { return raw(quote(v)); }
  JsonWriter& value(const char* v) { return raw(quote(v)); }
  JsonWriter& null() { return raw("null"); }

  JsonWriter& value(const Vector& v) {
    begin_array();
    for (Eigen::Index i = 0; i < v.size(); ++i) value(v(i));
    return end_array();
  }

  JsonWriter& value(const Matrix& m) {
    begin_array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      begin_array();
      for (Eigen::Index c = 0; c < m.cols(); ++c) value(m(r, c));
      end_array();
    }
    return end_array();
  }

  std::string str() const { return out_; }

 private:
  JsonWriter& token(const char* t, bool opens) {
    separate();
    out_ += t;
    if (opens) fresh_scope_ = true;
    return *this;
  }

  JsonWriter& close(const char* t) {
    out_ += t;
    fresh_scope_ = false;
    return *this;
  }

  JsonWriter& raw(const std::string& text) {
    separate();
    out_ += text;
    return *this;
  }

  void separate() {
    if (pending_value_) {
      pending_value_ = false;
      return;
    }
    if (!fresh_scope_ && !out_.empty()) {
      const char last = out_.back();
      if (last != '{' && last != '[' && last != ':') out_ += ",";
    }
    fresh_scope_ = false;
  }

  static std::string quote(const std::string& s) {
    std::string quoted = "\"";
    for (char c : s) {
      switch (c) {
        case '"': quoted += "\\\""; break;
        case '\\': quoted += "\\\\"; break;
        case '\n': quoted += "\\n"; break;
        case '\t': quoted += "\\t"; break;
        case '\r': quoted += "\\r"; break;
        default:
          if (static_cast<unsigned char>(c) < 0x20) {
            char buffer[8];
            std::snprintf(buffer, sizeof(buffer), "\\u%04x", c);
            quoted += buffer;
          } else {
            quoted += c;
          }
      }
    }
    quoted += "\"";
    return quoted;
  }

  std::string out_;
  bool pending_value_ = false;
  bool fresh_scope_ = true;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream stream(path, std::ios::binary | std::ios::trunc);
  if (!stream) throw IoError("cannot open '" + path + "' for writing");
  stream << content;
  if (!stream) throw IoError("failed writing '" + path + "'");
}

inline void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw IoError("cannot create output directory '" + path + "': " + ec.message());
}

// Time series with header t,k_1..k_N,c_1..c_N.
inline std::string csv_timeseries(const std::vector<double>& times, const Matrix& states,
                                  const Matrix& rates) {
  const Eigen::Index n = states.cols();
  std::string csv = "t";
  for (Eigen::Index i = 0; i < n; ++i) csv += ",k_" + std::to_string(i + 1);
  for (Eigen::Index i = 0; i < n; ++i) csv += ",c_" + std::to_string(i + 1);
  csv += "\n";
  for (std::size_t row = 0; row < times.size(); ++row) {
    csv += format_double(times[row]);
    const auto r = static_cast<Eigen::Index>(row);
    for (Eigen::Index i = 0; i < n; ++i) csv += "," + format_double(states(r, i));
    for (Eigen::Index i = 0; i < n; ++i) csv += "," + format_double(rates(r, i));
    csv += "\n";
  }
  return csv;
}

}  // namespace report
}  // namespace harvex
