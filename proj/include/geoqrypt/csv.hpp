#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace geoqrypt::csv {

// 9 significant digits, '.' decimal point, plain "nan" for missing values.
// Output must be byte-identical across platforms, so no locale-dependent
// formatting anywhere.
inline std::string num(double v) {
    if (std::isnan(v)) return "nan";
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

inline std::string num(int v) { return std::to_string(v); }
inline std::string num(long v) { return std::to_string(v); }
inline std::string num(unsigned long v) { return std::to_string(v); }
inline std::string num(unsigned long long v) { return std::to_string(v); }

// Accumulates rows with '\n' endings regardless of platform.
class Writer {
  public:
    template <typename... Cols>
    void row(const Cols&... cols) {
        bool first = true;
        ((append_cell(cols, first), first = false), ...);
        text_ += '\n';
    }

    const std::string& str() const { return text_; }

  private:
    void append_cell(const std::string& s, bool first) {
        if (!first) text_ += ',';
        text_ += s;
    }
    void append_cell(const char* s, bool first) {
        if (!first) text_ += ',';
        text_ += s;
    }
    template <typename T>
    void append_cell(const T& v, bool first) {
        if (!first) text_ += ',';
        text_ += num(v);
    }

    std::string text_;
};

} // namespace geoqrypt::csv
