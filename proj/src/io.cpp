#include "aioli/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <system_error>

#include "aioli/error.hpp"

namespace aioli::io {

std::string format_float(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse_float(const std::string& text) {
  const char* first = text.data();
  const char* last = first + text.size();
  if (first != last && *first == '+') ++first;
  double v = 0.0;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) {
    throw InvalidInput("not a number: '" + text + "'");
  }
  return v;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot open '" + tmp + "' for writing");
    out << content;
    out.flush();
    if (!out) throw InvalidInput("failed writing '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw InvalidInput("cannot rename '" + tmp + "' to '" + path + "'");
  }
}

}  // namespace aioli::io
