#include "uocad/text.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "uocad/error.hpp"

namespace uocad::text {

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view token) {
  token = trim(token);
  double value = 0.0;
  const char* begin = token.data();
  const char* end = token.data() + token.size();
  if (!token.empty() && *begin == '+') ++begin;
  const auto res = std::from_chars(begin, end, value);
  if (token.empty() || res.ec != std::errc{} || res.ptr != end) {
    throw SchemaError("not a number: '" + std::string(token) + "'");
  }
  return value;
}

std::int64_t parse_int(std::string_view token) {
  token = trim(token);
  std::int64_t value = 0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  if (token.empty() || res.ec != std::errc{} || res.ptr != token.data() + token.size()) {
    throw SchemaError("not an integer: '" + std::string(token) + "'");
  }
  return value;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(s.substr(start));
      return parts;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string format_iso8601(std::int64_t epoch_seconds) {
  using namespace std::chrono;
  const sys_seconds tp{seconds{epoch_seconds}};
  const auto day = floor<days>(tp);
  const year_month_day ymd{day};
  const hh_mm_ss hms{tp - day};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

std::int64_t parse_iso8601(std::string_view s) {
  s = trim(s);
  int y = 0;
  unsigned mo = 0, d = 0;
  int h = 0, mi = 0, sec = 0;
  char tail = 0;
  const std::string str(s);
  const int matched =
      std::sscanf(str.c_str(), "%d-%u-%uT%d:%d:%d%c", &y, &mo, &d, &h, &mi, &sec, &tail);
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{mo}, day{d}};
  if (matched != 7 || tail != 'Z' || str.back() != 'Z' || !ymd.ok() || h < 0 || h > 23 ||
      mi < 0 || mi > 59 || sec < 0 || sec > 60) {
    throw SchemaError("not an ISO-8601 UTC timestamp: '" + str + "'");
  }
  const auto tp = sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec};
  return tp.time_since_epoch().count();
}

KeyValues parse_key_values(std::string_view content) {
  KeyValues kv;
  std::size_t line_no = 0;
  for (auto line : split(content, '\n')) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw SchemaError("line " + std::to_string(line_no) + ": expected key=value");
    }
    std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw SchemaError("line " + std::to_string(line_no) + ": empty key");
    if (!kv.emplace(key, std::string(trim(line.substr(eq + 1)))).second) {
      throw SchemaError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
  }
  return kv;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace uocad::text
