#include "qtnn/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "qtnn/errors.hpp"

namespace qtnn {

namespace {

void emit(const nlohmann::json& j, std::string& out, int depth) {
  const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(depth + 1) * 2, ' ');
  switch (j.type()) {
    case nlohmann::json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      // nlohmann::json objects are std::map-backed, so iteration is key-sorted.
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += inner;
        out += nlohmann::json(it.key()).dump();
        out += ": ";
        emit(it.value(), out, depth + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case nlohmann::json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += ",\n";
        first = false;
        out += inner;
        emit(v, out, depth + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    case nlohmann::json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) {
        out += "null";
        return;
      }
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      std::string s(buf);
      // Keep floats recognisable as floats on read-back.
      if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
      out += s;
      return;
    }
    default:
      out += j.dump();
      return;
  }
}

}  // namespace

std::string canonical_json(const nlohmann::json& j) {
  std::string out;
  emit(j, out, 0);
  out += "\n";
  return out;
}

void write_report(const nlohmann::json& report, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write report to '" + path + "'");
  f << canonical_json(report);
  if (!f) throw IoError("write failed for '" + path + "'");
}

nlohmann::json read_report(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read report '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("report '" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace qtnn
