#include <cctype>
#include <charconv>
#include <cstdio>
#include <map>
#include <sstream>

#include "dsmfuse/raster.hpp"
#include "dsmfuse/rpc.hpp"

namespace dsmfuse {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

struct CoeffKey {
  const char* prefix;
  RpcCoeffs RpcModel::*member;
};

constexpr CoeffKey kCoeffKeys[] = {
    {"SAMP_NUM_COEFF_", &RpcModel::num_s},
    {"SAMP_DEN_COEFF_", &RpcModel::den_s},
    {"LINE_NUM_COEFF_", &RpcModel::num_l},
    {"LINE_DEN_COEFF_", &RpcModel::den_l},
};

struct NormKey {
  const char* name;
  Normalization RpcModel::*member;
};

constexpr NormKey kNormKeys[] = {
    {"SAMP", &RpcModel::s}, {"LINE", &RpcModel::l}, {"U", &RpcModel::u},
    {"V", &RpcModel::v},    {"Z", &RpcModel::z},
};

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

RpcModel parse_rpc(const std::string& text) {
  std::map<std::string, double> entries;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto colon = t.find(':');
    if (colon == std::string::npos) {
      throw RpcFileError("rpc file: line " + std::to_string(line_no) + " lacks 'KEY: value'");
    }
    const std::string key = trim(std::string_view(t).substr(0, colon));
    std::string value = trim(std::string_view(t).substr(colon + 1));
    if (!value.empty() && value.front() == '+') value.erase(0, 1);
    double v;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
      throw RpcFileError("rpc file: bad number for key '" + key + "'");
    }
    if (!entries.emplace(key, v).second) {
      throw RpcFileError("rpc file: duplicate key '" + key + "'");
    }
  }

  auto take = [&](const std::string& key) {
    const auto it = entries.find(key);
    if (it == entries.end()) throw RpcFileError("rpc file: missing key '" + key + "'");
    const double v = it->second;
    entries.erase(it);
    return v;
  };

  RpcModel m;
  for (const auto& nk : kNormKeys) {
    (m.*nk.member).offset = take(std::string(nk.name) + "_OFF");
    (m.*nk.member).scale = take(std::string(nk.name) + "_SCALE");
  }
  for (const auto& ck : kCoeffKeys) {
    for (int i = 0; i < kRpcTerms; ++i) {
      (m.*ck.member)[i] = take(ck.prefix + std::to_string(i + 1));
    }
  }
  if (!entries.empty()) {
    throw RpcFileError("rpc file: unknown key '" + entries.begin()->first + "'");
  }
  try {
    m.validate();
  } catch (const DegenerateModelError& e) {
    throw RpcFileError(std::string("rpc file: ") + e.what());
  }
  return m;
}

std::string format_rpc(const RpcModel& m) {
  std::string out;
  for (const auto& nk : kNormKeys) {
    out += std::string(nk.name) + "_OFF: " + format_number((m.*nk.member).offset) + "\n";
    out += std::string(nk.name) + "_SCALE: " + format_number((m.*nk.member).scale) + "\n";
  }
  for (const auto& ck : kCoeffKeys) {
    for (int i = 0; i < kRpcTerms; ++i) {
      out += ck.prefix + std::to_string(i + 1) + ": " + format_number((m.*ck.member)[i]) + "\n";
    }
  }
  return out;
}

RpcModel read_rpc(const std::string& path) { return parse_rpc(read_file(path)); }

void write_rpc(const std::string& path, const RpcModel& model) {
  write_file_atomic(path, format_rpc(model));
}

}  // namespace dsmfuse
