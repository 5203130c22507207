#include "wxv/gfd.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "wxv/error.hpp"

namespace wxv {
namespace {

std::string shortest(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v)) {
    fail(ErrorCode::FormatError, "bad numeric value for '" + key + "': '" + text + "'");
  }
  return v;
}

long long parse_integer(const std::string& key, const std::string& text) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    fail(ErrorCode::FormatError, "bad integer value for '" + key + "': '" + text + "'");
  }
  return v;
}

std::uint32_t to_little_endian(std::uint32_t x) {
  if constexpr (std::endian::native == std::endian::big) {
    x = ((x & 0xFFu) << 24) | ((x & 0xFF00u) << 8) | ((x >> 8) & 0xFF00u) | (x >> 24);
  }
  return x;
}

}  // namespace

void write_gfd(std::ostream& out, const GridField& field) {
  const auto axes = field.spec().regular_axes();
  if (!axes) fail(ErrorCode::FormatError, "GFD requires evenly spaced axes");
  out << "version=1\n"
      << "variable=" << to_string(field.variable()) << '\n'
      << "init_time=" << format_utc(field.init_time()) << '\n'
      << "lead_hours=" << field.lead_hours() << '\n'
      << "H=" << field.spec().height() << '\n'
      << "W=" << field.spec().width() << '\n'
      << "lat0=" << shortest(axes->lat0) << '\n'
      << "dlat=" << shortest(axes->dlat) << '\n'
      << "lon0=" << shortest(axes->lon0) << '\n'
      << "dlon=" << shortest(axes->dlon) << '\n'
      << "dtype=f32\n\n";
  std::string payload(field.values().size() * 4, '\0');
  std::size_t pos = 0;
  for (double v : field.values()) {
    const auto bits = to_little_endian(std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    std::memcpy(payload.data() + pos, &bits, 4);
    pos += 4;
  }
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) fail(ErrorCode::IoError, "failed writing GFD payload");
}

void write_gfd(const std::filesystem::path& path, const GridField& field) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  write_gfd(out, field);
}

GridField read_gfd(std::istream& in) {
  std::map<std::string, std::string> header;
  std::string line;
  bool terminated = false;
  while (std::getline(in, line)) {
    if (line.empty()) {
      terminated = true;
      break;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) {
      fail(ErrorCode::FormatError, "malformed header line '" + line + "'");
    }
    header[line.substr(0, eq)] = line.substr(eq + 1);
  }
  if (!terminated) fail(ErrorCode::FormatError, "header not terminated by a blank line");

  auto get = [&](const std::string& key) -> const std::string& {
    auto it = header.find(key);
    if (it == header.end()) fail(ErrorCode::FormatError, "missing header key '" + key + "'");
    return it->second;
  };
  if (get("version") != "1") {
    fail(ErrorCode::FormatError, "unsupported GFD version '" + header["version"] + "'");
  }
  if (get("dtype") != "f32") fail(ErrorCode::FormatError, "unsupported dtype '" + header["dtype"] + "'");
  const auto variable = parse_variable(get("variable"));
  if (!variable) fail(ErrorCode::FormatError, "unknown variable '" + header["variable"] + "'");
  const TimePoint init = parse_utc(get("init_time"));
  const long long lead = parse_integer("lead_hours", get("lead_hours"));
  const long long h = parse_integer("H", get("H"));
  const long long w = parse_integer("W", get("W"));
  if (h < 1 || w < 1 || lead < 0 || lead > 100000) {
    fail(ErrorCode::FormatError, "invalid H, W or lead_hours");
  }
  const double lat0 = parse_double("lat0", get("lat0"));
  const double dlat = parse_double("dlat", get("dlat"));
  const double lon0 = parse_double("lon0", get("lon0"));
  const double dlon = parse_double("dlon", get("dlon"));

  GridSpec spec = [&] {
    try {
      return GridSpec::regular(lat0, dlat, static_cast<std::size_t>(h), lon0, dlon,
                               static_cast<std::size_t>(w));
    } catch (const Error& e) {
      fail(ErrorCode::FormatError, std::string("invalid grid: ") + e.what());
    }
  }();

  const std::size_t n = spec.size();
  std::string payload(n * 4, '\0');
  in.read(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (static_cast<std::size_t>(in.gcount()) != payload.size()) {
    fail(ErrorCode::FormatError, "payload shorter than H*W float32 values");
  }
  std::vector<double> values(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::uint32_t bits;
    std::memcpy(&bits, payload.data() + 4 * k, 4);
    values[k] = static_cast<double>(std::bit_cast<float>(to_little_endian(bits)));
  }
  try {
    return GridField(std::move(spec), *variable, init, static_cast<int>(lead), std::move(values));
  } catch (const Error& e) {
    fail(ErrorCode::FormatError, e.what());
  }
}

GridField read_gfd(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  return read_gfd(in);
}

}  // namespace wxv
