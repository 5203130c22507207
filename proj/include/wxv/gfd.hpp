#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "wxv/grid.hpp"

namespace wxv {

/// GFD v1 gridded field files: `key=value` header lines, a blank line, then
/// H*W little-endian float32 values in lat-major order. Header keys are
/// written in the order version, variable, init_time, lead_hours, H, W, lat0,
/// dlat, lon0, dlon, dtype.
void write_gfd(std::ostream& out, const GridField& field);
void write_gfd(const std::filesystem::path& path, const GridField& field);

/// Throws FormatError on unknown version, missing or malformed keys, an
/// unsupported dtype, or a short payload.
GridField read_gfd(std::istream& in);
GridField read_gfd(const std::filesystem::path& path);

}  // namespace wxv
