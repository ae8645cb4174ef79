#include "si/feat_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "FEAT I/O assumes a little-endian host");

namespace si {

void FeatureSequence::validate(const char* what) const {
  if (frames <= 0 || layers <= 0 || dim <= 0)
    fail(ErrorCategory::Format,
         std::string(what) + ": frames/layers/dim must all be positive");
  if (data.size() != expected_size())
    fail(ErrorCategory::Shape,
         std::string(what) + ": payload size " + std::to_string(data.size()) +
             " does not match frames*layers*dim = " + std::to_string(expected_size()));
  for (float v : data)
    if (!std::isfinite(v))
      fail(ErrorCategory::Numeric, std::string(what) + ": non-finite feature value");
}

void write_feat(const std::string& path, const FeatureSequence& f) {
  f.validate("write_feat");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCategory::Io, "cannot write " + path);

  out.write("FEAT", 4);
  const uint32_t version = kFeatVersion;
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&f.frame_rate_hz), 4);
  const uint32_t frames = f.frames, layers = f.layers, dim = f.dim;
  out.write(reinterpret_cast<const char*>(&frames), 4);
  out.write(reinterpret_cast<const char*>(&layers), 4);
  out.write(reinterpret_cast<const char*>(&dim), 4);
  out.write(reinterpret_cast<const char*>(f.data.data()),
            static_cast<std::streamsize>(f.data.size() * sizeof(float)));
  if (!out) fail(ErrorCategory::Io, "write failed for " + path);
}

FeatureSequence read_feat(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCategory::Io, "cannot open " + path);

  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "FEAT", 4) != 0)
    fail(ErrorCategory::Format, path + ": bad magic at byte 0");

  uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), 4);
  if (!in || version != kFeatVersion)
    fail(ErrorCategory::Format,
         path + ": unsupported version " + std::to_string(version) + " at byte 4");

  FeatureSequence f;
  uint32_t frames = 0, layers = 0, dim = 0;
  in.read(reinterpret_cast<char*>(&f.frame_rate_hz), 4);
  in.read(reinterpret_cast<char*>(&frames), 4);
  in.read(reinterpret_cast<char*>(&layers), 4);
  in.read(reinterpret_cast<char*>(&dim), 4);
  if (!in) fail(ErrorCategory::Format, path + ": truncated header at byte 8");
  if (frames == 0 || layers == 0 || dim == 0)
    fail(ErrorCategory::Format, path + ": zero frames/layers/dim in header at byte 12");

  f.frames = static_cast<int>(frames);
  f.layers = static_cast<int>(layers);
  f.dim = static_cast<int>(dim);
  const std::size_t count = f.expected_size();
  f.data.resize(count);
  in.read(reinterpret_cast<char*>(f.data.data()),
          static_cast<std::streamsize>(count * sizeof(float)));
  const std::size_t got = static_cast<std::size_t>(in.gcount());
  if (got != count * sizeof(float))
    fail(ErrorCategory::Format,
         path + ": truncated payload, expected " + std::to_string(count * sizeof(float)) +
             " bytes from offset 24, got " + std::to_string(got));
  return f;
}

}  // namespace si
