#include "si/wav_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "WAV reader assumes a little-endian host");

namespace si {

namespace {

template <typename T>
T read_le(std::ifstream& in, const std::string& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T)))
    fail(ErrorCategory::Format, path + ": truncated WAV (at byte " +
                                    std::to_string(static_cast<long>(in.tellg())) + ")");
  return v;
}

template <typename T>
void write_le(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

}  // namespace

Waveform WavData::mono() const {
  if (channels.size() != 1)
    fail(ErrorCategory::InvalidInput,
         "expected mono WAV, got " + std::to_string(channels.size()) + " channels");
  return Waveform(channels[0], sample_rate_hz);
}

Waveform WavData::channel(std::size_t idx) const {
  if (idx >= channels.size())
    fail(ErrorCategory::InvalidInput, "channel index out of range");
  return Waveform(channels[idx], sample_rate_hz);
}

WavData read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCategory::Io, "cannot open " + path);

  char tag[4];
  if (!in.read(tag, 4) || std::memcmp(tag, "RIFF", 4) != 0)
    fail(ErrorCategory::Format, path + ": missing RIFF header");
  read_le<uint32_t>(in, path);  // overall size, unused
  if (!in.read(tag, 4) || std::memcmp(tag, "WAVE", 4) != 0)
    fail(ErrorCategory::Format, path + ": not a WAVE file");

  uint16_t format = 0, n_channels = 0, bits = 0;
  uint32_t rate = 0;
  bool have_fmt = false;
  WavData wav;

  while (in.read(tag, 4)) {
    const uint32_t chunk_size = read_le<uint32_t>(in, path);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      format = read_le<uint16_t>(in, path);
      n_channels = read_le<uint16_t>(in, path);
      rate = read_le<uint32_t>(in, path);
      read_le<uint32_t>(in, path);  // byte rate
      read_le<uint16_t>(in, path);  // block align
      bits = read_le<uint16_t>(in, path);
      if (chunk_size > 16) in.seekg(chunk_size - 16, std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      if (!have_fmt) fail(ErrorCategory::Format, path + ": data chunk before fmt");
      if (n_channels == 0) fail(ErrorCategory::Format, path + ": zero channels");
      const bool pcm16 = format == 1 && bits == 16;
      const bool float32 = format == 3 && bits == 32;
      if (!pcm16 && !float32)
        fail(ErrorCategory::Format,
             path + ": unsupported format (need 16-bit PCM or 32-bit float), got format=" +
                 std::to_string(format) + " bits=" + std::to_string(bits));
      const uint32_t bytes_per_sample = bits / 8;
      const uint32_t frames = chunk_size / (bytes_per_sample * n_channels);
      wav.sample_rate_hz = rate;
      wav.channels.assign(n_channels, std::vector<double>(frames));
      for (uint32_t f = 0; f < frames; ++f) {
        for (uint16_t c = 0; c < n_channels; ++c) {
          if (pcm16) {
            const int16_t s = read_le<int16_t>(in, path);
            wav.channels[c][f] = static_cast<double>(s) / 32768.0;
          } else {
            wav.channels[c][f] = read_le<float>(in, path);
          }
        }
      }
      return wav;
    } else {
      // Skip unknown chunk (word-aligned).
      in.seekg(chunk_size + (chunk_size & 1), std::ios::cur);
    }
  }
  fail(ErrorCategory::Format, path + ": no data chunk found");
}

void write_wav(const std::string& path, const Waveform& w) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCategory::Io, "cannot write " + path);

  const uint32_t n = static_cast<uint32_t>(w.samples.size());
  const uint32_t data_bytes = n * 4;
  out.write("RIFF", 4);
  write_le<uint32_t>(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  write_le<uint32_t>(out, 16);
  write_le<uint16_t>(out, 3);  // IEEE float
  write_le<uint16_t>(out, 1);
  write_le<uint32_t>(out, static_cast<uint32_t>(w.sample_rate_hz));
  write_le<uint32_t>(out, static_cast<uint32_t>(w.sample_rate_hz) * 4);
  write_le<uint16_t>(out, 4);
  write_le<uint16_t>(out, 32);
  out.write("data", 4);
  write_le<uint32_t>(out, data_bytes);
  for (double v : w.samples) write_le<float>(out, static_cast<float>(v));
  if (!out) fail(ErrorCategory::Io, "write failed for " + path);
}

}  // namespace si
