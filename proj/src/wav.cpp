#include "sonarmark/wav.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "sonarmark/error.hpp"

namespace sonarmark {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

static_assert(std::endian::native == std::endian::little, "WAV I/O assumes a little-endian host");

std::vector<char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error(errc::io_failure, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <typename T>
T load(const std::vector<char>& bytes, std::size_t offset) {
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  return value;
}

template <typename T>
void store(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

}  // namespace

Waveform read_wav(const std::filesystem::path& path) {
  const auto bytes = read_all(path);
  const std::string name = path.string();
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw error(errc::unsupported_format, name + " is not a RIFF/WAVE file");
  }

  bool have_fmt = false;
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
  std::size_t data_offset = 0;
  std::size_t data_size = 0;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string id(bytes.data() + pos, 4);
    const auto size = load<std::uint32_t>(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) throw error(errc::corrupt_file, name + ": chunk '" + id + "' truncated");
    if (id == "fmt ") {
      if (size < 16) throw error(errc::corrupt_file, name + ": fmt chunk too short");
      format = load<std::uint16_t>(bytes, body);
      channels = load<std::uint16_t>(bytes, body + 2);
      sample_rate = load<std::uint32_t>(bytes, body + 4);
      bits = load<std::uint16_t>(bytes, body + 14);
      if (format == kFormatExtensible) {
        if (size < 40) throw error(errc::corrupt_file, name + ": extensible fmt chunk too short");
        format = load<std::uint16_t>(bytes, body + 24);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (id == "data") {
      data_offset = body;
      data_size = size;
      have_data = true;
    }
    pos = body + size + (size & 1U);
  }
  if (!have_fmt || !have_data) throw error(errc::corrupt_file, name + ": missing fmt or data chunk");
  if (channels != 1) {
    throw error(errc::multichannel_rejected, fmt::format("{}: {} channels, expected mono", name, channels));
  }
  if (sample_rate == 0) throw error(errc::corrupt_file, name + ": zero sample rate");

  std::vector<double> samples;
  if (format == kFormatPcm && bits == 16) {
    samples.resize(data_size / 2);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      samples[i] = load<std::int16_t>(bytes, data_offset + 2 * i) / 32768.0;
    }
  } else if (format == kFormatPcm && bits == 32) {
    samples.resize(data_size / 4);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      samples[i] = load<std::int32_t>(bytes, data_offset + 4 * i) / 2147483648.0;
    }
  } else if (format == kFormatFloat && bits == 32) {
    samples.resize(data_size / 4);
    for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = load<float>(bytes, data_offset + 4 * i);
  } else {
    throw error(errc::unsupported_format, fmt::format("{}: format {} with {} bits", name, format, bits));
  }
  if (samples.empty()) throw error(errc::corrupt_file, name + ": no samples");
  try {
    return Waveform(std::move(samples), static_cast<double>(sample_rate));
  } catch (const error& e) {
    throw error(errc::corrupt_file, name + ": " + e.what());
  }
}

void write_wav(const std::filesystem::path& path, const Waveform& w, WavEncoding encoding) {
  const std::uint16_t bits = encoding == WavEncoding::pcm16 ? 16 : 32;
  const std::uint16_t format = encoding == WavEncoding::float32 ? kFormatFloat : kFormatPcm;
  const double rate = w.sample_rate();
  if (rate != std::floor(rate) || rate > 4294967295.0) {
    throw error(errc::unsupported_format, "WAV needs an integral sample rate");
  }
  const auto bytes_per_sample = static_cast<std::uint32_t>(bits / 8);
  const auto data_size = static_cast<std::uint32_t>(w.size() * bytes_per_sample);

  std::string out;
  out.reserve(44 + data_size);
  out += "RIFF";
  store<std::uint32_t>(out, 36 + data_size);
  out += "WAVEfmt ";
  store<std::uint32_t>(out, 16);
  store<std::uint16_t>(out, format);
  store<std::uint16_t>(out, 1);
  store<std::uint32_t>(out, static_cast<std::uint32_t>(rate));
  store<std::uint32_t>(out, static_cast<std::uint32_t>(rate) * bytes_per_sample);
  store<std::uint16_t>(out, static_cast<std::uint16_t>(bytes_per_sample));
  store<std::uint16_t>(out, bits);
  out += "data";
  store<std::uint32_t>(out, data_size);
  for (const double s : w.samples()) {
    switch (encoding) {
      case WavEncoding::pcm16:
        store<std::int16_t>(out, static_cast<std::int16_t>(std::clamp<long long>(std::llround(s * 32768.0), -32768, 32767)));
        break;
      case WavEncoding::pcm32:
        store<std::int32_t>(out, static_cast<std::int32_t>(
                                     std::clamp<long long>(std::llround(s * 2147483648.0), INT32_MIN, INT32_MAX)));
        break;
      case WavEncoding::float32:
        store<float>(out, static_cast<float>(s));
        break;
    }
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw error(errc::io_failure, "cannot write " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw error(errc::io_failure, "short write to " + path.string());
}

Waveform read_csv_recording(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw error(errc::io_failure, "cannot open " + path.string());
  const std::string name = path.string();
  double sample_rate = kDefaultSampleRate;
  std::vector<double> samples;
  std::string line;
  std::size_t line_no = 0;
  static const std::regex rate_pattern(R"(sample_rate\s*[=:,]\s*([0-9.eE+]+))");
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line.find(',') != std::string::npos && line.find("sample_rate") == std::string::npos) {
      throw error(errc::multichannel_rejected, fmt::format("{}:{}: more than one column", name, line_no));
    }
    try {
      std::size_t used = 0;
      const double v = std::stod(line, &used);
      if (line.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(line);
      samples.push_back(v);
      continue;
    } catch (const std::exception&) {
    }
    if (!samples.empty()) throw error(errc::corrupt_file, fmt::format("{}:{}: not a number", name, line_no));
    std::smatch match;
    if (std::regex_search(line, match, rate_pattern)) sample_rate = std::stod(match[1].str());
  }
  if (samples.empty()) throw error(errc::corrupt_file, name + ": no samples");
  try {
    return Waveform(std::move(samples), sample_rate);
  } catch (const error& e) {
    throw error(errc::corrupt_file, name + ": " + e.what());
  }
}

Waveform load_recording(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (ext == ".wav") return read_wav(path);
  if (ext == ".csv" || ext == ".txt") return read_csv_recording(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error(errc::io_failure, "cannot open " + path.string());
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() == 4 && std::memcmp(magic.data(), "RIFF", 4) == 0) return read_wav(path);
  throw error(errc::unsupported_format, path.string() + ": expected .wav or .csv audio");
}

}  // namespace sonarmark
