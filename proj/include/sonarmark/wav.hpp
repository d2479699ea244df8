#pragma once

#include <filesystem>

#include "sonarmark/signal.hpp"

namespace sonarmark {

enum class WavEncoding { pcm16, pcm32, float32 };

/// Mono RIFF/WAVE: 16- or 32-bit integer PCM (scaled by 1/32768 or 1/2^31) or 32-bit float.
/// Throws unsupported_format, corrupt_file or multichannel_rejected.
[[nodiscard]] Waveform read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const Waveform& w,
               WavEncoding encoding = WavEncoding::float32);

/// Single column of numbers. An optional first line that is not a number is a header; when it
/// names `sample_rate` followed by a value, that value is used, otherwise 450 kHz.
[[nodiscard]] Waveform read_csv_recording(const std::filesystem::path& path);

/// Dispatches on extension (.wav, .csv, .txt), falling back to sniffing the RIFF magic.
[[nodiscard]] Waveform load_recording(const std::filesystem::path& path);

}  // namespace sonarmark
