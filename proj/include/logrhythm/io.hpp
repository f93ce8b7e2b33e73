#pragma once

#include <filesystem>
#include <stdexcept>
#include <span>
#include <string>
#include <vector>

#include "logrhythm/convnet.hpp"
#include "logrhythm/cqt.hpp"
#include "logrhythm/phasefeat.hpp"
#include "logrhythm/signals.hpp"
#include "logrhythm/tracker.hpp"

// File formats. Every binary field is little-endian; samples are 32-bit
// floats, so round trips are exact only to float precision.
//
//   RACT  "RACT" u32 channels, u32 frames, f64 rate, f32 data[channels][frames]
//   RGRM  "RGRM" u32 channels, u32 frames, u32 bins, f64 rate, f64 f_min,
//         u32 bpo, u32 hop, f32 (re, im)[channels][frames][bins]
//   RFMP  "RFMP" u32 rows, u32 frames, u32 bins, f64 rate, f64 f_min,
//         u32 bpo, u32 hop, f32 data[rows][frames][bins]
//
// RGRM and RFMP files come with a JSON sidecar (path + ".json") that mirrors
// the header and adds what the header cannot hold (full transform settings,
// the row table of a feature map).
namespace logrhythm::io {

/// Thrown for unreadable, truncated or malformed files.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_activations(const std::filesystem::path& path, const ActivationChannels& act);
ActivationChannels read_activations(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& path);

void write_rhythmogram(const std::filesystem::path& path, const cqt::Rhythmogram& rg);
/// Needs the sidecar for the full transform settings.
cqt::Rhythmogram read_rhythmogram(const std::filesystem::path& path);

void write_featuremap(const std::filesystem::path& path, const phasefeat::FeatureMap& map,
                      const cqt::CqtConfig& config);
phasefeat::FeatureMap read_featuremap(const std::filesystem::path& path);

/// One time per line, "%.6f" seconds.
void write_times(const std::filesystem::path& path, std::span<const double> times);
/// Blank lines and lines starting with '#' are skipped; only the first
/// whitespace-separated field of a line is read.
std::vector<double> read_times(const std::filesystem::path& path);

/// JSON description (format version, shapes, pooling, head) next to a blob
/// holding parameters() in order as f32. The blob is path + ".bin".
void save_model(const std::filesystem::path& path, const convnet::ModelParams& model);
convnet::ModelParams load_model(const std::filesystem::path& path);

/// {"pattern_id", "provenance", "values"} objects in a JSON array.
void write_fingerprints(const std::filesystem::path& path,
                        const std::vector<tracker::Fingerprint>& fps);
std::vector<tracker::Fingerprint> read_fingerprints(const std::filesystem::path& path);

}  // namespace logrhythm::io
