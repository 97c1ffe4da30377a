#pragma once

// Corpus handling: grayscale image I/O, center crop, subject-disjoint
// split, and a deterministic synthetic fingerprint generator.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fpc/image.hpp"

namespace fpc::data {

struct LoadInfo {
  bool converted_from_color = false;
};

/// Read an 8-bit grayscale PGM (P5) or PNG. Color PNGs are converted to
/// BT.601 luma and flagged through `info`.
Image load_gray(const std::filesystem::path& path, LoadInfo* info = nullptr);

/// Write PGM or PNG depending on the extension (.pgm / .png).
void save_gray(const Image& image, const std::filesystem::path& path);

/// BT.601 luma of one RGB pixel, rounded to nearest.
std::uint8_t bt601_luma(std::uint8_t r, std::uint8_t g, std::uint8_t b);

struct CropOffsets {
  std::size_t top = 0;
  std::size_t left = 0;
};

CropOffsets center_crop_offsets(std::size_t height, std::size_t width, std::size_t side);
Image center_crop(const Image& image, std::size_t side = 320);

enum class Split { train, val, test };
const char* split_name(Split s);
std::optional<Split> parse_split(const std::string& s);

struct CorpusEntry {
  int subject_id = 0;
  int finger_id = 0;
  int sample_id = 0;
  std::filesystem::path path;  // empty for synthetic entries
  std::uint64_t synthetic_seed = 0;
  Split split = Split::train;

  std::string image_id() const;
};

struct CorpusIndex {
  std::vector<CorpusEntry> entries;

  std::vector<CorpusEntry> in_split(Split s) const;
};

/// Assign splits by subject order: first 60% of subjects train, next 20%
/// val, the rest test. A pure function of the set of subject ids.
CorpusIndex split(CorpusIndex index);

/// Synthetic corpus layout used when no image files are available.
struct SyntheticCorpus {
  int subjects = 10;
  int fingers = 1;
  int samples = 1;
  std::uint64_t seed = 0;
  std::size_t height = 320;
  std::size_t width = 320;
};

/// Parsed corpus manifest.
struct Manifest {
  std::filesystem::path root;
  std::string pattern;              // e.g. "{subject}/L/{subject}_L{finger}_{sample}.png"
  std::optional<int> subjects;      // keep only the first N subjects
  std::optional<SyntheticCorpus> synthetic;
  std::size_t crop = 320;
  Split split = Split::test;
};

Manifest load_manifest(const std::filesystem::path& path);
Manifest parse_manifest(const std::string& json_text, const std::filesystem::path& base_dir = {});

/// Enumerate the corpus described by a manifest and assign splits.
CorpusIndex scan(const Manifest& manifest);

/// Load (or synthesize) one entry and apply the manifest's crop.
Image load_entry(const CorpusEntry& entry, const Manifest& manifest);

/// Deterministic synthetic fingerprint: curved sinusoidal ridges with a
/// handful of phase singularities (which become minutiae) inside an
/// elliptical foreground on a light background.
Image gen_synthetic_fingerprint(std::uint64_t seed, std::size_t height, std::size_t width);

}  // namespace fpc::data
