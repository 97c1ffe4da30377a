#pragma once

// Fingerprint enhancement, thinning, crossing-number minutiae extraction and
// distance-threshold matching between an original and a compressed image.

#include <cstdint>
#include <string>
#include <vector>

#include "fpc/image.hpp"

namespace fpc::minutiae {

enum class Kind : std::uint8_t { termination = 0, bifurcation = 1 };
const char* kind_name(Kind k);

struct Minutia {
  int x = 0;
  int y = 0;
  Kind kind = Kind::termination;

  friend bool operator==(const Minutia&, const Minutia&) = default;
};

struct EnhanceOptions {
  int block = 16;
  double target_mean = 100.0;
  double target_variance = 100.0;
  double mask_std_ratio = 0.1;  // block std must exceed this fraction of the image std
  int signature_length = 32;    // x-signature window across the ridges
  int signature_width = 16;     // ... and along them
  double min_period = 3.0;
  double max_period = 25.0;
  double gabor_sigma = 4.0;
  int gabor_size = 25;
  int orientation_bins = 60;  // 3 degree steps
};

struct EnhanceResult {
  BinaryImage ridges;  // 1 = ridge, restricted to the mask
  BinaryImage mask;    // 1 = foreground block
  double frequency = 0.0;              // ridges per pixel
  std::vector<float> orientation;      // per pixel ridge direction in [0, pi)
};

/// Normalize, estimate orientation and frequency, Gabor filter and threshold.
/// Throws NoRidgeStructureError when no block yields a ridge frequency.
EnhanceResult enhance_full(const Image& x, const EnhanceOptions& options = {});
BinaryImage enhance(const Image& x, const EnhanceOptions& options = {});

/// Even-symmetric Gabor kernel for ridges running along angle theta.
std::vector<float> gabor_kernel(double theta, double frequency, double sigma, int size);

/// Thin to a one-pixel 8-connected skeleton by repeated directional removal
/// of simple points; endpoints and 8-connected components are preserved.
BinaryImage skeletonize(const BinaryImage& b);

/// 8-neighborhood as a bit mask, bit i for N, NE, E, SE, S, SW, W, NW.
std::uint8_t neighborhood(const BinaryImage& b, int y, int x);
/// Half the number of value changes around the cyclic neighborhood.
int crossing_number(std::uint8_t neighbors);

struct ExtractOptions {
  int border_margin = 10;
  int mask_erosion = 16;       // pixels trimmed off the foreground mask
  double prune_distance = 5.0; // termination pairs closer than this on one ridge are dropped
};

/// Crossing-number minutiae of a skeleton. When `mask` is non-empty, only
/// points inside the mask eroded by options.mask_erosion are kept.
std::vector<Minutia> extract(const BinaryImage& skeleton, const ExtractOptions& options = {},
                             const BinaryImage& mask = {});

/// Number of 8-connected foreground components.
std::size_t count_components(const BinaryImage& b);

struct MinutiaeReport {
  int kept_t = 0, kept_b = 0;
  int extra_t = 0, extra_b = 0;
  int changed_t = 0;  // termination in the original, bifurcation after compression
  int changed_b = 0;  // bifurcation in the original, termination after compression
  int lost_t = 0, lost_b = 0;
  int original_t = 0, original_b = 0;
  int compressed_t = 0, compressed_b = 0;

  int original_total() const { return original_t + original_b; }
  int kept() const { return kept_t + kept_b; }
  int extra() const { return extra_t + extra_b; }
  int changed() const { return changed_t + changed_b; }
  int lost() const { return lost_t + lost_b; }

  friend bool operator==(const MinutiaeReport&, const MinutiaeReport&) = default;
};

struct MatchedPair {
  std::size_t original = 0;
  std::size_t compressed = 0;
  double distance = 0.0;
};

/// Greedy one-to-one assignment, nearest pairs first, over all cross pairs
/// with distance <= threshold regardless of kind.
std::vector<MatchedPair> match_pairs(const std::vector<Minutia>& original,
                                     const std::vector<Minutia>& compressed, double threshold = 3.0);
MinutiaeReport match(const std::vector<Minutia>& original, const std::vector<Minutia>& compressed,
                     double threshold = 3.0);

struct PipelineOptions {
  EnhanceOptions enhance;
  ExtractOptions extract;
  double threshold = 3.0;
};

/// Enhance, thin and extract, keeping points inside `mask` (the image's own
/// mask when empty).
std::vector<Minutia> find_minutiae(const Image& x, const PipelineOptions& options = {},
                                   const BinaryImage& mask = {});

struct PairEvaluation {
  MinutiaeReport report;
  std::vector<Minutia> original;
  std::vector<Minutia> compressed;
};

/// Full pipeline on both images (region of interest taken from the
/// original), then match. Errors enhancing the original propagate; a
/// compressed image without ridge structure yields no minutiae.
PairEvaluation evaluate_pair_detail(const Image& original, const Image& compressed,
                                    const PipelineOptions& options = {});
MinutiaeReport evaluate_pair(const Image& original, const Image& compressed,
                             const PipelineOptions& options = {});

/// CSV columns shared by per-image rows of minutiae.csv.
std::string report_csv_columns();
std::string report_csv_values(const MinutiaeReport& r);

}  // namespace fpc::minutiae
