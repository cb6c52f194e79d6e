#pragma once

#include "mvkit/matrix_core.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace mvkit {

/// 8-bit RGB image, row-major, channels interleaved.
struct RasterImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  RasterImage() = default;
  RasterImage(int w, int h, std::uint8_t fill = 0);
  std::uint8_t& at(int x, int y, int c) { return pixels[index(x, y, c)]; }
  std::uint8_t at(int x, int y, int c) const { return pixels[index(x, y, c)]; }
  bool is_black(int x, int y) const { return at(x, y, 0) == 0 && at(x, y, 1) == 0 && at(x, y, 2) == 0; }
  RasterImage crop(int x, int y, int size) const;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3 +
           static_cast<std::size_t>(c);
  }
};

/// Binary PPM (P6, maxval 255).
RasterImage read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const RasterImage& img);

struct PatchOptions {
  std::size_t count = 10;
  int size = 200;
  double max_black_frac = 0.01;
  std::size_t max_attempts = 100;  // draws per patch before giving up
};

struct PatchLocation {
  int x = 0;  // top-left corner
  int y = 0;
};

struct PatchSample {
  std::vector<PatchLocation> patches;
  std::size_t attempts = 0;  // total corner draws, accepted or not
};

/// Top-left corners uniform over all positions where the patch fits. A draw
/// is rejected when more than max_black_frac of its pixels are (0,0,0).
/// Throws TooMuchBackground when one patch exhausts max_attempts.
PatchSample sample_patches(const RasterImage& img, const PatchOptions& options, std::uint64_t seed);

/// v1 x v2 x v3 real array, channel index fastest.
struct FeatureArray {
  Index v1 = 0, v2 = 0, v3 = 0;
  std::vector<double> data;

  FeatureArray() = default;
  FeatureArray(Index a, Index b, Index c, double fill = 0.0);
  double& operator()(Index i, Index j, Index c) { return data[offset(i, j, c)]; }
  double operator()(Index i, Index j, Index c) const { return data[offset(i, j, c)]; }

 private:
  std::size_t offset(Index i, Index j, Index c) const { return static_cast<std::size_t>((i * v2 + j) * v3 + c); }
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual FeatureArray embed(const RasterImage& patch) const = 0;
};

/// Per-channel means over a grid x grid block partition of the patch, so the
/// output is grid x grid x 3.
class StubEmbedder : public Embedder {
 public:
  explicit StubEmbedder(int grid = 4) : grid_(grid) {}
  FeatureArray embed(const RasterImage& patch) const override;

 private:
  int grid_;
};

/// out[c] = max over spatial positions of a(., ., c).
Vector maxpool_to_vector(const FeatureArray& a);

/// Elementwise mean. Throws EmptyPatchSet on an empty list and ShapeMismatch
/// on unequal lengths.
Vector unit_feature_vector(const std::vector<Vector>& patch_vectors);

/// Flat binary array plus "<path>.json" sidecar holding v1, v2, v3, dtype
/// ("float32" | "float64") and byte_order ("little" | "big").
void write_feature_array(const std::filesystem::path& path, const FeatureArray& a,
                         const std::string& dtype = "float64");
FeatureArray read_feature_array(const std::filesystem::path& path);

struct ManifestRow {
  std::string image_id;
  std::size_t patch_index = 0;
  int x = 0;
  int y = 0;
};

void write_patch_manifest(const std::filesystem::path& path, const std::vector<ManifestRow>& rows);
std::vector<ManifestRow> read_patch_manifest(const std::filesystem::path& path);

struct ImageFeatures {
  FeatureMatrix features;  // one row per image, one column per embedder channel
  std::vector<ManifestRow> manifest;
};

/// Samples patches from every image (seed per image derived from the image
/// id), embeds, maxpools and averages. Images are processed in parallel.
ImageFeatures image_features(const std::vector<std::string>& image_ids, const std::vector<RasterImage>& images,
                             const Embedder& embedder, const PatchOptions& options, std::uint64_t seed,
                             unsigned threads = 1);

}  // namespace mvkit
