#include "mvkit/patch_features.hpp"

#include "mvkit/csv.hpp"
#include "mvkit/error.hpp"
#include "mvkit/rng.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace mvkit {

RasterImage::RasterImage(int w, int h, std::uint8_t fill) : width(w), height(h) {
  if (w <= 0 || h <= 0) fail(ErrorCode::InvalidArgument, "image dimensions must be positive");
  pixels.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3, fill);
}

RasterImage RasterImage::crop(int x, int y, int size) const {
  if (x < 0 || y < 0 || size <= 0 || x + size > width || y + size > height) {
    fail(ErrorCode::InvalidArgument, "crop outside image bounds");
  }
  RasterImage out(size, size);
  for (int r = 0; r < size; ++r) {
    std::memcpy(out.pixels.data() + out.index(0, r, 0), pixels.data() + index(x, y + r, 0),
                static_cast<std::size_t>(size) * 3);
  }
  return out;
}

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string ppm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

}  // namespace

RasterImage read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  if (ppm_token(in) != "P6") fail(ErrorCode::InvalidData, path.string() + ": not a binary PPM (P6)");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(ppm_token(in));
    h = std::stoi(ppm_token(in));
    maxval = std::stoi(ppm_token(in));  // consumes the single whitespace before pixel data
  } catch (const std::exception&) {
    fail(ErrorCode::InvalidData, path.string() + ": malformed PPM header");
  }
  if (maxval != 255) fail(ErrorCode::InvalidData, path.string() + ": only maxval 255 is supported");
  if (w <= 0 || h <= 0) fail(ErrorCode::InvalidData, path.string() + ": bad dimensions");
  RasterImage img(w, h);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
    fail(ErrorCode::InvalidData, path.string() + ": truncated pixel data");
  }
  return img;
}

void write_ppm(const std::filesystem::path& path, const RasterImage& img) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
}

PatchSample sample_patches(const RasterImage& img, const PatchOptions& opt, std::uint64_t seed) {
  if (opt.count < 1) fail(ErrorCode::InvalidArgument, "patch count must be at least 1");
  if (opt.size <= 0 || opt.size > img.width || opt.size > img.height) {
    fail(ErrorCode::InvalidArgument, "patch size " + std::to_string(opt.size) + " does not fit a " +
                                         std::to_string(img.width) + "x" + std::to_string(img.height) + " image");
  }
  if (opt.max_attempts < 1) fail(ErrorCode::InvalidArgument, "max_attempts must be at least 1");

  // Summed-area table of black pixels; black count of any patch in O(1).
  const std::size_t w1 = static_cast<std::size_t>(img.width) + 1;
  std::vector<std::uint32_t> sat(w1 * (static_cast<std::size_t>(img.height) + 1), 0);
  for (int y = 0; y < img.height; ++y) {
    std::uint32_t row = 0;
    for (int x = 0; x < img.width; ++x) {
      row += img.is_black(x, y) ? 1u : 0u;
      sat[(y + 1) * w1 + (x + 1)] = sat[y * w1 + (x + 1)] + row;
    }
  }
  const auto s = static_cast<std::size_t>(opt.size);
  auto black_in = [&](std::size_t x, std::size_t y) {
    return sat[(y + s) * w1 + (x + s)] - sat[y * w1 + (x + s)] - sat[(y + s) * w1 + x] + sat[y * w1 + x];
  };
  const double limit = opt.max_black_frac * static_cast<double>(s * s);

  CounterRng rng(seed);
  const auto nx = static_cast<std::uint64_t>(img.width - opt.size + 1);
  const auto ny = static_cast<std::uint64_t>(img.height - opt.size + 1);
  PatchSample out;
  for (std::size_t k = 0; k < opt.count; ++k) {
    bool accepted = false;
    for (std::size_t a = 0; a < opt.max_attempts && !accepted; ++a) {
      const auto x = static_cast<std::size_t>(rng.below(nx));
      const auto y = static_cast<std::size_t>(rng.below(ny));
      ++out.attempts;
      if (static_cast<double>(black_in(x, y)) <= limit) {
        out.patches.push_back({static_cast<int>(x), static_cast<int>(y)});
        accepted = true;
      }
    }
    if (!accepted) {
      fail(ErrorCode::TooMuchBackground, "patch " + std::to_string(k + 1) + " rejected " +
                                             std::to_string(opt.max_attempts) + " times");
    }
  }
  return out;
}

FeatureArray::FeatureArray(Index a, Index b, Index c, double fill) : v1(a), v2(b), v3(c) {
  if (a <= 0 || b <= 0 || c <= 0) fail(ErrorCode::InvalidArgument, "array dimensions must be positive");
  data.assign(static_cast<std::size_t>(a * b * c), fill);
}

FeatureArray StubEmbedder::embed(const RasterImage& patch) const {
  if (patch.width < grid_ || patch.height < grid_) fail(ErrorCode::InvalidArgument, "patch smaller than grid");
  FeatureArray out(grid_, grid_, 3);
  for (int bi = 0; bi < grid_; ++bi) {
    const int y0 = bi * patch.height / grid_, y1 = (bi + 1) * patch.height / grid_;
    for (int bj = 0; bj < grid_; ++bj) {
      const int x0 = bj * patch.width / grid_, x1 = (bj + 1) * patch.width / grid_;
      double sum[3] = {0, 0, 0};
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x)
          for (int c = 0; c < 3; ++c) sum[c] += patch.at(x, y, c);
      const double cnt = static_cast<double>((y1 - y0) * (x1 - x0));
      for (int c = 0; c < 3; ++c) out(bi, bj, c) = sum[c] / cnt / 255.0;
    }
  }
  return out;
}

Vector maxpool_to_vector(const FeatureArray& a) {
  if (a.v3 <= 0 || a.data.size() != static_cast<std::size_t>(a.v1 * a.v2 * a.v3)) {
    fail(ErrorCode::ShapeMismatch, "feature array data does not match its dimensions");
  }
  Vector out = Vector::Constant(a.v3, -INFINITY);
  for (Index i = 0; i < a.v1; ++i)
    for (Index j = 0; j < a.v2; ++j)
      for (Index c = 0; c < a.v3; ++c) {
        const double v = a(i, j, c);
        if (!std::isfinite(v)) fail(ErrorCode::InvalidData, "non-finite embedder output");
        out(c) = std::max(out(c), v);
      }
  return out;
}

Vector unit_feature_vector(const std::vector<Vector>& patch_vectors) {
  if (patch_vectors.empty()) fail(ErrorCode::EmptyPatchSet, "no patch vectors");
  Vector sum = Vector::Zero(patch_vectors.front().size());
  for (const auto& v : patch_vectors) {
    if (v.size() != sum.size()) fail(ErrorCode::ShapeMismatch, "patch vectors differ in length");
    sum += v;
  }
  return sum / static_cast<double>(patch_vectors.size());
}

namespace {

std::filesystem::path sidecar_of(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".json");
}

template <typename T>
T from_bytes(const char* p, bool swap) {
  char buf[sizeof(T)];
  std::memcpy(buf, p, sizeof(T));
  if (swap) std::reverse(buf, buf + sizeof(T));
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace

void write_feature_array(const std::filesystem::path& path, const FeatureArray& a, const std::string& dtype) {
  if (dtype != "float32" && dtype != "float64") fail(ErrorCode::InvalidArgument, "dtype must be float32 or float64");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  for (double v : a.data) {
    if (dtype == "float32") {
      const auto f = static_cast<float>(v);
      out.write(reinterpret_cast<const char*>(&f), sizeof f);
    } else {
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
  }
  const nlohmann::json meta = {{"v1", a.v1},
                               {"v2", a.v2},
                               {"v3", a.v3},
                               {"dtype", dtype},
                               {"byte_order", std::endian::native == std::endian::little ? "little" : "big"}};
  write_text_file(sidecar_of(path), meta.dump(1) + "\n");
}

FeatureArray read_feature_array(const std::filesystem::path& path) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_text_file(sidecar_of(path)));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidData, sidecar_of(path).string() + ": " + e.what());
  }
  Index v1 = 0, v2 = 0, v3 = 0;
  std::string dtype, order;
  try {
    v1 = meta.at("v1").get<Index>();
    v2 = meta.at("v2").get<Index>();
    v3 = meta.at("v3").get<Index>();
    dtype = meta.at("dtype").get<std::string>();
    order = meta.value("byte_order", std::string("little"));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidData, sidecar_of(path).string() + ": " + e.what());
  }
  if (dtype != "float32" && dtype != "float64") fail(ErrorCode::InvalidData, "unsupported dtype '" + dtype + "'");
  if (order != "little" && order != "big") fail(ErrorCode::InvalidData, "unsupported byte_order '" + order + "'");
  const bool swap = (order == "little") != (std::endian::native == std::endian::little);
  const std::size_t width = dtype == "float32" ? 4 : 8;

  FeatureArray a(v1, v2, v3);
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() != a.data.size() * width) {
    fail(ErrorCode::InvalidData, path.string() + ": expected " + std::to_string(a.data.size() * width) +
                                     " bytes, found " + std::to_string(bytes.size()));
  }
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const char* p = bytes.data() + i * width;
    a.data[i] = width == 4 ? static_cast<double>(from_bytes<float>(p, swap)) : from_bytes<double>(p, swap);
    if (!std::isfinite(a.data[i])) fail(ErrorCode::InvalidData, path.string() + ": non-finite value");
  }
  return a;
}

void write_patch_manifest(const std::filesystem::path& path, const std::vector<ManifestRow>& rows) {
  CsvTable t;
  t.header = {"image_id", "patch_index", "x", "y"};
  for (const auto& r : rows) {
    t.rows.push_back({r.image_id, std::to_string(r.patch_index), std::to_string(r.x), std::to_string(r.y)});
  }
  write_csv_table(path, t);
}

std::vector<ManifestRow> read_patch_manifest(const std::filesystem::path& path) {
  const CsvTable t = read_csv_table(path);
  if (t.header != std::vector<std::string>{"image_id", "patch_index", "x", "y"}) {
    fail(ErrorCode::InvalidData, path.string() + ": expected header image_id,patch_index,x,y");
  }
  std::vector<ManifestRow> rows;
  for (const auto& r : t.rows) {
    try {
      rows.push_back({r[0], static_cast<std::size_t>(std::stoul(r[1])), std::stoi(r[2]), std::stoi(r[3])});
    } catch (const std::exception&) {
      fail(ErrorCode::InvalidData, path.string() + ": bad manifest row for '" + r[0] + "'");
    }
  }
  return rows;
}

ImageFeatures image_features(const std::vector<std::string>& image_ids, const std::vector<RasterImage>& images,
                             const Embedder& embedder, const PatchOptions& options, std::uint64_t seed,
                             unsigned threads) {
  if (image_ids.size() != images.size()) fail(ErrorCode::LengthMismatch, "image ids and images differ in count");
  if (images.empty()) fail(ErrorCode::InvalidArgument, "no images");
  const std::size_t m = images.size();
  std::vector<Vector> rows(m);
  std::vector<std::vector<PatchLocation>> locations(m);
  parallel_for(m, threads, [&](std::size_t i) {
    const PatchSample s = sample_patches(images[i], options, derive_seed(seed, image_ids[i]));
    std::vector<Vector> vecs;
    for (const auto& loc : s.patches) {
      vecs.push_back(maxpool_to_vector(embedder.embed(images[i].crop(loc.x, loc.y, options.size))));
    }
    rows[i] = unit_feature_vector(vecs);
    locations[i] = s.patches;
  });
  const Index width = rows.front().size();
  Matrix values(static_cast<Index>(m), width);
  for (std::size_t i = 0; i < m; ++i) {
    if (rows[i].size() != width) fail(ErrorCode::ShapeMismatch, "embedder output width varies across images");
    values.row(static_cast<Index>(i)) = rows[i].transpose();
  }
  std::vector<std::string> names;
  for (Index c = 0; c < width; ++c) names.push_back("emb" + std::to_string(c + 1));
  ImageFeatures out{FeatureMatrix(image_ids, names, std::move(values)), {}};
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = 0; k < locations[i].size(); ++k)
      out.manifest.push_back({image_ids[i], k, locations[i][k].x, locations[i][k].y});
  return out;
}

}  // namespace mvkit
