#include "deq/data.hpp"

#include <cstdio>
#include <fstream>
#include <vector>

#include "deq/rng.hpp"

namespace deq {

namespace {

Vector unit_gaussian(RngStream& g, int d) {
  Vector v(d);
  for (int i = 0; i < d; ++i) v[i] = g.normal();
  const double n = v.norm();
  return n > 0.0 ? Vector(v / n) : unit_gaussian(g, d);
}

bool parallel_to_existing(const Matrix& X, Index rows, const Vector& x) {
  for (Index i = 0; i < rows; ++i) {
    if (std::abs(X.row(i).dot(x)) > 1.0 - 1e-9) return true;
  }
  return false;
}

}  // namespace

DataBatch make_synthetic(SyntheticKind kind, int n, int d, double separation,
                         std::uint64_t seed) {
  if (n < 1 || d < 1) throw InvalidConfig("make_synthetic: n, d must be >= 1");
  if (kind == SyntheticKind::two_cluster_sphere && n % 2 != 0) {
    throw InvalidConfig("make_synthetic: two_cluster_sphere needs even n");
  }
  if (kind == SyntheticKind::two_cluster_sphere &&
      !(separation > 0.0 && separation <= 1.0)) {
    throw InvalidConfig("make_synthetic: separation must lie in (0,1]");
  }

  RngStream g(derive_stream(seed, 0xda7aULL));
  DataBatch batch;
  batch.n = n;
  batch.X.resize(n, d);
  batch.y.resize(n);

  Vector center = Vector::Zero(d);
  center[0] = 1.0;
  const double spread = 1.0 - separation + 0.05;

  for (Index i = 0; i < n; ++i) {
    const double label =
        (kind == SyntheticKind::two_cluster_sphere) ? (i % 2 == 0 ? 1.0 : -1.0)
                                                    : g.sign();
    Vector x;
    int attempts = 0;
    do {
      if (++attempts > 1000) {
        throw InvalidConfig(
            "make_synthetic: could not place a non-parallel point");
      }
      if (kind == SyntheticKind::two_cluster_sphere) {
        Vector noise(d);
        for (int k = 0; k < d; ++k) noise[k] = g.normal();
        x = label * center + spread * noise;
        x /= x.norm();
      } else {
        x = unit_gaussian(g, d);
      }
    } while (parallel_to_existing(batch.X, i, x));
    batch.X.row(i) = x.transpose();
    batch.y[i] = label;
  }
  return batch;
}

namespace {

std::uint32_t read_be32(std::ifstream& f, const std::string& path) {
  unsigned char buf[4];
  if (!f.read(reinterpret_cast<char*>(buf), 4)) {
    throw TruncatedFile("IDX file truncated in header: " + path);
  }
  return (static_cast<std::uint32_t>(buf[0]) << 24) |
         (static_cast<std::uint32_t>(buf[1]) << 16) |
         (static_cast<std::uint32_t>(buf[2]) << 8) |
         static_cast<std::uint32_t>(buf[3]);
}

}  // namespace

DataBatch load_mnist_pair(const DatasetOnDisk& spec, std::uint64_t seed) {
  if (spec.count < 1) throw InvalidConfig("load_mnist_pair: count must be >= 1");

  std::ifstream imgf(spec.images_path, std::ios::binary);
  if (!imgf) throw TruncatedFile("cannot open " + spec.images_path);
  std::ifstream lblf(spec.labels_path, std::ios::binary);
  if (!lblf) throw TruncatedFile("cannot open " + spec.labels_path);

  const std::uint32_t img_magic = read_be32(imgf, spec.images_path);
  if (img_magic != kIdxImagesMagic) {
    throw BadMagic("bad images magic in " + spec.images_path);
  }
  const std::uint32_t lbl_magic = read_be32(lblf, spec.labels_path);
  if (lbl_magic != kIdxLabelsMagic) {
    throw BadMagic("bad labels magic in " + spec.labels_path);
  }

  const std::uint32_t n_img = read_be32(imgf, spec.images_path);
  const std::uint32_t rows = read_be32(imgf, spec.images_path);
  const std::uint32_t cols = read_be32(imgf, spec.images_path);
  const std::uint32_t n_lbl = read_be32(lblf, spec.labels_path);
  if (n_img != n_lbl) {
    throw InvalidConfig("image/label counts differ (" + std::to_string(n_img) +
                        " vs " + std::to_string(n_lbl) + ")");
  }
  const std::size_t dim = static_cast<std::size_t>(rows) * cols;
  if (dim == 0) throw InvalidConfig("IDX images have zero dimension");

  std::vector<unsigned char> labels(n_lbl);
  if (!lblf.read(reinterpret_cast<char*>(labels.data()), n_lbl)) {
    throw TruncatedFile("IDX labels truncated: " + spec.labels_path);
  }
  std::vector<unsigned char> pixels(static_cast<std::size_t>(n_img) * dim);
  if (!imgf.read(reinterpret_cast<char*>(pixels.data()),
                 static_cast<std::streamsize>(pixels.size()))) {
    throw TruncatedFile("IDX images truncated: " + spec.images_path);
  }

  bool saw_a = false, saw_b = false;
  std::vector<std::uint32_t> candidates;
  for (std::uint32_t i = 0; i < n_img; ++i) {
    const int lbl = labels[i];
    if (lbl == spec.class_a) saw_a = true;
    if (lbl == spec.class_b) saw_b = true;
    if (lbl != spec.class_a && lbl != spec.class_b) continue;
    // A zero image cannot be normalized; MNIST has none, but guard anyway.
    bool nonzero = false;
    for (std::size_t k = 0; k < dim && !nonzero; ++k) {
      nonzero = pixels[i * dim + k] != 0;
    }
    if (nonzero) candidates.push_back(i);
  }
  if (!saw_a) {
    throw ClassNotPresent("class " + std::to_string(spec.class_a) +
                          " not present in " + spec.labels_path);
  }
  if (!saw_b) {
    throw ClassNotPresent("class " + std::to_string(spec.class_b) +
                          " not present in " + spec.labels_path);
  }
  if (candidates.size() < static_cast<std::size_t>(spec.count)) {
    throw InvalidConfig("only " + std::to_string(candidates.size()) +
                        " usable samples for the requested classes, need " +
                        std::to_string(spec.count));
  }

  // Seeded partial Fisher-Yates keeps the draw identical across runs.
  RngStream g(derive_stream(seed, 0x1d8aULL));
  for (int k = 0; k < spec.count; ++k) {
    const std::size_t j =
        k + static_cast<std::size_t>(g.below(candidates.size() - k));
    std::swap(candidates[static_cast<std::size_t>(k)], candidates[j]);
  }

  DataBatch batch;
  batch.n = spec.count;
  batch.X.resize(spec.count, static_cast<Index>(dim));
  batch.y.resize(spec.count);
  for (int k = 0; k < spec.count; ++k) {
    const std::uint32_t idx = candidates[static_cast<std::size_t>(k)];
    Vector row(static_cast<Index>(dim));
    for (std::size_t p = 0; p < dim; ++p) {
      row[static_cast<Index>(p)] = pixels[idx * dim + p] / 255.0;
    }
    row /= row.norm();
    batch.X.row(k) = row.transpose();
    batch.y[k] = (labels[idx] == spec.class_a) ? 1.0 : -1.0;
  }
  return batch;
}

}  // namespace deq
