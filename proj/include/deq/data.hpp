#ifndef DEQ_DATA_HPP
#define DEQ_DATA_HPP

#include <cstdint>
#include <string>

#include "deq/core.hpp"
#include "deq/model.hpp"

namespace deq {

enum class SyntheticKind { two_cluster_sphere, random_labels };

// Unit-norm rows with no two points parallel (resampled at threshold
// |cos| > 1 - 1e-9). two_cluster_sphere places labeled clusters around
// antipodal centers with angular spread shrinking in `separation`;
// random_labels draws uniform sphere points with Rademacher labels.
DataBatch make_synthetic(SyntheticKind kind, int n, int d, double separation,
                         std::uint64_t seed);

struct DatasetOnDisk {
  std::string images_path;
  std::string labels_path;
  int class_a = 0;  // mapped to +1
  int class_b = 1;  // mapped to -1
  int count = 0;
};

// IDX magic numbers (big-endian): 0x803 for images, 0x801 for labels.
constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

// Loads the two requested classes from an IDX pair, subsamples `count` rows
// with the seeded RNG, scales pixels by 1/255 and row-normalizes to unit
// norm; labels map {class_a -> +1, class_b -> -1}.
DataBatch load_mnist_pair(const DatasetOnDisk& spec, std::uint64_t seed);

}  // namespace deq

#endif  // DEQ_DATA_HPP
