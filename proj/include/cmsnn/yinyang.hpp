#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cmsnn/lif.hpp"
#include "cmsnn/rng.hpp"

namespace cmsnn {

enum class YinYangClass : int { yin = 0, yang = 1, dot = 2 };

constexpr int kYinYangClasses = 3;
std::string class_name(YinYangClass c);
YinYangClass class_from_name(const std::string& name);

// One sample: (x, y) inside the disk of radius 0.5 around (0.5, 0.5), plus
// the mirrored coordinates (1-x, 1-y). The mirror pair is exact, which is
// what lets bias-free networks separate the classes.
struct YinYangPoint {
  std::array<double, 4> features{};  // x, y, 1-x, 1-y
  YinYangClass label = YinYangClass::yin;

  static YinYangPoint make(double x, double y, YinYangClass label) {
    return YinYangPoint{{x, y, 1.0 - x, 1.0 - y}, label};
  }
};

struct DatasetSplit {
  std::string name;  // training / validation / test
  std::uint64_t seed = 0;
  std::vector<YinYangPoint> points;

  int size() const { return static_cast<int>(points.size()); }
};

// Symbol geometry: big disk radius 0.5 at (0.5, 0.5); dots of radius 0.1 at
// (0.25, 0.5) and (0.75, 0.5); the S-curve is made of the two radius-0.25
// half-disks around the dot centers (upper half on the right, lower half on
// the left). Dots override. Membership is strict-interior everywhere, so
// disagreements with other renderings of the symbol are measure-zero.
YinYangClass which_class(double x, double y);

// Rejection-samples uniform points in the disk. Balanced generation cycles
// the target class sample by sample, so counts differ by at most one.
DatasetSplit generate_split(const std::string& name, int size, std::uint64_t seed,
                            bool balanced = true);

// Bernoulli rate code: each feature fires independently at each step with
// probability equal to its value.
SpikeTrain rate_encode(const YinYangPoint& point, int steps, Rng& rng);

// Per-channel firing rates; values land on the grid {0, 1/T, ..., 1}.
std::array<double, 4> rate_decode(const SpikeTrain& train);

// CSV columns x,y,x_mirror,y_mirror,label with 17 significant digits; the
// round trip is bit-exact.
void dataset_to_csv(const DatasetSplit& split, const std::filesystem::path& path);
DatasetSplit dataset_from_csv(const std::filesystem::path& path);

}  // namespace cmsnn
