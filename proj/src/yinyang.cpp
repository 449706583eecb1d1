#include "cmsnn/yinyang.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "cmsnn/errors.hpp"

namespace cmsnn {

namespace {

constexpr double kRadiusBig = 0.5;
constexpr double kRadiusDot = 0.1;
constexpr double kRadiusCurve = 0.25;  // half-disk radius of the dividing S-curve
constexpr double kCenterX = 0.5;
constexpr double kCenterY = 0.5;
constexpr double kLeftDotX = 0.25;
constexpr double kRightDotX = 0.75;

double dist2(double x0, double y0, double x1, double y1) {
  const double dx = x0 - x1, dy = y0 - y1;
  return dx * dx + dy * dy;
}

}  // namespace

std::string class_name(YinYangClass c) {
  switch (c) {
    case YinYangClass::yin: return "yin";
    case YinYangClass::yang: return "yang";
    case YinYangClass::dot: return "dot";
  }
  throw ContractError("class_name: invalid class tag");
}

YinYangClass class_from_name(const std::string& name) {
  if (name == "yin") return YinYangClass::yin;
  if (name == "yang") return YinYangClass::yang;
  if (name == "dot") return YinYangClass::dot;
  throw ContractError("unknown class label '" + name + "'");
}

YinYangClass which_class(double x, double y) {
  if (!(dist2(x, y, kCenterX, kCenterY) < kRadiusBig * kRadiusBig)) {
    throw ContractError("which_class: point (" + std::to_string(x) + ", " + std::to_string(y) +
                        ") lies outside the symbol disk");
  }
  const double d2_left = dist2(x, y, kLeftDotX, kCenterY);
  const double d2_right = dist2(x, y, kRightDotX, kCenterY);
  if (d2_left < kRadiusDot * kRadiusDot || d2_right < kRadiusDot * kRadiusDot) {
    return YinYangClass::dot;
  }
  const bool in_right_half_disk = y > kCenterY && d2_right < kRadiusCurve * kRadiusCurve;
  const bool in_left_half_disk = y < kCenterY && d2_left < kRadiusCurve * kRadiusCurve;
  const bool is_yin = in_right_half_disk || (y < kCenterY && !in_left_half_disk);
  return is_yin ? YinYangClass::yin : YinYangClass::yang;
}

DatasetSplit generate_split(const std::string& name, int size, std::uint64_t seed,
                            bool balanced) {
  if (size < 3) throw ContractError("generate_split: size must be >= 3");
  Rng rng(seed);
  DatasetSplit split;
  split.name = name;
  split.seed = seed;
  split.points.reserve(size);
  for (int i = 0; i < size; ++i) {
    const int goal = balanced ? i % kYinYangClasses : -1;
    for (;;) {
      const double x = rng.uniform();
      const double y = rng.uniform();
      if (!(dist2(x, y, kCenterX, kCenterY) < kRadiusBig * kRadiusBig)) continue;
      const YinYangClass c = which_class(x, y);
      if (goal >= 0 && static_cast<int>(c) != goal) continue;
      split.points.push_back(YinYangPoint::make(x, y, c));
      break;
    }
  }
  return split;
}

SpikeTrain rate_encode(const YinYangPoint& point, int steps, Rng& rng) {
  if (steps < 1) throw ContractError("rate_encode: need T >= 1");
  for (double f : point.features) {
    if (!(f >= 0.0 && f <= 1.0)) {
      throw ContractError("rate_encode: feature " + std::to_string(f) + " outside [0, 1]");
    }
  }
  SpikeTrain train = SpikeTrain::zeros(steps, 4);
  for (int t = 0; t < steps; ++t) {
    for (int i = 0; i < 4; ++i) {
      train.set(t, i, rng.bernoulli(point.features[i]) ? 1 : 0);
    }
  }
  return train;
}

std::array<double, 4> rate_decode(const SpikeTrain& train) {
  if (train.steps < 1) throw ContractError("rate_decode: need T >= 1");
  if (train.neurons != 4) {
    throw ShapeError("rate_decode: expected 4 channels, got " + std::to_string(train.neurons));
  }
  std::array<double, 4> rates{};
  for (int i = 0; i < 4; ++i) {
    long count = 0;
    for (int t = 0; t < train.steps; ++t) count += train.at(t, i);
    rates[i] = static_cast<double>(count) / train.steps;
  }
  return rates;
}

void dataset_to_csv(const DatasetSplit& split, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("dataset_to_csv: cannot open " + path.string());
  out << "x,y,x_mirror,y_mirror,label\n";
  char buf[32];
  for (const auto& p : split.points) {
    for (double f : p.features) {
      std::snprintf(buf, sizeof buf, "%.17g", f);
      out << buf << ',';
    }
    out << class_name(p.label) << '\n';
  }
  if (!out) throw IoError("dataset_to_csv: write failed for " + path.string());
}

DatasetSplit dataset_from_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("dataset_from_csv: cannot open " + path.string());
  DatasetSplit split;
  split.name = path.stem().string();
  std::string line;
  if (!std::getline(in, line) || line != "x,y,x_mirror,y_mirror,label") {
    throw IoError("dataset_from_csv: bad header in " + path.string());
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    YinYangPoint p;
    for (int i = 0; i < 4; ++i) {
      if (!std::getline(row, cell, ',')) {
        throw IoError("dataset_from_csv: " + path.string() + ":" + std::to_string(line_no) +
                      ": expected 5 columns");
      }
      char* end = nullptr;
      p.features[i] = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) {
        throw IoError("dataset_from_csv: " + path.string() + ":" + std::to_string(line_no) +
                      ": bad number '" + cell + "'");
      }
    }
    if (!std::getline(row, cell)) {
      throw IoError("dataset_from_csv: " + path.string() + ":" + std::to_string(line_no) +
                    ": missing label");
    }
    p.label = class_from_name(cell);
    split.points.push_back(p);
  }
  return split;
}

}  // namespace cmsnn
