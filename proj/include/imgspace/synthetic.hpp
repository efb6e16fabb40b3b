#pragma once

#include <cstdint>
#include <utility>

#include "imgspace/data.hpp"

namespace imgspace::data {

// Procedural stand-in for CIFAR-10 when the real files are unavailable.
//
// Each category is a union of several disconnected clusters ("modes"), each
// built around a smooth random prototype of colored blobs. Samples are the
// prototype under a random shift, gain/offset, partial blend toward another
// category and per-pixel noise. Two kinds of hard training samples are
// planted on purpose:
//   * a small "stray" mode per category that sits close to a partner
//     category's prototype (a disconnected piece of the category), and
//   * uniformly flipped labels on a fraction of the training set.
// Images are 3x32x32 so they round-trip through the CIFAR binary layout.
struct SurrogateSpec {
  std::size_t train = 5000;
  std::size_t test = 2000;
  std::size_t categories = 10;
  std::size_t modes = 3;
  double stray_fraction = 0.08;
  double stray_pull = 0.6;       // blend weight of the partner prototype
  double label_noise = 0.08;     // train only
  double pixel_noise = 70.0;     // std of per-pixel noise, in pixel units
  double max_blend = 0.6;        // upper bound of the cross-category blend
  int max_shift = 3;
  std::uint64_t seed = 1;

  void validate() const;
};

// (train, test); ids are 0..train-1 and 0..test-1.
std::pair<LabeledDataset, LabeledDataset> make_surrogate(const SurrogateSpec& spec);

}  // namespace imgspace::data
