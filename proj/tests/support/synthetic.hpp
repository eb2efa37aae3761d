#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "lpjigsaw/image.hpp"
#include "lpjigsaw/lpsolve.hpp"

namespace lpjigsaw::testing {

// Smooth colour gradients plus a band-limited random texture, continuous
// across piece boundaries and different everywhere. rows x cols pieces of
// piece_px pixels.
Image synthetic_image(int rows, int cols, int piece_px, std::uint64_t seed);

// One flat colour per piece-sized quadrant of a 2 x 2 grid.
Image flat_quadrants(int piece_px, const std::vector<std::array<std::uint16_t, 3>>& colors);

// Random placement problem with integer deltas in [-2, 2] and weights in
// [0.1, 10]; roughly `anchor_fraction` of the variables pinned.
PlacementProblem random_problem(int vars, int terms, std::uint64_t seed, double anchor_fraction = 0.0);

// Directory with the natural-image corpus used by the tests.
std::filesystem::path natural_corpus_dir();
std::vector<std::filesystem::path> natural_images();

}  // namespace lpjigsaw::testing
