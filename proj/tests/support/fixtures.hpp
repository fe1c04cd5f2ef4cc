#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mofit/dataset.hpp"

// Test fixtures shaped like the two public source tables (same headers, category
// sets, row counts and plausible value ranges). The values are simulated; they
// exist so that the pipeline can be exercised without the real files.
namespace mofit::testing {

RawTable synthetic_obesity_table(std::uint64_t seed = 7);
RawTable synthetic_bodyfat_table(std::uint64_t seed = 11);
std::string to_csv(const RawTable& table);

/// Dataset from literal rows with generic names; n_classes = 0 means regression.
EncodedDataset make_dataset(const std::vector<std::vector<double>>& rows, const std::vector<double>& y,
                            std::size_t n_classes);

/// Path of a real dataset taken from the environment, or empty.
std::string dataset_path(const char* env_var);

}  // namespace mofit::testing
