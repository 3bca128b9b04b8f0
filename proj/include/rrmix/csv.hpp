#pragma once

#include <string>
#include <vector>

#include "rrmix/types.hpp"

namespace rrmix {

// How to split a headered CSV into responses and predictors. Response columns
// are named explicitly; remaining columns are predictors, except an optional
// label column carrying integer ground-truth cluster ids.
struct CsvSchema {
  std::vector<std::string> response_columns;
  std::string label_column = "label";  // picked up when present
  bool center = false;                 // center responses and predictors
  bool expand_second_order = false;    // squares + pairwise products + intercept

  void validate() const;
};

Dataset ingest(const std::string& path, const CsvSchema& schema);

// Writes y1..yq, x1..xp (and label when present) with round-trip precision.
void write_dataset_csv(const std::string& path, const Dataset& data);

}  // namespace rrmix
