#pragma once

#include "xpca/matrix.hpp"
#include "xpca/model.hpp"

#include <string>
#include <vector>

namespace xpca {

// A fitted model plus what the CLI needs to impute without the input file.
struct ModelFile {
  FactorModel model;
  std::vector<std::string> column_names;
  std::vector<Entry> missing;  // unobserved cells of the training data
};

inline constexpr int kModelFormatVersion = 1;

std::string model_to_json(const ModelFile& file);
ModelFile model_from_json(const std::string& text);

void save_model(const std::string& path, const ModelFile& file);
ModelFile load_model(const std::string& path);

}  // namespace xpca
